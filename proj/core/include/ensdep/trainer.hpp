#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "ensdep/features.hpp"
#include "ensdep/network.hpp"

namespace ensdep {

struct TrainConfig {
  int epochs = 50;
  int batch_size = 80;
  double lr_start = 1.0;
  double lr_end = 0.01;
  double rho = 0.95;
  double eps = 1e-6;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Running averages E[g^2] and E[dx^2], one entry per parameter.
struct AdadeltaState {
  NetworkParams eg2;
  NetworkParams edx2;

  static AdadeltaState zeros(const NetworkConfig& config);
};

struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double val_loss = 0.0;  // NaN without a validation set
  double val_acc = 0.0;   // NaN without a validation set
};

using TrainHistory = std::vector<EpochRecord>;

/// Geometric decay from lr_start (epoch 0) to lr_end (epoch epochs - 1).
double lr_schedule(double epoch, const TrainConfig& cfg);

/// In-place Adadelta update scaled by `lr`:
///   eg2  <- rho eg2 + (1 - rho) g^2
///   dx    = -g sqrt(edx2 + eps) / sqrt(eg2 + eps)
///   edx2 <- rho edx2 + (1 - rho) dx^2
///   theta <- theta + lr dx
void adadelta_step(NetworkParams& params, const Gradients& grads, AdadeltaState& state, double lr,
                   double rho, double eps);

/// [begin, end) ranges of consecutive batches over n items; the last batch
/// may be short.
std::vector<std::pair<std::size_t, std::size_t>> batch_ranges(std::size_t n, std::size_t batch_size);

/// Stacks spectrograms side by side into an F0 x (B*T0) double matrix.
Eigen::MatrixXd stack_inputs(std::span<const LogSpectrogram* const> items);

/// Sample-level probabilities, evaluated in chunks of `chunk` inputs.
std::vector<double> predict(const NetworkParams& params, std::span<const LogSpectrogram> items,
                            std::size_t chunk = 64);

struct TrainResult {
  NetworkParams params;
  TrainHistory history;
};

/// Trains one network. Initialization uses `init_seed` and data order uses
/// cfg.seed.
TrainResult train_machine(std::span<const LogSpectrogram> train_set, std::span<const LogSpectrogram> val_set,
                          const TrainConfig& cfg, const NetworkConfig& net_cfg, std::uint64_t init_seed);

/// train_machine with init_seed = cfg.seed.
TrainResult train(std::span<const LogSpectrogram> train_set, std::span<const LogSpectrogram> val_set,
                  const TrainConfig& cfg, const NetworkConfig& net_cfg);

/// Machine m starts from init seed cfg.seed + m; all machines see the same
/// data order. Up to `jobs` machines train concurrently. `on_done` (if set)
/// is called from worker threads as each machine finishes.
std::vector<TrainResult> train_ensemble(std::span<const LogSpectrogram> train_set,
                                        std::span<const LogSpectrogram> val_set, const TrainConfig& cfg,
                                        const NetworkConfig& net_cfg, int machines, int jobs = 1,
                                        const std::function<void(int, const TrainResult&)>& on_done = {});

void write_history_csv(const std::filesystem::path& path, const TrainHistory& history);

/// Runs fn(i) for i in [0, n) on up to `jobs` threads.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace ensdep
