#include "ensdep/trainer.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "ensdep/binary_io.hpp"
#include "ensdep/error.hpp"
#include "ensdep/random.hpp"

namespace ensdep {

void TrainConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCategory::config, std::string("train: ") + what);
  };
  require(epochs >= 1, "epochs must be >= 1");
  require(batch_size >= 1, "batch_size must be >= 1");
  // lr_start = lr_end = 0 is allowed as a frozen-parameter degenerate case.
  require(lr_end >= 0.0 && lr_end <= lr_start, "need 0 <= lr_end <= lr_start");
  require(lr_end > 0.0 || lr_start == 0.0, "lr_end may only be 0 when lr_start is 0");
  require(rho > 0.0 && rho < 1.0, "rho must lie in (0, 1)");
  require(eps > 0.0, "eps must be positive");
}

AdadeltaState AdadeltaState::zeros(const NetworkConfig& config) {
  return {NetworkParams::zeros(config), NetworkParams::zeros(config)};
}

double lr_schedule(double epoch, const TrainConfig& cfg) {
  if (cfg.epochs <= 1 || cfg.lr_start == cfg.lr_end || epoch <= 0.0) return cfg.lr_start;
  const double last = cfg.epochs - 1;
  if (epoch >= last) return cfg.lr_end;
  return cfg.lr_start * std::pow(cfg.lr_end / cfg.lr_start, epoch / last);
}

void adadelta_step(NetworkParams& params, const Gradients& grads, AdadeltaState& state, double lr,
                   double rho, double eps) {
  grads.check_shapes();
  if (!(grads.config == params.config) || !(state.eg2.config == params.config) ||
      !(state.edx2.config == params.config)) {
    throw Error(ErrorCategory::data, "adadelta: parameter, gradient and state shapes differ");
  }
  auto theta = params.blocks();
  const auto g = grads.blocks();
  auto eg2 = state.eg2.blocks();
  auto edx2 = state.edx2.blocks();
  for (std::size_t b = 0; b < theta.size(); ++b) {
    for (std::size_t i = 0; i < theta[b].size(); ++i) {
      const double gi = g[b][i];
      eg2[b][i] = rho * eg2[b][i] + (1.0 - rho) * gi * gi;
      const double dx = -gi * std::sqrt(edx2[b][i] + eps) / std::sqrt(eg2[b][i] + eps);
      edx2[b][i] = rho * edx2[b][i] + (1.0 - rho) * dx * dx;
      theta[b][i] += lr * dx;
    }
  }
}

std::vector<std::pair<std::size_t, std::size_t>> batch_ranges(std::size_t n, std::size_t batch_size) {
  if (batch_size == 0) throw Error(ErrorCategory::config, "batch size must be positive");
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t start = 0; start < n; start += batch_size) out.emplace_back(start, std::min(n, start + batch_size));
  return out;
}

Eigen::MatrixXd stack_inputs(std::span<const LogSpectrogram* const> items) {
  if (items.empty()) return {};
  const auto rows = items.front()->values.rows();
  const auto cols = items.front()->values.cols();
  Eigen::MatrixXd out(rows, cols * static_cast<Eigen::Index>(items.size()));
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& v = items[i]->values;
    if (v.rows() != rows || v.cols() != cols) {
      throw Error(ErrorCategory::data, "spectrograms in one batch must share a shape");
    }
    out.middleCols(static_cast<Eigen::Index>(i) * cols, cols) = v.cast<double>();
  }
  return out;
}

std::vector<double> predict(const NetworkParams& params, std::span<const LogSpectrogram> items,
                            std::size_t chunk) {
  std::vector<double> out;
  out.reserve(items.size());
  std::vector<const LogSpectrogram*> ptrs;
  for (std::size_t start = 0; start < items.size(); start += chunk) {
    const auto stop = std::min(items.size(), start + chunk);
    ptrs.clear();
    for (auto i = start; i < stop; ++i) ptrs.push_back(&items[i]);
    const auto cache = forward_batch(params, stack_inputs(ptrs));
    for (Eigen::Index b = 0; b < cache.probabilities.size(); ++b) out.push_back(cache.probabilities(b));
  }
  return out;
}

namespace {

struct Evaluation {
  double loss = std::numeric_limits<double>::quiet_NaN();
  double accuracy = std::numeric_limits<double>::quiet_NaN();
};

Evaluation evaluate_samples(const NetworkParams& params, std::span<const LogSpectrogram> items) {
  Evaluation e;
  if (items.empty()) return e;
  const auto probs = predict(params, items);
  double loss = 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const int y = to_int(items[i].label);
    loss += loss_bce(probs[i], y);
    if ((probs[i] >= 0.5 ? 1 : 0) == y) ++correct;
  }
  e.loss = loss / static_cast<double>(items.size());
  e.accuracy = static_cast<double>(correct) / static_cast<double>(items.size());
  return e;
}

}  // namespace

TrainResult train_machine(std::span<const LogSpectrogram> train_set, std::span<const LogSpectrogram> val_set,
                          const TrainConfig& cfg, const NetworkConfig& net_cfg, std::uint64_t init_seed) {
  cfg.validate();
  net_cfg.validate();
  if (train_set.empty()) throw Error(ErrorCategory::data, "train: empty training set");
  for (const auto& item : train_set) {
    if (item.values.rows() != net_cfg.F0 || item.values.cols() != net_cfg.T0) {
      throw Error(ErrorCategory::data, "train: spectrogram of speaker '" + item.speaker_id + "' is " +
                                           std::to_string(item.values.rows()) + "x" +
                                           std::to_string(item.values.cols()) + ", network expects " +
                                           std::to_string(net_cfg.F0) + "x" + std::to_string(net_cfg.T0));
    }
  }

  TrainResult result{init_params(net_cfg, init_seed), {}};
  auto state = AdadeltaState::zeros(net_cfg);
  Rng order_rng(derive_seed(cfg.seed, {0x6f72646572ULL}));

  std::vector<std::size_t> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<const LogSpectrogram*> batch_items;
  std::vector<int> batch_labels;
  const auto batch_size = static_cast<std::size_t>(cfg.batch_size);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle(order, order_rng);
    const double lr = lr_schedule(epoch, cfg);
    double loss_sum = 0.0;
    const auto ranges = batch_ranges(order.size(), batch_size);
    for (std::size_t batch_index = 0; batch_index < ranges.size(); ++batch_index) {
      const auto [start, stop] = ranges[batch_index];
      batch_items.clear();
      batch_labels.clear();
      for (auto i = start; i < stop; ++i) {
        batch_items.push_back(&train_set[order[i]]);
        batch_labels.push_back(to_int(train_set[order[i]].label));
      }
      const auto inputs = stack_inputs(batch_items);
      const auto cache = forward_batch(result.params, inputs);
      double batch_loss = 0.0;
      for (std::size_t b = 0; b < batch_labels.size(); ++b) {
        batch_loss += loss_bce(cache.probabilities(static_cast<Eigen::Index>(b)), batch_labels[b]);
      }
      if (!std::isfinite(batch_loss) || !cache.probabilities.allFinite()) {
        throw Error(ErrorCategory::training, "train: non-finite loss at epoch " + std::to_string(epoch) +
                                                 ", batch " + std::to_string(batch_index));
      }
      loss_sum += batch_loss;
      const auto grads = backward_batch(result.params, cache, inputs, batch_labels);
      if (!grads.all_finite()) {
        throw Error(ErrorCategory::training, "train: non-finite gradient at epoch " + std::to_string(epoch) +
                                                 ", batch " + std::to_string(batch_index));
      }
      adadelta_step(result.params, grads, state, lr, cfg.rho, cfg.eps);
    }
    if (!result.params.all_finite()) {
      throw Error(ErrorCategory::training, "train: parameters became non-finite in epoch " + std::to_string(epoch));
    }
    const auto val = evaluate_samples(result.params, val_set);
    result.history.push_back(
        {epoch, lr, loss_sum / static_cast<double>(train_set.size()), val.loss, val.accuracy});
  }
  return result;
}

TrainResult train(std::span<const LogSpectrogram> train_set, std::span<const LogSpectrogram> val_set,
                  const TrainConfig& cfg, const NetworkConfig& net_cfg) {
  return train_machine(train_set, val_set, cfg, net_cfg, cfg.seed);
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  const auto workers = static_cast<std::size_t>(std::max(1, jobs));
  if (workers == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < std::min(workers, n); ++w) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::vector<TrainResult> train_ensemble(std::span<const LogSpectrogram> train_set,
                                        std::span<const LogSpectrogram> val_set, const TrainConfig& cfg,
                                        const NetworkConfig& net_cfg, int machines, int jobs,
                                        const std::function<void(int, const TrainResult&)>& on_done) {
  if (machines < 1) throw Error(ErrorCategory::config, "train_ensemble: machine count must be >= 1");
  std::vector<TrainResult> results(static_cast<std::size_t>(machines));
  parallel_for(results.size(), jobs, [&](std::size_t m) {
    results[m] = train_machine(train_set, val_set, cfg, net_cfg, cfg.seed + m);
    if (on_done) on_done(static_cast<int>(m), results[m]);
  });
  return results;
}

void write_history_csv(const std::filesystem::path& path, const TrainHistory& history) {
  std::string out = "epoch,lr,train_loss,val_loss,val_acc\n";
  char line[256];
  for (const auto& r : history) {
    std::snprintf(line, sizeof line, "%d,%.10g,%.10g,%.10g,%.10g\n", r.epoch, r.lr, r.train_loss, r.val_loss,
                  r.val_acc);
    out += line;
  }
  write_file_atomic(path, out);
}

}  // namespace ensdep
