#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace ensdep {

/// Shape of the one-dimensional CNN.
///
///   input  F0 x T0 log-spectrogram
///   conv   N filters of F0 x 1, ReLU                -> N x T0
///   pool   temporal max, kernel k, stride s         -> N x T1, T1 = ceil(T0 / s)
///   flat   filter-major                             -> n3 = N * T1
///   dense  n4 units, ReLU
///   output 1 unit, sigmoid
struct NetworkConfig {
  int F0 = 513;
  int T0 = 125;
  int N = 128;
  int k = 5;
  int s = 4;
  int p = 4;  // right padding; the pooled length is ceil(T0 / s) regardless
  int n4 = 128;

  int T1() const { return (T0 + s - 1) / s; }
  int n3() const { return T1() * N; }
  std::size_t parameter_count() const;
  void validate() const;

  bool operator==(const NetworkConfig&) const = default;
};

struct NetworkParams {
  NetworkConfig config;
  Eigen::MatrixXd W1;    // N x F0
  Eigen::VectorXd b1;    // N
  Eigen::MatrixXd W4;    // n4 x n3
  Eigen::VectorXd b4;    // n4
  Eigen::VectorXd wout;  // n4
  double bout = 0.0;

  static NetworkParams zeros(const NetworkConfig& config);
  std::size_t size() const { return config.parameter_count(); }
  void check_shapes() const;
  bool all_finite() const;

  /// Contiguous parameter blocks in the fixed order W1, b1, W4, b4, wout, bout.
  std::vector<std::span<double>> blocks();
  std::vector<std::span<const double>> blocks() const;

  bool operator==(const NetworkParams& other) const;
};

using Gradients = NetworkParams;

/// Glorot-uniform weights, zero biases.
NetworkParams init_params(const NetworkConfig& config, std::uint64_t seed);

/// relu(W1 * x + b1) for an F0 x T columns input.
Eigen::MatrixXd conv_freq(const NetworkParams& params, const Eigen::Ref<const Eigen::MatrixXd>& x);

inline constexpr int kNoArgmax = -1;

struct PoolResult {
  Eigen::MatrixXd values;  // rows x ceil(T / s)
  Eigen::MatrixXi argmax;  // column index into the input, or kNoArgmax
};

/// Temporal max pooling with zero right-padding. Window j covers columns
/// [j*s, j*s + k); ties resolve to the smallest index. Expects non-negative
/// inputs (post-ReLU).
PoolResult maxpool_time(const Eigen::Ref<const Eigen::MatrixXd>& act, int k, int s);

/// Intermediate values of a forward pass over B inputs stacked side by side
/// (F0 x B*T0). Sample b occupies columns [b*T0, (b+1)*T0).
struct ForwardCache {
  int batch = 0;
  Eigen::MatrixXd conv_pre;     // N x B*T0
  Eigen::MatrixXd conv_out;     // N x B*T0
  Eigen::MatrixXi argmax;       // N x B*T1, column index local to the sample
  Eigen::MatrixXd pooled;       // n3 x B
  Eigen::MatrixXd hidden_pre;   // n4 x B
  Eigen::MatrixXd hidden;       // n4 x B
  Eigen::VectorXd logits;       // B
  Eigen::VectorXd probabilities;  // B

  double probability() const { return probabilities(0); }
};

ForwardCache forward(const NetworkParams& params, const Eigen::Ref<const Eigen::MatrixXd>& x);
ForwardCache forward_batch(const NetworkParams& params, const Eigen::Ref<const Eigen::MatrixXd>& inputs);

inline constexpr double kProbabilityClamp = 1e-12;

/// Binary cross-entropy with p clamped to [1e-12, 1 - 1e-12].
double loss_bce(double p, int y);

/// Exact gradient of loss_bce(forward(x), y).
Gradients backward(const NetworkParams& params, const ForwardCache& cache,
                   const Eigen::Ref<const Eigen::MatrixXd>& x, int y);

/// Gradient of the mean loss over a batch.
Gradients backward_batch(const NetworkParams& params, const ForwardCache& cache,
                         const Eigen::Ref<const Eigen::MatrixXd>& inputs, std::span<const int> labels);

/// Central differences (loss(theta + h) - loss(theta - h)) / 2h per parameter.
Gradients numerical_gradient(const NetworkParams& params, const Eigen::Ref<const Eigen::MatrixXd>& x,
                             int y, double h = 1e-5);

// ---------------------------------------------------------------------------
// Model file ("SDM1")
//
//   magic "SDM1" | u16 version | u32 F0 T0 N k s p n4
//   f64 blocks W1, b1, W4, b4, wout, bout (matrices row-major) | u32 CRC32
//
// The CRC covers every preceding byte.

inline constexpr std::uint16_t kModelVersion = 1;

std::string encode_model(const NetworkParams& params);
NetworkParams decode_model(std::string_view bytes, const std::string& source = "<memory>");
void save_model(const std::filesystem::path& path, const NetworkParams& params);
NetworkParams load_model(const std::filesystem::path& path);

}  // namespace ensdep
