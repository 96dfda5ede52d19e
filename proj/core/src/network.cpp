#include "ensdep/network.hpp"

#include <algorithm>
#include <cmath>

#include "ensdep/binary_io.hpp"
#include "ensdep/error.hpp"
#include "ensdep/random.hpp"

namespace ensdep {

std::size_t NetworkConfig::parameter_count() const {
  const auto n = static_cast<std::size_t>(N);
  const auto h = static_cast<std::size_t>(n4);
  return n * static_cast<std::size_t>(F0) + n + h * static_cast<std::size_t>(n3()) + h + h + 1;
}

void NetworkConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCategory::config, std::string("network: ") + what);
  };
  require(F0 >= 1, "F0 must be >= 1");
  require(T0 >= 1, "T0 must be >= 1");
  require(N >= 1, "N must be >= 1");
  require(k >= 1, "pooling kernel k must be >= 1");
  require(s >= 1, "pooling stride s must be >= 1");
  require(p >= 0, "pooling padding p must be >= 0");
  require(n4 >= 1, "n4 must be >= 1");
}

NetworkParams NetworkParams::zeros(const NetworkConfig& config) {
  config.validate();
  NetworkParams p;
  p.config = config;
  p.W1 = Eigen::MatrixXd::Zero(config.N, config.F0);
  p.b1 = Eigen::VectorXd::Zero(config.N);
  p.W4 = Eigen::MatrixXd::Zero(config.n4, config.n3());
  p.b4 = Eigen::VectorXd::Zero(config.n4);
  p.wout = Eigen::VectorXd::Zero(config.n4);
  p.bout = 0.0;
  return p;
}

void NetworkParams::check_shapes() const {
  const auto& c = config;
  const bool ok = W1.rows() == c.N && W1.cols() == c.F0 && b1.size() == c.N && W4.rows() == c.n4 &&
                  W4.cols() == c.n3() && b4.size() == c.n4 && wout.size() == c.n4;
  if (!ok) throw Error(ErrorCategory::data, "network parameters do not match their configuration");
}

bool NetworkParams::all_finite() const {
  return W1.allFinite() && b1.allFinite() && W4.allFinite() && b4.allFinite() && wout.allFinite() &&
         std::isfinite(bout);
}

std::vector<std::span<double>> NetworkParams::blocks() {
  return {{W1.data(), static_cast<std::size_t>(W1.size())},
          {b1.data(), static_cast<std::size_t>(b1.size())},
          {W4.data(), static_cast<std::size_t>(W4.size())},
          {b4.data(), static_cast<std::size_t>(b4.size())},
          {wout.data(), static_cast<std::size_t>(wout.size())},
          {&bout, 1}};
}

std::vector<std::span<const double>> NetworkParams::blocks() const {
  return {{W1.data(), static_cast<std::size_t>(W1.size())},
          {b1.data(), static_cast<std::size_t>(b1.size())},
          {W4.data(), static_cast<std::size_t>(W4.size())},
          {b4.data(), static_cast<std::size_t>(b4.size())},
          {wout.data(), static_cast<std::size_t>(wout.size())},
          {&bout, 1}};
}

bool NetworkParams::operator==(const NetworkParams& other) const {
  return config == other.config && W1 == other.W1 && b1 == other.b1 && W4 == other.W4 &&
         b4 == other.b4 && wout == other.wout && bout == other.bout;
}

NetworkParams init_params(const NetworkConfig& config, std::uint64_t seed) {
  auto p = NetworkParams::zeros(config);
  Rng rng(derive_seed(seed, {0x696e6974ULL}));
  auto fill = [&rng](Eigen::Ref<Eigen::MatrixXd> m, double fan_in, double fan_out) {
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = rng.uniform(-bound, bound);
  };
  fill(p.W1, config.F0, config.N);
  fill(p.W4, config.n3(), config.n4);
  fill(p.wout, config.n4, 1);
  return p;
}

Eigen::MatrixXd conv_freq(const NetworkParams& params, const Eigen::Ref<const Eigen::MatrixXd>& x) {
  if (x.rows() != params.config.F0) {
    throw Error(ErrorCategory::data, "conv_freq: input has " + std::to_string(x.rows()) +
                                         " frequency rows, expected " + std::to_string(params.config.F0));
  }
  Eigen::MatrixXd out = params.W1 * x;
  out.colwise() += params.b1;
  return out.cwiseMax(0.0);
}

namespace {

// Pools one sample's block of columns [offset, offset + width) of `act`.
void pool_block(const Eigen::Ref<const Eigen::MatrixXd>& act, Eigen::Index offset, int width, int k,
                int s, Eigen::Ref<Eigen::MatrixXd> values, Eigen::Ref<Eigen::MatrixXi> argmax) {
  const int out_len = (width + s - 1) / s;
  for (Eigen::Index r = 0; r < act.rows(); ++r) {
    for (int j = 0; j < out_len; ++j) {
      const int begin = j * s;
      const int end = std::min(begin + k, width);
      double best = -INFINITY;
      int best_idx = kNoArgmax;
      for (int t = begin; t < end; ++t) {
        const double v = act(r, offset + t);
        if (v > best) {
          best = v;
          best_idx = t;
        }
      }
      const bool padded = begin + k > width;
      if (best_idx == kNoArgmax || (padded && best < 0.0)) {
        values(r, j) = 0.0;
        argmax(r, j) = kNoArgmax;
      } else {
        values(r, j) = best;
        argmax(r, j) = best_idx;
      }
    }
  }
}

void check_batch_input(const NetworkConfig& c, const Eigen::Ref<const Eigen::MatrixXd>& inputs) {
  if (inputs.rows() != c.F0 || inputs.cols() == 0 || inputs.cols() % c.T0 != 0) {
    throw Error(ErrorCategory::data, "network input is " + std::to_string(inputs.rows()) + "x" +
                                         std::to_string(inputs.cols()) + ", expected " +
                                         std::to_string(c.F0) + " x (B * " + std::to_string(c.T0) + ")");
  }
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

PoolResult maxpool_time(const Eigen::Ref<const Eigen::MatrixXd>& act, int k, int s) {
  if (k < 1 || s < 1) throw Error(ErrorCategory::config, "maxpool: k and s must be >= 1");
  const int width = static_cast<int>(act.cols());
  const int out_len = (width + s - 1) / s;
  PoolResult out{Eigen::MatrixXd(act.rows(), out_len), Eigen::MatrixXi(act.rows(), out_len)};
  pool_block(act, 0, width, k, s, out.values, out.argmax);
  return out;
}

ForwardCache forward_batch(const NetworkParams& params, const Eigen::Ref<const Eigen::MatrixXd>& inputs) {
  const auto& c = params.config;
  params.check_shapes();
  check_batch_input(c, inputs);
  const int batch = static_cast<int>(inputs.cols() / c.T0);
  const int t1 = c.T1();

  ForwardCache cache;
  cache.batch = batch;
  cache.conv_pre.noalias() = params.W1 * inputs;
  cache.conv_pre.colwise() += params.b1;
  cache.conv_out = cache.conv_pre.cwiseMax(0.0);

  cache.argmax.resize(c.N, static_cast<Eigen::Index>(batch) * t1);
  cache.pooled.resize(c.n3(), batch);
  Eigen::MatrixXd pooled_block(c.N, t1);
  for (int b = 0; b < batch; ++b) {
    pool_block(cache.conv_out, static_cast<Eigen::Index>(b) * c.T0, c.T0, c.k, c.s, pooled_block,
               cache.argmax.middleCols(static_cast<Eigen::Index>(b) * t1, t1));
    // Filter-major flatten: index n * T1 + j.
    for (int n = 0; n < c.N; ++n)
      for (int j = 0; j < t1; ++j) cache.pooled(n * t1 + j, b) = pooled_block(n, j);
  }

  cache.hidden_pre.noalias() = params.W4 * cache.pooled;
  cache.hidden_pre.colwise() += params.b4;
  cache.hidden = cache.hidden_pre.cwiseMax(0.0);
  cache.logits = (params.wout.transpose() * cache.hidden).transpose().array() + params.bout;
  cache.probabilities = cache.logits.unaryExpr([](double z) { return sigmoid(z); });
  return cache;
}

ForwardCache forward(const NetworkParams& params, const Eigen::Ref<const Eigen::MatrixXd>& x) {
  const auto& c = params.config;
  if (x.rows() != c.F0 || x.cols() != c.T0) {
    throw Error(ErrorCategory::data, "forward: input is " + std::to_string(x.rows()) + "x" +
                                         std::to_string(x.cols()) + ", expected " + std::to_string(c.F0) +
                                         "x" + std::to_string(c.T0));
  }
  return forward_batch(params, x);
}

double loss_bce(double p, int y) {
  const double q = std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp);
  return y != 0 ? -std::log(q) : -std::log(1.0 - q);
}

Gradients backward_batch(const NetworkParams& params, const ForwardCache& cache,
                         const Eigen::Ref<const Eigen::MatrixXd>& inputs, std::span<const int> labels) {
  const auto& c = params.config;
  check_batch_input(c, inputs);
  const int batch = cache.batch;
  if (inputs.cols() != static_cast<Eigen::Index>(batch) * c.T0 || labels.size() != static_cast<std::size_t>(batch) ||
      cache.conv_pre.cols() != inputs.cols()) {
    throw Error(ErrorCategory::data, "backward: cache, inputs and labels disagree on batch size");
  }
  const int t1 = c.T1();
  const double scale = 1.0 / batch;

  Eigen::VectorXd dlogit(batch);
  for (int b = 0; b < batch; ++b) dlogit(b) = (cache.probabilities(b) - labels[static_cast<std::size_t>(b)]) * scale;

  Gradients g;
  g.config = c;
  g.bout = dlogit.sum();
  g.wout.noalias() = cache.hidden * dlogit;

  Eigen::MatrixXd dhidden = params.wout * dlogit.transpose();
  dhidden = (cache.hidden_pre.array() > 0.0).select(dhidden, 0.0);
  g.W4.noalias() = dhidden * cache.pooled.transpose();
  g.b4 = dhidden.rowwise().sum();

  Eigen::MatrixXd dpooled;
  dpooled.noalias() = params.W4.transpose() * dhidden;

  Eigen::MatrixXd dconv = Eigen::MatrixXd::Zero(c.N, inputs.cols());
  for (int b = 0; b < batch; ++b) {
    const Eigen::Index col0 = static_cast<Eigen::Index>(b) * c.T0;
    for (int n = 0; n < c.N; ++n) {
      for (int j = 0; j < t1; ++j) {
        const int t = cache.argmax(n, static_cast<Eigen::Index>(b) * t1 + j);
        if (t != kNoArgmax) dconv(n, col0 + t) += dpooled(n * t1 + j, b);
      }
    }
  }
  dconv = (cache.conv_pre.array() > 0.0).select(dconv, 0.0);
  g.W1.noalias() = dconv * inputs.transpose();
  g.b1 = dconv.rowwise().sum();
  return g;
}

Gradients backward(const NetworkParams& params, const ForwardCache& cache,
                   const Eigen::Ref<const Eigen::MatrixXd>& x, int y) {
  const int labels[1] = {y};
  return backward_batch(params, cache, x, labels);
}

Gradients numerical_gradient(const NetworkParams& params, const Eigen::Ref<const Eigen::MatrixXd>& x,
                             int y, double h) {
  NetworkParams probe = params;
  Gradients g = NetworkParams::zeros(params.config);
  auto probe_blocks = probe.blocks();
  auto grad_blocks = g.blocks();
  for (std::size_t blk = 0; blk < probe_blocks.size(); ++blk) {
    for (std::size_t i = 0; i < probe_blocks[blk].size(); ++i) {
      double& theta = probe_blocks[blk][i];
      const double saved = theta;
      theta = saved + h;
      const double up = loss_bce(forward(probe, x).probability(), y);
      theta = saved - h;
      const double down = loss_bce(forward(probe, x).probability(), y);
      theta = saved;
      grad_blocks[blk][i] = (up - down) / (2.0 * h);
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// Model file

namespace {

void put_matrix(ByteWriter& w, const Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) w.f64(m(r, c));
}

void get_matrix(ByteReader& r, Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = r.f64();
}

void get_vector(ByteReader& r, Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = r.f64();
}

}  // namespace

std::string encode_model(const NetworkParams& params) {
  params.check_shapes();
  const auto& c = params.config;
  ByteWriter w;
  w.bytes("SDM1");
  w.u16(kModelVersion);
  for (const int field : {c.F0, c.T0, c.N, c.k, c.s, c.p, c.n4}) w.u32(static_cast<std::uint32_t>(field));
  put_matrix(w, params.W1);
  for (Eigen::Index i = 0; i < params.b1.size(); ++i) w.f64(params.b1(i));
  put_matrix(w, params.W4);
  for (Eigen::Index i = 0; i < params.b4.size(); ++i) w.f64(params.b4(i));
  for (Eigen::Index i = 0; i < params.wout.size(); ++i) w.f64(params.wout(i));
  w.f64(params.bout);
  const auto crc = crc32(w.buffer());
  w.u32(crc);
  return w.release();
}

NetworkParams decode_model(std::string_view bytes, const std::string& source) {
  if (bytes.size() < 4) throw Error(ErrorCategory::format, source + ": model file too short");
  const auto body = bytes.substr(0, bytes.size() - 4);
  ByteReader tail(bytes.substr(bytes.size() - 4), source);
  if (tail.u32() != crc32(body)) throw Error(ErrorCategory::format, source + ": model CRC mismatch");

  ByteReader r(body, source);
  if (r.bytes(4) != "SDM1") throw Error(ErrorCategory::format, source + ": not a model file (magic)");
  const auto version = r.u16();
  if (version != kModelVersion) {
    throw Error(ErrorCategory::format, source + ": unsupported model version " + std::to_string(version));
  }
  NetworkConfig c;
  for (int* field : {&c.F0, &c.T0, &c.N, &c.k, &c.s, &c.p, &c.n4}) *field = static_cast<int>(r.u32());
  try {
    c.validate();
  } catch (const Error& e) {
    throw Error(ErrorCategory::format, source + ": " + e.what());
  }
  if (r.remaining() != c.parameter_count() * 8) {
    throw Error(ErrorCategory::format, source + ": parameter payload size does not match configuration");
  }
  auto p = NetworkParams::zeros(c);
  get_matrix(r, p.W1);
  get_vector(r, p.b1);
  get_matrix(r, p.W4);
  get_vector(r, p.b4);
  get_vector(r, p.wout);
  p.bout = r.f64();
  return p;
}

void save_model(const std::filesystem::path& path, const NetworkParams& params) {
  write_file_atomic(path, encode_model(params));
}

NetworkParams load_model(const std::filesystem::path& path) {
  return decode_model(read_file(path), path.string());
}

}  // namespace ensdep
