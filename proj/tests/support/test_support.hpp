#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include "ensdep/features.hpp"
#include "ensdep/network.hpp"
#include "ensdep/random.hpp"

namespace ensdep::testing {

/// Fresh, empty directory under the system temp path; removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    Rng rng(std::random_device{}());
    path_ = std::filesystem::temp_directory_path() /
            ("ensdep_" + tag + "_" + std::to_string(rng.next() % 1000000007ULL));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Textbook O(n^2) DFT in long double, phases reduced modulo n before the
/// trigonometric call.
inline std::vector<std::complex<double>> naive_dft(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  const long double two_pi = 2.0L * std::numbers::pi_v<long double>;
  for (std::size_t k = 0; k < n; ++k) {
    long double re = 0, im = 0;
    for (std::size_t t = 0; t < n; ++t) {
      const long double angle = two_pi * static_cast<long double>((k * t) % n) / static_cast<long double>(n);
      re += x[t] * std::cos(angle);
      im -= x[t] * std::sin(angle);
    }
    out[k] = {static_cast<double>(re), static_cast<double>(im)};
  }
  return out;
}

/// Spectrogram with iid uniform values in [0, 1).
inline LogSpectrogram random_spectrogram(int rows, int cols, Rng& rng, const std::string& speaker = "s",
                                         std::uint32_t crop = 0, Label label = Label::non_depressed) {
  LogSpectrogram s;
  s.values.resize(rows, cols);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) s.values(r, c) = static_cast<float>(rng.uniform());
  s.speaker_id = speaker;
  s.crop_index = crop;
  s.label = label;
  s.normalized = true;
  return s;
}

/// Linearly separable toy data: class 1 is bright in the lower half of the
/// frequency axis, class 0 in the upper half.
inline std::vector<LogSpectrogram> separable_set(int rows, int cols, int speakers_per_class, int crops,
                                                 std::uint64_t seed) {
  Rng rng(seed);
  std::vector<LogSpectrogram> out;
  for (int cls = 0; cls < 2; ++cls) {
    for (int s = 0; s < speakers_per_class; ++s) {
      const std::string id = (cls ? "dep" : "non") + std::to_string(s);
      for (int c = 0; c < crops; ++c) {
        auto item = random_spectrogram(rows, cols, rng, id, static_cast<std::uint32_t>(c),
                                       cls ? Label::depressed : Label::non_depressed);
        const int lo = cls ? 0 : rows / 2, hi = cls ? rows / 2 : rows;
        for (int r = lo; r < hi; ++r) item.values.row(r).array() = item.values.row(r).array() * 0.3f + 0.7f;
        out.push_back(std::move(item));
      }
    }
  }
  return out;
}

inline NetworkConfig tiny_net(int F0, int T0, int N = 3, int k = 2, int s = 2, int n4 = 4) {
  NetworkConfig cfg;
  cfg.F0 = F0;
  cfg.T0 = T0;
  cfg.N = N;
  cfg.k = k;
  cfg.s = s;
  cfg.p = s;
  cfg.n4 = n4;
  return cfg;
}

/// Flattens every parameter into one vector in block order.
inline std::vector<double> flatten(const NetworkParams& p) {
  std::vector<double> out;
  for (auto block : p.blocks()) out.insert(out.end(), block.begin(), block.end());
  return out;
}

}  // namespace ensdep::testing
