#include "ensdep/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <map>
#include <mutex>

#include <fftw3.h>

#include "ensdep/binary_io.hpp"

namespace ensdep {

int StftConfig::window_samples(int sample_rate) const {
  return static_cast<int>(std::lround(window_s * sample_rate));
}

int StftConfig::hop_samples(int sample_rate) const {
  return static_cast<int>(std::lround(hop_s * sample_rate));
}

int StftConfig::frames(std::size_t n_samples, int sample_rate) const {
  return static_cast<int>(n_samples / static_cast<std::size_t>(hop_samples(sample_rate)));
}

void StftConfig::validate(int sample_rate) const {
  if (n_fft < 2) throw Error(ErrorCategory::config, "stft: n_fft must be >= 2");
  if (hop_samples(sample_rate) < 1) throw Error(ErrorCategory::config, "stft: hop must be positive");
  const int win = window_samples(sample_rate);
  if (win < 2) throw Error(ErrorCategory::config, "stft: window must span at least 2 samples");
  if (win > n_fft) {
    throw Error(ErrorCategory::config, "stft: window of " + std::to_string(win) +
                                           " samples exceeds n_fft = " + std::to_string(n_fft));
  }
}

std::vector<double> hamming_window(int n) {
  if (n < 2) throw Error(ErrorCategory::config, "hamming window needs n >= 2");
  std::vector<double> w(static_cast<std::size_t>(n));
  const double denom = static_cast<double>(n - 1);
  for (int i = 0; i < n; ++i) {
    w[static_cast<std::size_t>(i)] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i / denom);
  }
  return w;
}

namespace {

// Plans are cached per length; the planner is not thread-safe but executing
// an existing plan on new arrays is.
fftw_plan forward_plan(std::size_t n) {
  static std::mutex mutex;
  static std::map<std::size_t, fftw_plan> plans;
  std::lock_guard lock(mutex);
  auto& plan = plans[n];
  if (plan == nullptr) {
    auto* scratch = fftw_alloc_complex(n);
    plan = fftw_plan_dft_1d(static_cast<int>(n), scratch, scratch, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(scratch);
    if (plan == nullptr) throw Error(ErrorCategory::config, "fftw: cannot plan a transform of length " + std::to_string(n));
  }
  return plan;
}

}  // namespace

void dft_inplace(std::vector<std::complex<double>>& data) {
  if (data.size() <= 1) return;
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(forward_plan(data.size()), buf, buf);
}

std::vector<std::complex<double>> windowed_spectrum(std::span<const double> frame,
                                                    std::span<const double> window, int n_fft) {
  std::vector<std::complex<double>> buf(static_cast<std::size_t>(n_fft), 0.0);
  const std::size_t n = std::min(frame.size(), window.size());
  for (std::size_t i = 0; i < n; ++i) buf[i] = frame[i] * window[i];
  dft_inplace(buf);
  return buf;
}

Eigen::MatrixXcd stft(std::span<const double> samples, int sample_rate, const StftConfig& cfg) {
  cfg.validate(sample_rate);
  const int win = cfg.window_samples(sample_rate);
  const int hop = cfg.hop_samples(sample_rate);
  if (samples.size() < static_cast<std::size_t>(win)) {
    throw Error(ErrorCategory::data, "stft: window of " + std::to_string(win) +
                                         " samples is longer than the signal (" +
                                         std::to_string(samples.size()) + ")");
  }
  const int frames = cfg.frames(samples.size(), sample_rate);
  const int bins = cfg.frequency_bins();
  const auto window = hamming_window(win);

  Eigen::MatrixXcd out(bins, frames);
  for (int t = 0; t < frames; ++t) {
    const std::size_t start = static_cast<std::size_t>(t) * static_cast<std::size_t>(hop);
    const std::size_t avail = std::min<std::size_t>(static_cast<std::size_t>(win), samples.size() - start);
    const auto spectrum = windowed_spectrum(samples.subspan(start, avail), window, cfg.n_fft);
    for (int k = 0; k < bins; ++k) out(k, t) = spectrum[static_cast<std::size_t>(k)];
  }
  return out;
}

Eigen::MatrixXd log_magnitude(const Eigen::MatrixXcd& spectrum, double epsilon) {
  return (spectrum.array().abs() + epsilon).log().matrix();
}

Eigen::MatrixXd minmax_normalize(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return m;
  const double lo = m.minCoeff();
  const double hi = m.maxCoeff();
  if (!(hi > lo)) return Eigen::MatrixXd::Zero(m.rows(), m.cols());
  return ((m.array() - lo) / (hi - lo)).matrix();
}

LogSpectrogram featurize_raw(const SampleCrop& crop, const StftConfig& cfg) {
  LogSpectrogram out;
  out.values = log_magnitude(stft(crop, cfg)).cast<float>();
  out.speaker_id = crop.speaker_id;
  out.crop_index = crop.crop_index;
  out.label = crop.label;
  out.normalized = false;
  return out;
}

LogSpectrogram featurize(const SampleCrop& crop, const StftConfig& cfg) {
  LogSpectrogram out;
  out.values = minmax_normalize(log_magnitude(stft(crop, cfg))).cast<float>();
  out.speaker_id = crop.speaker_id;
  out.crop_index = crop.crop_index;
  out.label = crop.label;
  out.normalized = true;
  return out;
}

LogSpectrogram normalize(const LogSpectrogram& raw) {
  LogSpectrogram out = raw;
  out.values = minmax_normalize(raw.values.cast<double>()).cast<float>();
  out.normalized = true;
  return out;
}

double spectral_centroid(const AudioClip& clip, int n_fft) {
  const auto window = hamming_window(n_fft);
  const std::size_t step = static_cast<std::size_t>(n_fft);
  double weighted = 0.0;
  double total = 0.0;
  for (std::size_t start = 0; start + step <= clip.samples.size(); start += step) {
    const auto spectrum = windowed_spectrum(
        std::span<const double>(clip.samples).subspan(start, step), window, n_fft);
    for (int k = 0; k <= n_fft / 2; ++k) {
      const double power = std::norm(spectrum[static_cast<std::size_t>(k)]);
      const double freq = static_cast<double>(k) * clip.sample_rate / n_fft;
      weighted += freq * power;
      total += power;
    }
  }
  return total > 0.0 ? weighted / total : 0.0;
}

// ---------------------------------------------------------------------------
// Cache

std::string encode_feature_cache(std::span<const LogSpectrogram> raw) {
  std::uint32_t f0 = 0;
  std::uint32_t t0 = 0;
  if (!raw.empty()) {
    f0 = static_cast<std::uint32_t>(raw.front().values.rows());
    t0 = static_cast<std::uint32_t>(raw.front().values.cols());
  }
  ByteWriter w;
  w.bytes("LSPG");
  w.u16(kFeatureCacheVersion);
  w.u32(f0);
  w.u32(t0);
  w.u32(static_cast<std::uint32_t>(raw.size()));
  for (const auto& s : raw) {
    if (s.normalized) {
      throw Error(ErrorCategory::data, "feature cache stores raw spectrograms, got a normalized one");
    }
    if (s.values.rows() != f0 || s.values.cols() != t0) {
      throw Error(ErrorCategory::data, "feature cache entries must share one shape");
    }
    w.str(s.speaker_id);
    w.u32(s.crop_index);
    w.u8(static_cast<std::uint8_t>(to_int(s.label)));
    for (std::uint32_t f = 0; f < f0; ++f)
      for (std::uint32_t t = 0; t < t0; ++t) w.f32(s.values(f, t));
  }
  return w.release();
}

void write_feature_cache(const std::filesystem::path& path, std::span<const LogSpectrogram> raw) {
  write_file_atomic(path, encode_feature_cache(raw));
}

std::vector<LogSpectrogram> decode_feature_cache(std::string_view bytes, const std::string& source,
                                                 bool normalize_on_load) {
  ByteReader r(bytes, source);
  if (r.bytes(4) != "LSPG") throw Error(ErrorCategory::format, source + ": not a feature cache (magic)");
  const auto version = r.u16();
  if (version != kFeatureCacheVersion) {
    throw Error(ErrorCategory::format, source + ": unsupported cache version " + std::to_string(version));
  }
  const auto f0 = r.u32();
  const auto t0 = r.u32();
  const auto count = r.u32();
  std::vector<LogSpectrogram> out;
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    LogSpectrogram s;
    s.speaker_id = r.str();
    s.crop_index = r.u32();
    const auto label = r.u8();
    if (label > 1) throw Error(ErrorCategory::format, source + ": bad label byte");
    s.label = label_from_int(label);
    s.values.resize(f0, t0);
    for (std::uint32_t f = 0; f < f0; ++f)
      for (std::uint32_t t = 0; t < t0; ++t) s.values(f, t) = r.f32();
    out.push_back(normalize_on_load ? normalize(s) : std::move(s));
  }
  if (r.remaining() != 0) throw Error(ErrorCategory::format, source + ": trailing bytes after entries");
  return out;
}

std::vector<LogSpectrogram> read_feature_cache(const std::filesystem::path& path, bool normalize_on_load) {
  return decode_feature_cache(read_file(path), path.string(), normalize_on_load);
}

}  // namespace ensdep
