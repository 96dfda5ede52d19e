#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ensdep/audio_io.hpp"
#include "ensdep/sampling.hpp"

namespace ensdep {

struct StftConfig {
  double window_s = 0.064;
  double hop_s = 0.032;
  int n_fft = 1024;

  int window_samples(int sample_rate) const;
  int hop_samples(int sample_rate) const;
  int frequency_bins() const { return n_fft / 2 + 1; }
  /// Number of frames for a signal of `n_samples`: floor(n_samples / hop).
  int frames(std::size_t n_samples, int sample_rate) const;
  void validate(int sample_rate) const;
};

/// Normalized (or raw) log-magnitude spectrogram: rows are frequency bins,
/// columns are frames.
struct LogSpectrogram {
  Eigen::MatrixXf values;
  std::string speaker_id;
  std::uint32_t crop_index = 0;
  Label label = Label::non_depressed;
  bool normalized = false;
};

/// 0.54 - 0.46 cos(2 pi i / (n - 1)); n must be >= 2.
std::vector<double> hamming_window(int n);

/// In-place forward DFT, X[k] = sum_n x[n] exp(-2 pi i k n / N), via FFTW.
void dft_inplace(std::vector<std::complex<double>>& data);

/// One column of the STFT before bin truncation: window, zero-pad to n_fft,
/// transform. `frame` may be shorter than the window (it is zero-extended).
std::vector<std::complex<double>> windowed_spectrum(std::span<const double> frame,
                                                    std::span<const double> window, int n_fft);

/// Frame t covers samples [t*hop, t*hop + win), zero-padded past the end;
/// only bins 0..n_fft/2 are kept.
Eigen::MatrixXcd stft(std::span<const double> samples, int sample_rate, const StftConfig& cfg);
inline Eigen::MatrixXcd stft(const SampleCrop& crop, const StftConfig& cfg) {
  return stft(crop.samples, crop.sample_rate, cfg);
}

inline constexpr double kLogEpsilon = 1e-10;

/// Elementwise ln(|z| + epsilon).
Eigen::MatrixXd log_magnitude(const Eigen::MatrixXcd& spectrum, double epsilon = kLogEpsilon);

/// (m - min) / (max - min); a constant matrix maps to zeros.
Eigen::MatrixXd minmax_normalize(const Eigen::MatrixXd& m);

/// log_magnitude(stft(crop)) without normalization.
LogSpectrogram featurize_raw(const SampleCrop& crop, const StftConfig& cfg);
/// minmax_normalize(log_magnitude(stft(crop))).
LogSpectrogram featurize(const SampleCrop& crop, const StftConfig& cfg);
/// Normalizes a raw spectrogram in double precision.
LogSpectrogram normalize(const LogSpectrogram& raw);

/// Power-weighted mean frequency of the clip, in Hz, averaged over frames.
double spectral_centroid(const AudioClip& clip, int n_fft = 1024);

// ---------------------------------------------------------------------------
// Feature cache ("LSPG")
//
//   magic "LSPG" | u16 version | u32 F0 | u32 T0 | u32 count
//   count x { str speaker_id | u32 crop_index | u8 label | F0*T0 f32 }
//
// Values are raw (pre-normalization) log magnitudes, frequency-major.

inline constexpr std::uint16_t kFeatureCacheVersion = 1;

std::string encode_feature_cache(std::span<const LogSpectrogram> raw);
void write_feature_cache(const std::filesystem::path& path, std::span<const LogSpectrogram> raw);

/// Loads raw spectrograms and normalizes each one unless `normalize_on_load`
/// is false.
std::vector<LogSpectrogram> read_feature_cache(const std::filesystem::path& path,
                                               bool normalize_on_load = true);
std::vector<LogSpectrogram> decode_feature_cache(std::string_view bytes, const std::string& source,
                                                 bool normalize_on_load = true);

}  // namespace ensdep
