#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ensdep/audio_io.hpp"
#include "ensdep/random.hpp"

namespace ensdep {

inline constexpr double kDefaultThreshold = 0.5;

/// One machine's sample probabilities for one speaker, ordered by crop.
struct SpeakerScores {
  std::vector<std::uint32_t> crop_indices;
  std::vector<double> probabilities;
};

/// Sample-level output of one machine, keyed by speaker id.
struct PredictionSet {
  int machine = 0;
  std::map<std::string, SpeakerScores> speakers;

  void validate() const;
};

using SpeakerLabels = std::map<std::string, int>;

enum class FusionMethod { average_probabilities = 1, pooled_mode = 2, mode_of_modes = 3 };

FusionMethod fusion_method_from_int(int method);

struct EnsembleConfig {
  int machines = 50;
  FusionMethod method = FusionMethod::average_probabilities;
  double threshold = kDefaultThreshold;
  std::uint64_t tie_seed = 0;

  void validate() const;
};

/// 1 iff p >= threshold.
std::vector<int> sample_labels(std::span<const double> probabilities, double threshold = kDefaultThreshold);

/// Averages closer than this below the threshold count as on it, so that a
/// mean that is exactly the threshold in real arithmetic is not lost to
/// summation rounding.
inline constexpr double kMeanBoundaryTolerance = 1e-12;

/// 1 iff mean(P) >= threshold (up to kMeanBoundaryTolerance).
int speaker_label_mean(std::span<const double> probabilities, double threshold = kDefaultThreshold);

/// Majority label; an exact tie is settled by a fair coin from `rng`. The
/// generator is only consumed on ties.
int speaker_label_mode(std::span<const int> labels, Rng& rng);

/// Method 1: average each sample's probability across machines, then
/// threshold the per-speaker mean.
SpeakerLabels fuse_method1(std::span<const PredictionSet> machines, double threshold = kDefaultThreshold);

/// Method 2: mode over all M * L_i sample labels of a speaker.
SpeakerLabels fuse_method2(std::span<const PredictionSet> machines, Rng& rng,
                           double threshold = kDefaultThreshold);

/// Method 3: per-machine speaker mode, then the mode of those M votes.
SpeakerLabels fuse_method3(std::span<const PredictionSet> machines, Rng& rng,
                           double threshold = kDefaultThreshold);

SpeakerLabels fuse(std::span<const PredictionSet> machines, FusionMethod method, Rng& rng,
                   double threshold = kDefaultThreshold);

/// Single-machine speaker decisions: mean rule for method 1, mode otherwise.
SpeakerLabels single_machine_labels(const PredictionSet& machine, FusionMethod method, Rng& rng,
                                    double threshold = kDefaultThreshold);

struct CurvePoint {
  int machines = 0;
  // Indexed by class: 0 = non-depressed, 1 = depressed.
  std::array<double, 2> f1_mean{};
  std::array<double, 2> f1_std{};
};

struct CurveOptions {
  std::vector<int> machine_counts;
  int combinations = 200;
  FusionMethod method = FusionMethod::average_probabilities;
  std::uint64_t seed = 0;
  double threshold = kDefaultThreshold;
  int jobs = 1;
};

/// For every M, fuses `combinations` random M-subsets of the pool (drawn
/// without replacement) and reports mean and sample standard deviation of
/// the per-class speaker-level F1. When M equals the pool size there is a
/// single distinct subset, which is evaluated once (std = 0).
std::vector<CurvePoint> f1_vs_m_experiment(std::span<const PredictionSet> pool, const SpeakerLabels& truth,
                                           const CurveOptions& options);

// Prediction interchange CSV: machine,speaker_id,crop_index,probability,label
void write_predictions_csv(const std::filesystem::path& path, std::span<const PredictionSet> machines,
                           double threshold = kDefaultThreshold);
std::vector<PredictionSet> read_predictions_csv(const std::filesystem::path& path);

}  // namespace ensdep
