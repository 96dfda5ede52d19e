#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ensdep/audio_io.hpp"

namespace ensdep {

inline constexpr double kDefaultCropSeconds = 4.0;
inline constexpr std::size_t kDefaultEvalCap = 89;

/// Fixed-length excerpt of one speaker's clip.
struct SampleCrop {
  std::string speaker_id;
  std::uint32_t crop_index = 0;
  std::vector<double> samples;
  int sample_rate = 16000;
  Label label = Label::non_depressed;
};

/// Number of samples in one crop of `crop_s` seconds.
std::size_t crop_length(double crop_s, int sample_rate);

/// Number of whole crops a clip of `n_samples` yields.
std::size_t crop_count(std::size_t n_samples, double crop_s, int sample_rate);

/// Consecutive, non-overlapping windows from offset 0; the short tail is
/// discarded. A clip without a label yields crops labelled non_depressed.
std::vector<SampleCrop> crop(const AudioClip& clip, double crop_s = kDefaultCropSeconds);

struct BalancedPlan {
  std::size_t crops_per_speaker = 0;   // c
  std::size_t speakers_per_class = 0;  // K
  /// Indexed by class (0 = non-depressed, 1 = depressed), sorted by id.
  std::array<std::vector<std::string>, 2> selected;

  std::size_t total_samples() const { return 2 * speakers_per_class * crops_per_speaker; }
};

/// Picks the crop count c and per-class speaker count K maximising 2*K*c
/// subject to every chosen speaker owning at least c crops. Ties prefer the
/// larger c. When more speakers are eligible than needed, K are drawn
/// uniformly per class.
BalancedPlan plan_balanced(const std::map<std::string, std::size_t>& crop_counts,
                           const std::map<std::string, Label>& labels, std::uint64_t seed);

/// Reference to one crop by speaker and index.
struct CropRef {
  std::string speaker_id;
  std::uint32_t crop_index = 0;

  auto operator<=>(const CropRef&) const = default;
};

/// Chooses which crops a balanced plan uses, in final (shuffled) order.
/// This is the selection logic behind materialize_training_set, usable when
/// the crops themselves are produced lazily.
std::vector<CropRef> select_training_crops(const BalancedPlan& plan,
                                           const std::map<std::string, std::size_t>& crop_counts,
                                           std::uint64_t seed);

std::vector<SampleCrop> materialize_training_set(const BalancedPlan& plan,
                                                 std::span<const SampleCrop> crops,
                                                 std::uint64_t seed);

/// Keeps the first min(cap, available) crops of every speaker.
std::vector<SampleCrop> materialize_eval_set(std::span<const SampleCrop> crops,
                                             std::size_t cap = kDefaultEvalCap);

}  // namespace ensdep
