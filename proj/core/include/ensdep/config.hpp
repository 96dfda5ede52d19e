#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ensdep/ensemble.hpp"
#include "ensdep/features.hpp"
#include "ensdep/network.hpp"
#include "ensdep/sampling.hpp"
#include "ensdep/trainer.hpp"

namespace ensdep {

struct SynthSection {
  int train_per_class = 31;
  int test_per_class = 10;
  double duration_s = 720.0;
  int sample_rate = 16000;
};

struct SamplingSection {
  double crop_s = kDefaultCropSeconds;
  std::size_t eval_cap = kDefaultEvalCap;
  bool trim = true;
  double trim_frame_s = kDefaultTrimFrameSeconds;
  double trim_floor_db = kDefaultTrimFloorDb;
};

struct CurveSection {
  std::vector<int> machine_counts;  // empty: 1..pool size
  int combinations = 200;
};

struct CrossValSection {
  int folds = 5;
  bool stratified = true;
};

/// Every knob of a pipeline run. Defaults reproduce the reference setup:
/// N = 128, k = 5, s = 4, p = 4, n4 = 128, 50 epochs, batch 80, M = 50 with
/// probability averaging.
///
/// Text form is one `key = value` per line, keys carrying a section prefix
/// (`train.epochs = 50`). `#` starts a comment. Unknown keys are errors.
struct RunConfig {
  std::uint64_t seed = 0;
  int jobs = 1;
  SynthSection synth;
  SamplingSection sampling;
  StftConfig stft;
  NetworkConfig network;  // F0 and T0 are derived, not configurable
  TrainConfig train;
  EnsembleConfig ensemble;
  CurveSection curve;
  CrossValSection cv;

  /// Applies one override. Throws a config error on unknown keys or values
  /// that do not parse as the key's type.
  void set(std::string_view key, std::string_view value);
  std::string get(std::string_view key) const;
  static const std::vector<std::string>& keys();

  /// Parses config text on top of the current values.
  void merge_text(std::string_view text, std::string_view source = "<config>");

  /// Canonical text with every key, in registry order.
  std::string dump() const;

  /// Copies the top-level seed into the sections that consume it, derives
  /// F0/T0 from the STFT and crop settings, and validates everything.
  void resolve();

  std::uint64_t sampling_seed() const;
  std::uint64_t synth_seed(Split split) const;
};

RunConfig load_config_file(const std::string& path);

}  // namespace ensdep
