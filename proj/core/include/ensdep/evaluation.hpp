#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ensdep/ensemble.hpp"
#include "ensdep/features.hpp"
#include "ensdep/network.hpp"
#include "ensdep/trainer.hpp"

namespace ensdep {

/// Counts with class 1 (depressed) as the positive class.
struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  /// The same counts with class 0 treated as positive.
  ConfusionCounts flipped() const { return {tn, fn, tp, fp}; }
  bool operator==(const ConfusionCounts&) const = default;
};

/// Keys of truth and predicted must match exactly.
ConfusionCounts confusion(const SpeakerLabels& truth, const SpeakerLabels& predicted);
/// Position-wise comparison of two label lists (used for pooled rows).
ConfusionCounts confusion(std::span<const int> truth, std::span<const int> predicted);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  // False when the ratio had a zero denominator and 0 was reported instead.
  bool precision_defined = true;
  bool recall_defined = true;
  bool f1_defined = true;
};

struct MetricsReport {
  double accuracy = 0.0;
  bool accuracy_defined = true;
  std::array<ClassMetrics, 2> per_class;  // [0] non-depressed, [1] depressed
};

double f1_score(double precision, double recall);
MetricsReport metrics(const ConfusionCounts& counts);

struct Fold {
  std::vector<std::string> train;
  std::vector<std::string> validation;
};

struct FoldPlan {
  std::vector<Fold> folds;
};

/// Speaker-disjoint k-fold split. Stratified mode shuffles each class and
/// deals its speakers round-robin; otherwise all speakers are dealt
/// together. k = 1 yields a single fold that trains on everyone.
FoldPlan kfold_split(const std::map<std::string, Label>& speakers, int k, std::uint64_t seed,
                     bool stratified = true);

struct CrossValOptions {
  int folds = 5;
  std::uint64_t seed = 0;
  bool stratified = true;
  int jobs = 1;
};

struct PooledRow {
  int fold = 0;
  std::string speaker_id;
  int truth = 0;
  int predicted = 0;
};

struct CrossValResult {
  FoldPlan plan;
  MetricsReport pooled;
  std::vector<MetricsReport> per_fold;
  std::vector<PooledRow> rows;  // folds * test speakers
  std::vector<std::vector<TrainResult>> models;  // per fold, per machine
};

/// Speaker truth labels of a set of spectrograms.
SpeakerLabels truth_labels(std::span<const LogSpectrogram> items);

/// Runs every machine over `items` and groups probabilities per speaker.
PredictionSet predict_speakers(const NetworkParams& params, std::span<const LogSpectrogram> items, int machine);

/// Trains a fold-wise ensemble on each training split, predicts every test
/// speaker with it, and scores the concatenation of all folds' predictions.
CrossValResult cross_validate(std::span<const LogSpectrogram> corpus, std::span<const LogSpectrogram> test,
                              const NetworkConfig& net_cfg, const TrainConfig& train_cfg,
                              const EnsembleConfig& ens_cfg, const CrossValOptions& options);

/// CSV with header scope,class,accuracy,precision,recall,f1.
void write_metrics_csv(const std::filesystem::path& path,
                       std::span<const std::pair<std::string, MetricsReport>> scoped);

}  // namespace ensdep
