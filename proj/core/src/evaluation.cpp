#include "ensdep/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "ensdep/binary_io.hpp"
#include "ensdep/error.hpp"
#include "ensdep/random.hpp"

namespace ensdep {

namespace {

void tally(ConfusionCounts& c, int truth, int predicted) {
  if (truth == 1) {
    (predicted == 1 ? c.tp : c.fn) += 1;
  } else {
    (predicted == 1 ? c.fp : c.tn) += 1;
  }
}

ClassMetrics class_metrics(const ConfusionCounts& c) {
  ClassMetrics m;
  if (c.tp + c.fp > 0) {
    m.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  } else {
    m.precision_defined = false;
  }
  if (c.tp + c.fn > 0) {
    m.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  } else {
    m.recall_defined = false;
  }
  m.f1 = f1_score(m.precision, m.recall);
  m.f1_defined = m.precision_defined && m.recall_defined && m.precision + m.recall > 0.0;
  return m;
}

}  // namespace

ConfusionCounts confusion(const SpeakerLabels& truth, const SpeakerLabels& predicted) {
  if (truth.size() != predicted.size()) {
    throw Error(ErrorCategory::data, "confusion: truth has " + std::to_string(truth.size()) +
                                         " speakers, predictions " + std::to_string(predicted.size()));
  }
  ConfusionCounts c;
  for (auto t = truth.begin(), p = predicted.begin(); t != truth.end(); ++t, ++p) {
    if (t->first != p->first) {
      throw Error(ErrorCategory::data, "confusion: speaker '" + t->first + "' vs '" + p->first +
                                           "': key sets differ");
    }
    tally(c, t->second, p->second);
  }
  return c;
}

ConfusionCounts confusion(std::span<const int> truth, std::span<const int> predicted) {
  if (truth.size() != predicted.size()) throw Error(ErrorCategory::data, "confusion: list lengths differ");
  ConfusionCounts c;
  for (std::size_t i = 0; i < truth.size(); ++i) tally(c, truth[i], predicted[i]);
  return c;
}

double f1_score(double precision, double recall) {
  return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

MetricsReport metrics(const ConfusionCounts& counts) {
  MetricsReport r;
  if (counts.total() > 0) {
    r.accuracy = static_cast<double>(counts.tp + counts.tn) / static_cast<double>(counts.total());
  } else {
    r.accuracy_defined = false;
  }
  r.per_class[1] = class_metrics(counts);
  r.per_class[0] = class_metrics(counts.flipped());
  return r;
}

FoldPlan kfold_split(const std::map<std::string, Label>& speakers, int k, std::uint64_t seed, bool stratified) {
  if (k < 1) throw Error(ErrorCategory::config, "kfold: k must be >= 1");
  FoldPlan plan;
  if (k == 1) {
    Fold all;
    for (const auto& [id, label] : speakers) all.train.push_back(id);
    plan.folds.push_back(std::move(all));
    return plan;
  }

  std::vector<std::vector<std::string>> groups;
  if (stratified) {
    groups.resize(2);
    for (const auto& [id, label] : speakers) groups[static_cast<std::size_t>(to_int(label))].push_back(id);
    for (std::size_t cls = 0; cls < 2; ++cls) {
      if (groups[cls].size() < static_cast<std::size_t>(k)) {
        throw Error(ErrorCategory::data, "kfold: class " + std::to_string(cls) + " has " +
                                             std::to_string(groups[cls].size()) + " speakers, fewer than k = " +
                                             std::to_string(k));
      }
    }
  } else {
    groups.resize(1);
    for (const auto& [id, label] : speakers) groups[0].push_back(id);
    if (groups[0].size() < static_cast<std::size_t>(k)) {
      throw Error(ErrorCategory::data, "kfold: fewer speakers than folds");
    }
  }

  std::vector<std::set<std::string>> members(static_cast<std::size_t>(k));
  Rng rng(derive_seed(seed, {0x666f6c64ULL}));
  for (auto& group : groups) {
    shuffle(group, rng);
    for (std::size_t i = 0; i < group.size(); ++i) members[i % static_cast<std::size_t>(k)].insert(group[i]);
  }
  for (int f = 0; f < k; ++f) {
    Fold fold;
    for (const auto& [id, label] : speakers) {
      (members[static_cast<std::size_t>(f)].count(id) ? fold.validation : fold.train).push_back(id);
    }
    plan.folds.push_back(std::move(fold));
  }
  return plan;
}

SpeakerLabels truth_labels(std::span<const LogSpectrogram> items) {
  SpeakerLabels out;
  for (const auto& item : items) {
    const auto [it, inserted] = out.emplace(item.speaker_id, to_int(item.label));
    if (!inserted && it->second != to_int(item.label)) {
      throw Error(ErrorCategory::data, "speaker '" + item.speaker_id + "' carries conflicting labels");
    }
  }
  return out;
}

PredictionSet predict_speakers(const NetworkParams& params, std::span<const LogSpectrogram> items, int machine) {
  const auto probs = predict(params, items);
  // Gather per speaker in crop order.
  std::map<std::string, std::vector<std::pair<std::uint32_t, double>>> grouped;
  for (std::size_t i = 0; i < items.size(); ++i) grouped[items[i].speaker_id].emplace_back(items[i].crop_index, probs[i]);
  PredictionSet set;
  set.machine = machine;
  for (auto& [id, list] : grouped) {
    std::sort(list.begin(), list.end());
    auto& scores = set.speakers[id];
    for (const auto& [crop, p] : list) {
      scores.crop_indices.push_back(crop);
      scores.probabilities.push_back(p);
    }
  }
  return set;
}

namespace {

std::vector<LogSpectrogram> select_speakers(std::span<const LogSpectrogram> items,
                                            const std::vector<std::string>& ids) {
  const std::set<std::string> wanted(ids.begin(), ids.end());
  std::vector<LogSpectrogram> out;
  for (const auto& item : items)
    if (wanted.count(item.speaker_id)) out.push_back(item);
  return out;
}

}  // namespace

CrossValResult cross_validate(std::span<const LogSpectrogram> corpus, std::span<const LogSpectrogram> test,
                              const NetworkConfig& net_cfg, const TrainConfig& train_cfg,
                              const EnsembleConfig& ens_cfg, const CrossValOptions& options) {
  ens_cfg.validate();
  std::map<std::string, Label> speakers;
  for (const auto& item : corpus) speakers[item.speaker_id] = item.label;
  const auto truth = truth_labels(test);

  CrossValResult result;
  result.plan = kfold_split(speakers, options.folds, options.seed, options.stratified);

  std::vector<int> pooled_truth;
  std::vector<int> pooled_pred;
  for (std::size_t f = 0; f < result.plan.folds.size(); ++f) {
    const auto& fold = result.plan.folds[f];
    const auto train_items = select_speakers(corpus, fold.train);
    const auto val_items = select_speakers(corpus, fold.validation);
    auto machines = train_ensemble(train_items, val_items, train_cfg, net_cfg, ens_cfg.machines, options.jobs);

    std::vector<PredictionSet> predictions;
    for (std::size_t m = 0; m < machines.size(); ++m) {
      predictions.push_back(predict_speakers(machines[m].params, test, static_cast<int>(m)));
    }
    Rng tie_rng(derive_seed(ens_cfg.tie_seed, {static_cast<std::uint64_t>(f)}));
    const auto predicted = fuse(predictions, ens_cfg.method, tie_rng, ens_cfg.threshold);
    result.per_fold.push_back(metrics(confusion(truth, predicted)));
    for (const auto& [id, label] : truth) {
      const int guess = predicted.at(id);
      result.rows.push_back({static_cast<int>(f), id, label, guess});
      pooled_truth.push_back(label);
      pooled_pred.push_back(guess);
    }
    result.models.push_back(std::move(machines));
  }
  result.pooled = metrics(confusion(pooled_truth, pooled_pred));
  return result;
}

void write_metrics_csv(const std::filesystem::path& path,
                       std::span<const std::pair<std::string, MetricsReport>> scoped) {
  std::string out = "scope,class,accuracy,precision,recall,f1\n";
  char line[256];
  static constexpr std::array<const char*, 2> kNames = {"non_depressed", "depressed"};
  for (const auto& [scope, report] : scoped) {
    for (const std::size_t cls : {std::size_t{1}, std::size_t{0}}) {
      const auto& m = report.per_class[cls];
      std::snprintf(line, sizeof line, "%s,%s,%.6f,%.6f,%.6f,%.6f\n", scope.c_str(), kNames[cls], report.accuracy,
                    m.precision, m.recall, m.f1);
      out += line;
    }
  }
  write_file_atomic(path, out);
}

}  // namespace ensdep
