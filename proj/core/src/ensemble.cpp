#include "ensdep/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "ensdep/binary_io.hpp"
#include "ensdep/error.hpp"
#include "ensdep/evaluation.hpp"
#include "ensdep/trainer.hpp"

namespace ensdep {

void PredictionSet::validate() const {
  for (const auto& [id, scores] : speakers) {
    if (scores.probabilities.empty()) {
      throw Error(ErrorCategory::data, "machine " + std::to_string(machine) + ": speaker '" + id +
                                           "' has no samples");
    }
    if (scores.crop_indices.size() != scores.probabilities.size()) {
      throw Error(ErrorCategory::data, "machine " + std::to_string(machine) + ": speaker '" + id +
                                           "' has mismatched crop/probability lists");
    }
    for (const double p : scores.probabilities) {
      if (!(p >= 0.0 && p <= 1.0)) {
        throw Error(ErrorCategory::data, "machine " + std::to_string(machine) + ": probability outside [0, 1]");
      }
    }
  }
}

FusionMethod fusion_method_from_int(int method) {
  if (method < 1 || method > 3) {
    throw Error(ErrorCategory::config, "fusion method must be 1, 2 or 3, got " + std::to_string(method));
  }
  return static_cast<FusionMethod>(method);
}

void EnsembleConfig::validate() const {
  if (machines < 1) throw Error(ErrorCategory::config, "ensemble: machines must be >= 1");
  if (!(threshold > 0.0 && threshold < 1.0)) throw Error(ErrorCategory::config, "ensemble: threshold must lie in (0, 1)");
  fusion_method_from_int(static_cast<int>(method));
}

std::vector<int> sample_labels(std::span<const double> probabilities, double threshold) {
  std::vector<int> out(probabilities.size());
  std::transform(probabilities.begin(), probabilities.end(), out.begin(),
                 [threshold](double p) { return p >= threshold ? 1 : 0; });
  return out;
}

int speaker_label_mean(std::span<const double> probabilities, double threshold) {
  if (probabilities.empty()) throw Error(ErrorCategory::data, "speaker_label_mean: no samples");
  const double mean = std::accumulate(probabilities.begin(), probabilities.end(), 0.0) /
                      static_cast<double>(probabilities.size());
  return mean >= threshold - kMeanBoundaryTolerance ? 1 : 0;
}

namespace {

int majority(std::size_t ones, std::size_t total, Rng& rng) {
  const std::size_t zeros = total - ones;
  if (ones > zeros) return 1;
  if (zeros > ones) return 0;
  return rng.coin() ? 1 : 0;
}

// Confirms every machine scores the same speakers with the same crops.
void check_aligned(std::span<const PredictionSet> machines) {
  if (machines.empty()) throw Error(ErrorCategory::data, "fusion needs at least one machine");
  const auto& ref = machines.front();
  ref.validate();
  for (const auto& m : machines.subspan(1)) {
    m.validate();
    if (m.speakers.size() != ref.speakers.size()) {
      throw Error(ErrorCategory::data, "machines " + std::to_string(ref.machine) + " and " +
                                           std::to_string(m.machine) + " score different speaker sets");
    }
    for (auto a = ref.speakers.begin(), b = m.speakers.begin(); a != ref.speakers.end(); ++a, ++b) {
      if (a->first != b->first || a->second.crop_indices != b->second.crop_indices) {
        throw Error(ErrorCategory::data, "machines " + std::to_string(ref.machine) + " and " +
                                             std::to_string(m.machine) + " disagree on the samples of speaker '" +
                                             a->first + "'");
      }
    }
  }
}

}  // namespace

int speaker_label_mode(std::span<const int> labels, Rng& rng) {
  if (labels.empty()) throw Error(ErrorCategory::data, "speaker_label_mode: no samples");
  const auto ones = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  return majority(ones, labels.size(), rng);
}

SpeakerLabels fuse_method1(std::span<const PredictionSet> machines, double threshold) {
  check_aligned(machines);
  SpeakerLabels out;
  const double m = static_cast<double>(machines.size());
  for (const auto& [id, ref] : machines.front().speakers) {
    std::vector<double> averaged(ref.probabilities.size(), 0.0);
    for (const auto& machine : machines) {
      const auto& probs = machine.speakers.at(id).probabilities;
      for (std::size_t l = 0; l < averaged.size(); ++l) averaged[l] += probs[l];
    }
    for (auto& p : averaged) p /= m;
    out[id] = speaker_label_mean(averaged, threshold);
  }
  return out;
}

SpeakerLabels fuse_method2(std::span<const PredictionSet> machines, Rng& rng, double threshold) {
  check_aligned(machines);
  SpeakerLabels out;
  for (const auto& [id, ref] : machines.front().speakers) {
    std::size_t ones = 0;
    std::size_t total = 0;
    for (const auto& machine : machines) {
      for (const double p : machine.speakers.at(id).probabilities) {
        ones += p >= threshold ? 1 : 0;
        ++total;
      }
    }
    out[id] = majority(ones, total, rng);
  }
  return out;
}

SpeakerLabels fuse_method3(std::span<const PredictionSet> machines, Rng& rng, double threshold) {
  check_aligned(machines);
  SpeakerLabels out;
  for (const auto& [id, ref] : machines.front().speakers) {
    std::vector<int> votes;
    votes.reserve(machines.size());
    for (const auto& machine : machines) {
      const auto labels = sample_labels(machine.speakers.at(id).probabilities, threshold);
      votes.push_back(speaker_label_mode(labels, rng));
    }
    out[id] = speaker_label_mode(votes, rng);
  }
  return out;
}

SpeakerLabels fuse(std::span<const PredictionSet> machines, FusionMethod method, Rng& rng, double threshold) {
  switch (method) {
    case FusionMethod::average_probabilities: return fuse_method1(machines, threshold);
    case FusionMethod::pooled_mode: return fuse_method2(machines, rng, threshold);
    case FusionMethod::mode_of_modes: return fuse_method3(machines, rng, threshold);
  }
  throw Error(ErrorCategory::config, "unknown fusion method");
}

SpeakerLabels single_machine_labels(const PredictionSet& machine, FusionMethod method, Rng& rng,
                                    double threshold) {
  return fuse(std::span<const PredictionSet>(&machine, 1), method, rng, threshold);
}

std::vector<CurvePoint> f1_vs_m_experiment(std::span<const PredictionSet> pool, const SpeakerLabels& truth,
                                           const CurveOptions& options) {
  if (options.combinations < 1) throw Error(ErrorCategory::config, "curve: combinations must be >= 1");
  check_aligned(pool);
  std::vector<CurvePoint> curve;
  for (const int m : options.machine_counts) {
    if (m < 1 || static_cast<std::size_t>(m) > pool.size()) {
      throw Error(ErrorCategory::data, "curve: M = " + std::to_string(m) + " exceeds the pool of " +
                                           std::to_string(pool.size()) + " machines");
    }
    const int draws = static_cast<std::size_t>(m) == pool.size() ? 1 : options.combinations;
    std::vector<std::array<double, 2>> scores(static_cast<std::size_t>(draws));
    parallel_for(scores.size(), options.jobs, [&](std::size_t c) {
      Rng rng(derive_seed(options.seed, {static_cast<std::uint64_t>(m), c}));
      auto picks = sample_without_replacement(pool.size(), static_cast<std::size_t>(m), rng);
      std::sort(picks.begin(), picks.end());
      std::vector<PredictionSet> subset;
      subset.reserve(picks.size());
      for (const auto p : picks) subset.push_back(pool[p]);
      const auto predicted = fuse(subset, options.method, rng, options.threshold);
      const auto report = metrics(confusion(truth, predicted));
      scores[c] = {report.per_class[0].f1, report.per_class[1].f1};
    });

    CurvePoint point;
    point.machines = m;
    for (std::size_t cls = 0; cls < 2; ++cls) {
      // Welford keeps identical inputs at exactly zero spread.
      double mean = 0.0;
      double m2 = 0.0;
      for (std::size_t i = 0; i < scores.size(); ++i) {
        const double x = scores[i][cls];
        const double delta = x - mean;
        mean += delta / static_cast<double>(i + 1);
        m2 += delta * (x - mean);
      }
      point.f1_mean[cls] = mean;
      point.f1_std[cls] = scores.size() > 1 ? std::sqrt(m2 / static_cast<double>(scores.size() - 1)) : 0.0;
    }
    curve.push_back(point);
  }
  return curve;
}

void write_predictions_csv(const std::filesystem::path& path, std::span<const PredictionSet> machines,
                           double threshold) {
  std::string out = "machine,speaker_id,crop_index,probability,label\n";
  char line[512];
  for (const auto& machine : machines) {
    for (const auto& [id, scores] : machine.speakers) {
      for (std::size_t l = 0; l < scores.probabilities.size(); ++l) {
        const double p = scores.probabilities[l];
        std::snprintf(line, sizeof line, "%d,%s,%u,%.17g,%d\n", machine.machine, id.c_str(),
                      scores.crop_indices[l], p, p >= threshold ? 1 : 0);
        out += line;
      }
    }
  }
  write_file_atomic(path, out);
}

std::vector<PredictionSet> read_predictions_csv(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCategory::format, path.string() + ": empty predictions file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "machine,speaker_id,crop_index,probability,label") {
    throw Error(ErrorCategory::format, path.string() + ": unexpected predictions header '" + line + "'");
  }
  std::map<int, PredictionSet> by_machine;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream fields(line);
    std::string field;
    while (std::getline(fields, field, ',')) f.push_back(field);
    const auto where = path.string() + ":" + std::to_string(lineno);
    if (f.size() != 5) throw Error(ErrorCategory::format, where + ": expected 5 fields");
    try {
      const int machine = std::stoi(f[0]);
      auto& set = by_machine[machine];
      set.machine = machine;
      auto& scores = set.speakers[f[1]];
      scores.crop_indices.push_back(static_cast<std::uint32_t>(std::stoul(f[2])));
      scores.probabilities.push_back(std::stod(f[3]));
    } catch (const std::logic_error&) {
      throw Error(ErrorCategory::format, where + ": malformed number");
    }
  }
  std::vector<PredictionSet> out;
  for (auto& [id, set] : by_machine) {
    // Keep samples in crop order so machines line up.
    for (auto& [speaker, scores] : set.speakers) {
      std::vector<std::size_t> idx(scores.crop_indices.size());
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      std::sort(idx.begin(), idx.end(),
                [&](std::size_t a, std::size_t b) { return scores.crop_indices[a] < scores.crop_indices[b]; });
      SpeakerScores sorted;
      for (const auto i : idx) {
        sorted.crop_indices.push_back(scores.crop_indices[i]);
        sorted.probabilities.push_back(scores.probabilities[i]);
      }
      scores = std::move(sorted);
    }
    set.validate();
    out.push_back(std::move(set));
  }
  return out;
}

}  // namespace ensdep
