#include "ensdep/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "ensdep/random.hpp"

namespace ensdep {

std::size_t crop_length(double crop_s, int sample_rate) {
  if (!(crop_s > 0.0)) throw Error(ErrorCategory::config, "crop length must be positive");
  return static_cast<std::size_t>(std::llround(crop_s * sample_rate));
}

std::size_t crop_count(std::size_t n_samples, double crop_s, int sample_rate) {
  return n_samples / crop_length(crop_s, sample_rate);
}

std::vector<SampleCrop> crop(const AudioClip& clip, double crop_s) {
  const auto len = crop_length(crop_s, clip.sample_rate);
  const auto count = clip.samples.size() / len;
  std::vector<SampleCrop> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    SampleCrop c;
    c.speaker_id = clip.speaker_id;
    c.crop_index = static_cast<std::uint32_t>(i);
    c.sample_rate = clip.sample_rate;
    c.label = clip.label.value_or(Label::non_depressed);
    const auto first = clip.samples.begin() + static_cast<std::ptrdiff_t>(i * len);
    c.samples.assign(first, first + static_cast<std::ptrdiff_t>(len));
    out.push_back(std::move(c));
  }
  return out;
}

BalancedPlan plan_balanced(const std::map<std::string, std::size_t>& crop_counts,
                           const std::map<std::string, Label>& labels, std::uint64_t seed) {
  std::array<std::vector<std::pair<std::string, std::size_t>>, 2> by_class;
  for (const auto& [id, label] : labels) {
    const auto it = crop_counts.find(id);
    const std::size_t count = it == crop_counts.end() ? 0 : it->second;
    by_class[static_cast<std::size_t>(to_int(label))].emplace_back(id, count);
  }
  static constexpr std::array<const char*, 2> kClassNames = {"non-depressed (0)", "depressed (1)"};
  for (std::size_t cls = 0; cls < 2; ++cls) {
    if (by_class[cls].empty()) {
      throw Error(ErrorCategory::data,
                  std::string("balanced sampling: class ") + kClassNames[cls] + " has no speakers");
    }
  }

  std::set<std::size_t> candidates;
  for (const auto& pool : by_class)
    for (const auto& [id, count] : pool)
      if (count > 0) candidates.insert(count);

  BalancedPlan plan;
  std::size_t best_total = 0;
  for (const auto c : candidates) {
    std::array<std::size_t, 2> eligible{};
    for (std::size_t cls = 0; cls < 2; ++cls) {
      eligible[cls] = static_cast<std::size_t>(
          std::count_if(by_class[cls].begin(), by_class[cls].end(),
                        [c](const auto& entry) { return entry.second >= c; }));
    }
    const std::size_t k = std::min(eligible[0], eligible[1]);
    const std::size_t total = 2 * k * c;
    // Candidates ascend, so >= lets a later (larger) c win a tie.
    if (total > 0 && total >= best_total) {
      best_total = total;
      plan.crops_per_speaker = c;
      plan.speakers_per_class = k;
    }
  }
  if (best_total == 0) {
    for (std::size_t cls = 0; cls < 2; ++cls) {
      const bool any = std::any_of(by_class[cls].begin(), by_class[cls].end(),
                                   [](const auto& e) { return e.second > 0; });
      if (!any) {
        throw Error(ErrorCategory::data, std::string("balanced sampling: class ") + kClassNames[cls] +
                                             " has no speaker with a full crop");
      }
    }
  }

  Rng rng(derive_seed(seed, {0x706c616eULL}));
  for (std::size_t cls = 0; cls < 2; ++cls) {
    std::vector<std::string> eligible;
    for (const auto& [id, count] : by_class[cls])
      if (count >= plan.crops_per_speaker) eligible.push_back(id);
    const auto picks = sample_without_replacement(eligible.size(), plan.speakers_per_class, rng);
    for (const auto p : picks) plan.selected[cls].push_back(eligible[p]);
    std::sort(plan.selected[cls].begin(), plan.selected[cls].end());
  }
  return plan;
}

std::vector<CropRef> select_training_crops(const BalancedPlan& plan,
                                           const std::map<std::string, std::size_t>& crop_counts,
                                           std::uint64_t seed) {
  Rng rng(derive_seed(seed, {0x63726f70ULL}));
  std::vector<CropRef> refs;
  refs.reserve(plan.total_samples());
  for (const auto& speakers : plan.selected) {
    for (const auto& id : speakers) {
      const auto it = crop_counts.find(id);
      if (it == crop_counts.end() || it->second < plan.crops_per_speaker) {
        throw Error(ErrorCategory::data,
                    "balanced plan selects speaker '" + id + "' without enough crops");
      }
      auto picks = sample_without_replacement(it->second, plan.crops_per_speaker, rng);
      std::sort(picks.begin(), picks.end());
      for (const auto p : picks) refs.push_back({id, static_cast<std::uint32_t>(p)});
    }
  }
  shuffle(refs, rng);
  return refs;
}

std::vector<SampleCrop> materialize_training_set(const BalancedPlan& plan,
                                                 std::span<const SampleCrop> crops,
                                                 std::uint64_t seed) {
  std::map<CropRef, const SampleCrop*> index;
  std::map<std::string, std::size_t> counts;
  for (const auto& c : crops) {
    index[{c.speaker_id, c.crop_index}] = &c;
    ++counts[c.speaker_id];
  }
  const auto refs = select_training_crops(plan, counts, seed);
  std::vector<SampleCrop> out;
  out.reserve(refs.size());
  for (const auto& ref : refs) {
    const auto it = index.find(ref);
    if (it == index.end()) {
      throw Error(ErrorCategory::data, "crop " + std::to_string(ref.crop_index) + " of speaker '" +
                                           ref.speaker_id + "' is missing");
    }
    out.push_back(*it->second);
  }
  return out;
}

std::vector<SampleCrop> materialize_eval_set(std::span<const SampleCrop> crops, std::size_t cap) {
  std::map<std::string, std::vector<const SampleCrop*>> per_speaker;
  for (const auto& c : crops) per_speaker[c.speaker_id].push_back(&c);
  std::vector<SampleCrop> out;
  for (auto& [id, list] : per_speaker) {
    std::sort(list.begin(), list.end(),
              [](const SampleCrop* a, const SampleCrop* b) { return a->crop_index < b->crop_index; });
    const auto keep = std::min(cap, list.size());
    for (std::size_t i = 0; i < keep; ++i) out.push_back(*list[i]);
  }
  return out;
}

}  // namespace ensdep
