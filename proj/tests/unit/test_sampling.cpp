#include <gtest/gtest.h>

#include <set>

#include "ensdep/sampling.hpp"
#include "oracles.hpp"

using namespace ensdep;
using ensdep::testing::brute_force_balanced_total;

namespace {

AudioClip silent_clip(double seconds, const std::string& id = "x", Label label = Label::depressed) {
  AudioClip c;
  c.samples.assign(static_cast<std::size_t>(std::llround(seconds * 16000)), 0.0);
  c.speaker_id = id;
  c.label = label;
  return c;
}

std::vector<SampleCrop> fake_crops(const std::map<std::string, std::size_t>& counts,
                                   const std::map<std::string, Label>& labels) {
  std::vector<SampleCrop> out;
  for (const auto& [id, n] : counts) {
    for (std::size_t i = 0; i < n; ++i) {
      SampleCrop c;
      c.speaker_id = id;
      c.crop_index = static_cast<std::uint32_t>(i);
      c.samples = {static_cast<double>(i)};
      c.label = labels.at(id);
      out.push_back(std::move(c));
    }
  }
  return out;
}

std::size_t plan_total_or_zero(const std::vector<std::size_t>& counts, const std::vector<int>& labels,
                               std::uint64_t seed) {
  std::map<std::string, std::size_t> c;
  std::map<std::string, Label> l;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const auto id = "s" + std::to_string(i);
    c[id] = counts[i];
    l[id] = label_from_int(labels[i]);
  }
  try {
    const auto plan = plan_balanced(c, l, seed);
    return plan.total_samples();
  } catch (const Error&) {
    return 0;
  }
}

}  // namespace

TEST(Crop, CountsMatchExamples) {
  EXPECT_EQ(crop(silent_clip(10)).size(), 2u);
  EXPECT_EQ(crop(silent_clip(356)).size(), 89u);
  EXPECT_TRUE(crop(silent_clip(3.9)).empty());
}

TEST(Crop, ConsecutiveWindowsOfExactLength) {
  AudioClip clip = silent_clip(9.5, "spk", Label::non_depressed);
  for (std::size_t i = 0; i < clip.samples.size(); ++i) clip.samples[i] = static_cast<double>(i);
  const auto crops = crop(clip);
  ASSERT_EQ(crops.size(), 2u);
  for (std::size_t k = 0; k < crops.size(); ++k) {
    EXPECT_EQ(crops[k].samples.size(), 64000u);
    EXPECT_EQ(crops[k].samples.front(), static_cast<double>(k * 64000));
    EXPECT_EQ(crops[k].crop_index, k);
    EXPECT_EQ(crops[k].speaker_id, "spk");
    EXPECT_EQ(crops[k].label, Label::non_depressed);
  }
}

TEST(Crop, CountIsFloorOfDurationOverCropLength) {
  for (std::size_t n : {0u, 1u, 63999u, 64000u, 64001u, 127999u, 128000u, 1000000u}) {
    AudioClip c;
    c.samples.assign(n, 0.0);
    EXPECT_EQ(crop(c).size(), n / 64000) << n;
    EXPECT_EQ(crop_count(n, 4.0, 16000), n / 64000);
  }
  EXPECT_EQ(crop_length(4.0, 16000), 64000u);
  EXPECT_THROW(crop_length(0.0, 16000), Error);
}

TEST(PlanBalanced, SingleChoicePerClass) {
  const auto plan = plan_balanced({{"a", 5}, {"b", 5}}, {{"a", Label::non_depressed}, {"b", Label::depressed}}, 0);
  EXPECT_EQ(plan.crops_per_speaker, 5u);
  EXPECT_EQ(plan.speakers_per_class, 1u);
  EXPECT_EQ(plan.total_samples(), 10u);
}

TEST(PlanBalanced, MoreCropsBeatMoreSpeakers) {
  const auto plan = plan_balanced({{"a", 10}, {"b", 2}, {"c", 10}, {"d", 2}},
                                  {{"a", Label::non_depressed},
                                   {"b", Label::non_depressed},
                                   {"c", Label::depressed},
                                   {"d", Label::depressed}},
                                  0);
  EXPECT_EQ(plan.crops_per_speaker, 10u);
  EXPECT_EQ(plan.speakers_per_class, 1u);
  EXPECT_EQ(plan.total_samples(), 20u);
  EXPECT_EQ(plan.selected[0], std::vector<std::string>{"a"});
  EXPECT_EQ(plan.selected[1], std::vector<std::string>{"c"});
}

TEST(PlanBalanced, TieGoesToLargerCropCount) {
  // c=2,K=2 and c=4,K=1 both give 8.
  const auto plan = plan_balanced({{"a", 4}, {"b", 2}, {"c", 4}, {"d", 2}},
                                  {{"a", Label::non_depressed},
                                   {"b", Label::non_depressed},
                                   {"c", Label::depressed},
                                   {"d", Label::depressed}},
                                  0);
  EXPECT_EQ(plan.crops_per_speaker, 4u);
  EXPECT_EQ(plan.total_samples(), 8u);
}

TEST(PlanBalanced, ReferenceGeometry) {
  std::map<std::string, std::size_t> counts;
  std::map<std::string, Label> labels;
  for (int i = 0; i < 31; ++i) {
    counts["d" + std::to_string(i)] = 89;
    labels["d" + std::to_string(i)] = Label::depressed;
    counts["n" + std::to_string(i)] = 89;
    labels["n" + std::to_string(i)] = Label::non_depressed;
  }
  EXPECT_EQ(plan_balanced(counts, labels, 1).total_samples(), 5518u);

  // A larger, longer-recorded majority class does not change the optimum.
  Rng rng(2);
  for (int i = 31; i < 69; ++i) {
    counts["n" + std::to_string(i)] = 89 + rng.below(300);
    labels["n" + std::to_string(i)] = Label::non_depressed;
  }
  const auto plan = plan_balanced(counts, labels, 1);
  EXPECT_EQ(plan.total_samples(), 5518u);
  EXPECT_EQ(plan.crops_per_speaker, 89u);
  EXPECT_EQ(plan.selected[0].size(), 31u);
  EXPECT_EQ(plan.selected[1].size(), 31u);
}

TEST(PlanBalanced, EmptyClassIsNamed) {
  try {
    plan_balanced({{"a", 5}}, {{"a", Label::non_depressed}}, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::data);
    EXPECT_NE(std::string(e.what()).find("depressed (1)"), std::string::npos);
  }
}

TEST(PlanBalanced, MatchesBruteForceOnRandomSmallCorpora) {
  Rng rng(99);
  for (int trial = 0; trial < 3000; ++trial) {
    const std::size_t n = 2 + rng.below(7);
    std::vector<std::size_t> counts(n);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      counts[i] = rng.below(7);
      labels[i] = static_cast<int>(rng.below(2));
    }
    EXPECT_EQ(plan_total_or_zero(counts, labels, trial), brute_force_balanced_total(counts, labels))
        << "trial " << trial;
  }
}

TEST(PlanBalanced, SelectionIsDeterministicAndEligible) {
  std::map<std::string, std::size_t> counts;
  std::map<std::string, Label> labels;
  Rng rng(4);
  for (int i = 0; i < 30; ++i) {
    const auto id = "s" + std::to_string(i);
    counts[id] = rng.below(20);
    labels[id] = i % 3 ? Label::non_depressed : Label::depressed;
  }
  const auto a = plan_balanced(counts, labels, 17);
  const auto b = plan_balanced(counts, labels, 17);
  EXPECT_EQ(a.selected, b.selected);
  for (int cls = 0; cls < 2; ++cls) {
    EXPECT_EQ(a.selected[cls].size(), a.speakers_per_class);
    for (const auto& id : a.selected[cls]) {
      EXPECT_GE(counts[id], a.crops_per_speaker);
      EXPECT_EQ(to_int(labels[id]), cls);
    }
  }
}

TEST(MaterializeTrainingSet, ReferenceGeometryIsBalanced) {
  std::map<std::string, std::size_t> counts;
  std::map<std::string, Label> labels;
  for (int i = 0; i < 31; ++i) {
    counts["d" + std::to_string(i)] = 89 + i;
    labels["d" + std::to_string(i)] = Label::depressed;
    counts["n" + std::to_string(i)] = 89;
    labels["n" + std::to_string(i)] = Label::non_depressed;
  }
  const auto crops = fake_crops(counts, labels);
  const auto plan = plan_balanced(counts, labels, 5);
  ASSERT_EQ(plan.total_samples(), 5518u);
  const auto set = materialize_training_set(plan, crops, 5);
  ASSERT_EQ(set.size(), 5518u);
  std::map<std::string, std::size_t> per_speaker;
  std::size_t per_class[2] = {0, 0};
  std::set<std::pair<std::string, std::uint32_t>> unique;
  for (const auto& c : set) {
    ++per_speaker[c.speaker_id];
    ++per_class[to_int(c.label)];
    unique.insert({c.speaker_id, c.crop_index});
  }
  EXPECT_EQ(per_class[0], 2759u);
  EXPECT_EQ(per_class[1], 2759u);
  EXPECT_EQ(unique.size(), set.size());
  for (const auto& [id, n] : per_speaker) EXPECT_EQ(n, 89u) << id;

  const auto again = materialize_training_set(plan, crops, 5);
  ASSERT_EQ(again.size(), set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    EXPECT_EQ(again[i].speaker_id, set[i].speaker_id);
    EXPECT_EQ(again[i].crop_index, set[i].crop_index);
  }
}

TEST(MaterializeTrainingSet, SpeakerWithExactlyCCropsUsesAll) {
  const std::map<std::string, std::size_t> counts = {{"a", 3}, {"b", 7}};
  const std::map<std::string, Label> labels = {{"a", Label::non_depressed}, {"b", Label::depressed}};
  const auto plan = plan_balanced(counts, labels, 0);
  ASSERT_EQ(plan.crops_per_speaker, 3u);
  const auto set = materialize_training_set(plan, fake_crops(counts, labels), 0);
  std::set<std::uint32_t> a_crops;
  for (const auto& c : set)
    if (c.speaker_id == "a") a_crops.insert(c.crop_index);
  EXPECT_EQ(a_crops, (std::set<std::uint32_t>{0, 1, 2}));
}

TEST(MaterializeEvalSet, CapsPerSpeaker) {
  const std::map<std::string, Label> labels = {{"a", Label::depressed}, {"b", Label::non_depressed}};
  const auto crops = fake_crops({{"a", 40}, {"b", 200}}, labels);
  const auto eval = materialize_eval_set(crops, 89);
  std::map<std::string, std::size_t> n;
  for (const auto& c : eval) ++n[c.speaker_id];
  EXPECT_EQ(n["a"], 40u);
  EXPECT_EQ(n["b"], 89u);
  for (const auto& c : eval) EXPECT_LT(c.crop_index, 89u);

  const auto all_long = fake_crops({{"a", 100}, {"b", 95}}, labels);
  EXPECT_EQ(materialize_eval_set(all_long, 89).size(), 2u * 89u);
}
