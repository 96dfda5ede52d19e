#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "ensdep/binary_io.hpp"
#include "ensdep/commands.hpp"
#include "ensdep/evaluation.hpp"
#include "test_support.hpp"

using namespace ensdep;
using ensdep::testing::TempDir;
namespace fs = std::filesystem;

namespace {

RunConfig small_config() {
  RunConfig cfg;
  cfg.seed = 4;
  cfg.synth.train_per_class = 2;
  cfg.synth.test_per_class = 1;
  cfg.synth.duration_s = 10;
  cfg.network.N = 4;
  cfg.network.n4 = 4;
  cfg.train.epochs = 2;
  cfg.train.batch_size = 4;
  cfg.ensemble.machines = 2;
  cfg.curve.combinations = 5;
  cfg.cv.folds = 2;
  return cfg;
}

std::size_t count_lines(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

int run_cli(const std::string& args, const fs::path& stderr_file) {
  const std::string cmd = std::string(ENSDEP_CLI_PATH) + " " + args + " 2> " + stderr_file.string() + " > /dev/null";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

// One shared pipeline run keeps the suite fast.
class Pipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir("pipeline");
    cmd_synth(small_config(), *dir_ / "corpus");
    cmd_featurize(*dir_ / "corpus" / "manifest.csv", small_config(), *dir_ / "cache");
    cmd_train(*dir_ / "cache", small_config(), *dir_ / "models");
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }
  static fs::path path(const std::string& rel) { return *dir_ / rel; }
  static TempDir* dir_;
};
TempDir* Pipeline::dir_ = nullptr;

}  // namespace

TEST_F(Pipeline, SynthWritesManifestAndWavs) {
  const auto manifest = read_manifest_csv(path("corpus/manifest.csv"));
  ASSERT_EQ(manifest.entries.size(), 6u);
  int train = 0;
  for (const auto& e : manifest.entries) {
    train += e.split == Split::train;
    EXPECT_TRUE(fs::exists(path("corpus") / e.path)) << e.path;
  }
  EXPECT_EQ(train, 4);
  EXPECT_TRUE(fs::exists(path("corpus/config.cfg")));
}

TEST_F(Pipeline, SynthRerunIsBitwiseIdentical) {
  TempDir again("synth2");
  cmd_synth(small_config(), again.path());
  EXPECT_EQ(read_file(again / "manifest.csv"), read_file(path("corpus/manifest.csv")));
  for (const auto& e : read_manifest_csv(again / "manifest.csv").entries)
    EXPECT_EQ(read_file(again.path() / e.path), read_file(path("corpus") / e.path));
}

TEST_F(Pipeline, FeaturizeProducesBalancedCacheMatchingDirectFeaturization) {
  const auto train = read_feature_cache(path("cache/train.lspg"));
  const auto test = read_feature_cache(path("cache/test.lspg"), false);
  ASSERT_FALSE(train.empty());
  std::size_t per_class[2] = {0, 0};
  for (const auto& f : train) {
    ++per_class[to_int(f.label)];
    EXPECT_EQ(f.values.rows(), 513);
    EXPECT_EQ(f.values.cols(), 125);
  }
  EXPECT_EQ(per_class[0], per_class[1]);

  // Reload equals in-memory featurization of the same crop.
  const auto manifest = read_manifest_csv(path("corpus/manifest.csv"));
  const auto& probe = test.front();
  for (const auto& e : manifest.entries) {
    if (e.speaker_id != probe.speaker_id) continue;
    auto clip = trim_silence(load_wav(path("corpus") / e.path));
    clip.label = e.label;
    clip.speaker_id = e.speaker_id;
    const auto crops = crop(clip);
    const auto direct = featurize_raw(crops.at(probe.crop_index), StftConfig{});
    EXPECT_EQ(direct.values, probe.values);
  }
}

TEST_F(Pipeline, TrainWritesOneModelAndHistoryPerMachine) {
  EXPECT_EQ(list_models(path("models")).size(), 2u);
  EXPECT_EQ(count_lines(path("models/history_1.csv")), 3u);
  TempDir again("train2");
  cmd_train(path("cache"), small_config(), again.path());
  EXPECT_EQ(read_file(again / "machine_0.sdm"), read_file(path("models/machine_0.sdm")));
  EXPECT_EQ(read_file(again / "machine_1.sdm"), read_file(path("models/machine_1.sdm")));
}

TEST_F(Pipeline, EvaluateSingleMachineMatchesMachineMetrics) {
  auto cfg = small_config();
  cfg.ensemble.machines = 1;
  TempDir out("eval1");
  cmd_evaluate(path("models"), path("cache"), cfg, out.path());
  std::ifstream a(out / "metrics.csv"), b(out / "machine_metrics.csv");
  std::string la, lb;
  std::getline(a, la);
  std::getline(b, lb);
  for (int i = 0; i < 2; ++i) {
    std::getline(a, la);
    std::getline(b, lb);
    EXPECT_EQ(la.substr(la.find(',')), lb.substr(lb.find(',')));
  }
  EXPECT_TRUE(fs::exists(out / "run_summary.json"));
  EXPECT_EQ(count_lines(out / "speaker_predictions.csv"), 3u);
}

TEST_F(Pipeline, EvaluateExternalPerfectPredictionsScoresOne) {
  const auto test = read_feature_cache(path("cache/test.lspg"));
  PredictionSet perfect;
  for (const auto& f : test) {
    auto& s = perfect.speakers[f.speaker_id];
    s.crop_indices.push_back(f.crop_index);
    s.probabilities.push_back(f.label == Label::depressed ? 0.9 : 0.1);
  }
  TempDir out("evalp");
  write_predictions_csv(out / "p.csv", std::span(&perfect, 1));
  cmd_evaluate("", path("cache"), small_config(), out / "res", out / "p.csv");
  std::ifstream in(out / "res" / "metrics.csv");
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) EXPECT_NE(line.find("1.000000,1.000000,1.000000,1.000000"), std::string::npos) << line;
}

TEST_F(Pipeline, EvaluateMissingModelNamesPath) {
  auto cfg = small_config();
  cfg.ensemble.machines = 3;
  TempDir out("evalm");
  try {
    cmd_evaluate(path("models"), path("cache"), cfg, out.path());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::io);
    EXPECT_NE(std::string(e.what()).find("machine_2.sdm"), std::string::npos);
  }
}

TEST_F(Pipeline, CurveRowCount) {
  TempDir out("curve");
  auto cfg = small_config();
  cmd_curve(path("models"), path("cache"), cfg, out.path());
  // |M| = 2 (pool of two), 3 methods, 2 classes, plus the header.
  EXPECT_EQ(count_lines(out / "curve.csv"), 1u + 2 * 3 * 2);
  std::ifstream in(out / "curve.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "method,M,class,f1_mean,f1_std");
  while (std::getline(in, line)) EXPECT_EQ(line.find(",-"), std::string::npos) << line;
  EXPECT_NE(read_file(out / "curve.svg").find("viewBox=\"0 0 800 500\""), std::string::npos);
}

TEST_F(Pipeline, CrossvalWritesPooledAndFoldMetrics) {
  TempDir out("cv");
  auto cfg = small_config();
  cfg.ensemble.machines = 1;
  // The tiny balanced cache may hold a single speaker per class.
  cfg.cv.folds = 1;
  cmd_crossval(path("cache"), cfg, out.path());
  // fold_0 + pooled, 2 classes each, plus the header.
  EXPECT_EQ(count_lines(out / "metrics.csv"), 5u);
  EXPECT_EQ(count_lines(out / "cv_rows.csv"), 1u + 2);
}

TEST_F(Pipeline, EchoedConfigReproducesOutputs) {
  TempDir out("echo");
  const auto echoed = load_config_file(path("models/config.cfg").string());
  cmd_train(path("cache"), echoed, out.path());
  EXPECT_EQ(read_file(out / "machine_1.sdm"), read_file(path("models/machine_1.sdm")));
  EXPECT_EQ(read_file(out / "config.cfg"), read_file(path("models/config.cfg")));
}

TEST(Commands, EmptyManifestIsNamed) {
  TempDir dir("empty");
  write_manifest_csv(dir / "manifest.csv", CorpusManifest{});
  try {
    cmd_featurize(dir / "manifest.csv", small_config(), dir / "cache");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("manifest.csv"), std::string::npos);
  }
}

TEST(Cli, ErrorCategoriesAndExitCodes) {
  TempDir dir("cli");
  const auto err = dir / "err.txt";
  EXPECT_EQ(run_cli("synth --out " + (dir / "o").string() + " --set bogus.key=1", err), 2);
  EXPECT_NE(read_file(err).find("error category=config"), std::string::npos);

  EXPECT_EQ(run_cli("featurize --out " + (dir / "c").string() + " --manifest " + (dir / "none.csv").string(), err), 3);
  EXPECT_NE(read_file(err).find("error category=io"), std::string::npos);

  std::ofstream(dir / "bad.csv") << "not,a,manifest\n";
  EXPECT_EQ(run_cli("featurize --out " + (dir / "c").string() + " --manifest " + (dir / "bad.csv").string(), err), 4);
  EXPECT_NE(read_file(err).find("error category=format"), std::string::npos);

  EXPECT_NE(run_cli("", err), 0);
}
