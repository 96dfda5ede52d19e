// ensdep: synthetic corpus generation, featurization, training, evaluation
// and ensemble curves from the command line.
//
// Configuration precedence (lowest to highest): built-in defaults,
// --config file, --set key=value overrides, --seed / --jobs flags.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "ensdep/commands.hpp"
#include "ensdep/config.hpp"
#include "ensdep/error.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::string out;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config_path, "Configuration file (key = value lines)");
  cmd->add_option("--set", opts.overrides, "Override a configuration key, e.g. --set train.epochs=10");
  cmd->add_option("--seed", opts.seed, "Master seed");
  cmd->add_option("--jobs", opts.jobs, "Worker threads (1 = sequential)");
  cmd->add_option("--out", opts.out, "Output directory")->required();
}

ensdep::RunConfig build_config(const CommonOptions& opts) {
  ensdep::RunConfig cfg;
  if (!opts.config_path.empty()) cfg = ensdep::load_config_file(opts.config_path);
  for (const auto& kv : opts.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw ensdep::Error(ensdep::ErrorCategory::config, "--set expects key=value, got '" + kv + "'");
    }
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (opts.seed) cfg.seed = *opts.seed;
  if (opts.jobs) cfg.jobs = *opts.jobs;
  return cfg;
}

int exit_code(ensdep::ErrorCategory category) {
  switch (category) {
    case ensdep::ErrorCategory::config: return 2;
    case ensdep::ErrorCategory::io: return 3;
    case ensdep::ErrorCategory::format: return 4;
    case ensdep::ErrorCategory::data: return 5;
    case ensdep::ErrorCategory::training: return 6;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Speech depression detection with ensembles of 1-D CNNs"};
  app.require_subcommand(1);

  CommonOptions synth_opts, feat_opts, train_opts, eval_opts, curve_opts, cv_opts;
  std::string manifest, cache, models, predictions;

  auto* synth = app.add_subcommand("synth", "Write a synthetic labelled corpus (WAV + manifest)");
  add_common(synth, synth_opts);

  auto* featurize = app.add_subcommand("featurize", "Trim, crop, sample and featurize a corpus into a cache");
  add_common(featurize, feat_opts);
  featurize->add_option("--manifest", manifest, "Corpus manifest CSV")->required();

  auto* train = app.add_subcommand("train", "Train ensemble.machines networks on the cached training split");
  add_common(train, train_opts);
  train->add_option("--cache", cache, "Feature cache directory")->required();

  auto* evaluate = app.add_subcommand("evaluate", "Speaker-level metrics of the fused ensemble on the test split");
  add_common(evaluate, eval_opts);
  evaluate->add_option("--cache", cache, "Feature cache directory")->required();
  evaluate->add_option("--models", models, "Directory holding machine_<m>.sdm");
  evaluate->add_option("--predictions", predictions, "Prediction CSV to fuse instead of running models");

  auto* curve = app.add_subcommand("curve", "F1 versus ensemble size for the three fusion methods");
  add_common(curve, curve_opts);
  curve->add_option("--cache", cache, "Feature cache directory")->required();
  curve->add_option("--models", models, "Directory holding machine_<m>.sdm")->required();

  auto* crossval = app.add_subcommand("crossval", "Speaker-disjoint k-fold cross-validation");
  add_common(crossval, cv_opts);
  crossval->add_option("--cache", cache, "Feature cache directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*synth) {
      ensdep::cmd_synth(build_config(synth_opts), synth_opts.out);
    } else if (*featurize) {
      ensdep::cmd_featurize(manifest, build_config(feat_opts), feat_opts.out);
    } else if (*train) {
      ensdep::cmd_train(cache, build_config(train_opts), train_opts.out);
    } else if (*evaluate) {
      if (models.empty() && predictions.empty()) {
        throw ensdep::Error(ensdep::ErrorCategory::config, "evaluate needs --models or --predictions");
      }
      std::optional<fs::path> pred;
      if (!predictions.empty()) pred = predictions;
      ensdep::cmd_evaluate(models, cache, build_config(eval_opts), eval_opts.out, pred);
    } else if (*curve) {
      ensdep::cmd_curve(models, cache, build_config(curve_opts), curve_opts.out);
    } else if (*crossval) {
      ensdep::cmd_crossval(cache, build_config(cv_opts), cv_opts.out);
    }
  } catch (const ensdep::Error& e) {
    std::cerr << "error category=" << ensdep::to_string(e.category()) << " message=" << e.what() << "\n";
    return exit_code(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error category=internal message=" << e.what() << "\n";
    return 1;
  }
  return 0;
}
