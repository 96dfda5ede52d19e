#pragma once

#include <filesystem>
#include <optional>

#include "ensdep/config.hpp"

namespace ensdep {

/// Pipeline entry points behind the `ensdep` CLI. Each one resolves the
/// configuration, writes `config.cfg` (the fully resolved configuration)
/// into its output directory, and produces its artifacts there.
///
///   synth      -> manifest.csv, wav/*.wav
///   featurize  -> train.lspg, test.lspg, featurize_summary.json
///   train      -> machine_<m>.sdm, history_<m>.csv
///   evaluate   -> metrics.csv, machine_metrics.csv, predictions.csv,
///                 speaker_predictions.csv, run_summary.json
///   curve      -> curve.csv, curve.svg
///   crossval   -> metrics.csv (fold_<i> and pooled), cv_rows.csv,
///                 run_summary.json

void cmd_synth(RunConfig config, const std::filesystem::path& out_dir);

void cmd_featurize(const std::filesystem::path& manifest, RunConfig config,
                   const std::filesystem::path& cache_dir);

void cmd_train(const std::filesystem::path& cache_dir, RunConfig config, const std::filesystem::path& out_dir);

/// Scores the test split with machines 0..ensemble.machines-1 from
/// `models_dir`, or with an external prediction file when `predictions` is
/// set (models_dir is then ignored).
void cmd_evaluate(const std::filesystem::path& models_dir, const std::filesystem::path& cache_dir,
                  RunConfig config, const std::filesystem::path& out_dir,
                  const std::optional<std::filesystem::path>& predictions = std::nullopt);

/// F1-vs-M curves for all three fusion methods over every model found in
/// `models_dir`.
void cmd_curve(const std::filesystem::path& models_dir, const std::filesystem::path& cache_dir,
               RunConfig config, const std::filesystem::path& out_dir);

/// Speaker-disjoint k-fold cross-validation on the cached training split,
/// scored on the cached test split.
void cmd_crossval(const std::filesystem::path& cache_dir, RunConfig config, const std::filesystem::path& out_dir);

/// Paths machine_<m>.sdm in `models_dir`, sorted by m.
std::vector<std::filesystem::path> list_models(const std::filesystem::path& models_dir);

}  // namespace ensdep
