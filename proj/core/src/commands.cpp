#include "ensdep/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <mutex>
#include <regex>
#include <json.hpp>

#include "ensdep/audio_io.hpp"
#include "ensdep/binary_io.hpp"
#include "ensdep/ensemble.hpp"
#include "ensdep/error.hpp"
#include "ensdep/evaluation.hpp"
#include "ensdep/features.hpp"
#include "ensdep/report.hpp"
#include "ensdep/sampling.hpp"
#include "ensdep/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace ensdep {

namespace {

void prepare_output(const fs::path& out_dir, const RunConfig& config) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCategory::io, "cannot create " + out_dir.string() + ": " + ec.message());
  write_file_atomic(out_dir / "config.cfg", config.dump());
}

json metrics_json(const MetricsReport& r) {
  static constexpr std::array<const char*, 2> kNames = {"non_depressed", "depressed"};
  json j;
  j["accuracy"] = r.accuracy;
  for (std::size_t cls = 0; cls < 2; ++cls) {
    const auto& m = r.per_class[cls];
    j[kNames[cls]] = {{"precision", m.precision},
                      {"recall", m.recall},
                      {"f1", m.f1},
                      {"precision_defined", m.precision_defined},
                      {"recall_defined", m.recall_defined},
                      {"f1_defined", m.f1_defined}};
  }
  return j;
}

json config_json(const RunConfig& config) {
  json j = json::object();
  for (const auto& key : RunConfig::keys()) j[key] = config.get(key);
  return j;
}

void write_json(const fs::path& path, const json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

AudioClip load_entry(const fs::path& base, const ManifestEntry& entry, const RunConfig& config) {
  if (entry.path.rfind("synth:", 0) == 0) {
    throw Error(ErrorCategory::data, "manifest entry '" + entry.speaker_id +
                                         "' refers to an in-memory synthetic clip; export it with `ensdep synth`");
  }
  auto clip = load_wav(base / entry.path);
  clip.speaker_id = entry.speaker_id;
  clip.label = entry.label;
  if (clip.sample_rate != config.synth.sample_rate) {
    throw Error(ErrorCategory::data, entry.path + ": sample rate " + std::to_string(clip.sample_rate) +
                                         " Hz, expected " + std::to_string(config.synth.sample_rate));
  }
  if (config.sampling.trim) {
    clip = trim_silence(clip, config.sampling.trim_frame_s, config.sampling.trim_floor_db);
  }
  return clip;
}

std::vector<LogSpectrogram> load_split(const fs::path& cache_dir, const char* name, bool required) {
  const auto path = cache_dir / name;
  if (!fs::exists(path)) {
    if (required) throw Error(ErrorCategory::io, "feature cache " + path.string() + " not found");
    return {};
  }
  return read_feature_cache(path);
}

void check_shape(const std::vector<LogSpectrogram>& items, const NetworkConfig& net, const fs::path& where) {
  for (const auto& item : items) {
    if (item.values.rows() != net.F0 || item.values.cols() != net.T0) {
      throw Error(ErrorCategory::data, where.string() + ": cached spectrograms are " +
                                           std::to_string(item.values.rows()) + "x" +
                                           std::to_string(item.values.cols()) + " but the configuration implies " +
                                           std::to_string(net.F0) + "x" + std::to_string(net.T0));
    }
  }
}

fs::path model_path(const fs::path& dir, int m) { return dir / ("machine_" + std::to_string(m) + ".sdm"); }

std::vector<PredictionSet> predict_all(const std::vector<NetworkParams>& models,
                                       const std::vector<LogSpectrogram>& items, int jobs) {
  std::vector<PredictionSet> out(models.size());
  parallel_for(models.size(), jobs, [&](std::size_t m) {
    out[m] = predict_speakers(models[m], items, static_cast<int>(m));
  });
  return out;
}

std::vector<NetworkParams> load_models(const std::vector<fs::path>& paths, const NetworkConfig& expected) {
  std::vector<NetworkParams> models;
  for (const auto& p : paths) {
    if (!fs::exists(p)) throw Error(ErrorCategory::io, "model file not found: " + p.string());
    auto params = load_model(p);
    if (params.config.F0 != expected.F0 || params.config.T0 != expected.T0) {
      throw Error(ErrorCategory::data, p.string() + ": model input shape does not match the feature cache");
    }
    models.push_back(std::move(params));
  }
  return models;
}

}  // namespace

std::vector<fs::path> list_models(const fs::path& models_dir) {
  if (!fs::is_directory(models_dir)) throw Error(ErrorCategory::io, "model directory " + models_dir.string() + " not found");
  static const std::regex pattern(R"(machine_(\d+)\.sdm)");
  std::map<int, fs::path> found;
  for (const auto& entry : fs::directory_iterator(models_dir)) {
    std::smatch match;
    const auto name = entry.path().filename().string();
    if (std::regex_match(name, match, pattern)) found[std::stoi(match[1].str())] = entry.path();
  }
  std::vector<fs::path> out;
  for (auto& [m, path] : found) out.push_back(path);
  return out;
}

void cmd_synth(RunConfig config, const fs::path& out_dir) {
  config.resolve();
  prepare_output(out_dir, config);
  fs::create_directories(out_dir / "wav");

  CorpusManifest manifest;
  auto emit = [&](Split split, int per_class, const char* prefix) {
    if (per_class == 0) return;
    SynthOptions opts;
    opts.n_speakers_per_class = per_class;
    opts.duration_s = config.synth.duration_s;
    opts.sample_rate = config.synth.sample_rate;
    opts.seed = config.synth_seed(split);
    opts.crop_s = config.sampling.crop_s;
    opts.split = split;
    opts.id_prefix = prefix;
    auto corpus = synth_corpus(opts);
    for (std::size_t i = 0; i < corpus.clips.size(); ++i) {
      auto entry = corpus.manifest.entries[i];
      entry.path = "wav/" + entry.speaker_id + ".wav";
      write_wav(out_dir / entry.path, corpus.clips[i]);
      manifest.entries.push_back(std::move(entry));
    }
  };
  emit(Split::train, config.synth.train_per_class, "train_");
  emit(Split::test, config.synth.test_per_class, "test_");
  write_manifest_csv(out_dir / "manifest.csv", manifest);
}

void cmd_featurize(const fs::path& manifest_path, RunConfig config, const fs::path& cache_dir) {
  config.resolve();
  const auto manifest = read_manifest_csv(manifest_path);
  if (manifest.entries.empty()) {
    throw Error(ErrorCategory::data, "manifest " + manifest_path.string() + " has no entries");
  }
  prepare_output(cache_dir, config);
  const auto base = manifest_path.parent_path();
  const int sr = config.synth.sample_rate;
  const double crop_s = config.sampling.crop_s;

  std::vector<const ManifestEntry*> train_entries;
  std::vector<const ManifestEntry*> test_entries;
  for (const auto& e : manifest.entries) (e.split == Split::train ? train_entries : test_entries).push_back(&e);
  if (train_entries.empty()) {
    throw Error(ErrorCategory::data, "manifest " + manifest_path.string() + " has no training entries");
  }

  // Pass 1: crop counts after trimming.
  std::vector<std::size_t> counts(train_entries.size());
  parallel_for(train_entries.size(), config.jobs, [&](std::size_t i) {
    counts[i] = crop_count(load_entry(base, *train_entries[i], config).samples.size(), crop_s, sr);
  });
  std::map<std::string, std::size_t> count_map;
  std::map<std::string, Label> labels;
  for (std::size_t i = 0; i < train_entries.size(); ++i) {
    count_map[train_entries[i]->speaker_id] = counts[i];
    labels[train_entries[i]->speaker_id] = train_entries[i]->label;
  }
  const auto plan = plan_balanced(count_map, labels, config.sampling_seed());
  const auto refs = select_training_crops(plan, count_map, config.sampling_seed());

  // Pass 2: featurize the selected crops speaker by speaker.
  std::map<std::string, std::vector<std::uint32_t>> wanted;
  for (const auto& r : refs) wanted[r.speaker_id].push_back(r.crop_index);
  std::map<std::string, const ManifestEntry*> by_id;
  for (const auto* e : train_entries) by_id[e->speaker_id] = e;
  std::vector<std::string> speakers;
  for (const auto& [id, idx] : wanted) speakers.push_back(id);

  std::vector<std::map<std::uint32_t, LogSpectrogram>> per_speaker(speakers.size());
  parallel_for(speakers.size(), config.jobs, [&](std::size_t s) {
    const auto clip = load_entry(base, *by_id.at(speakers[s]), config);
    const auto crops = crop(clip, crop_s);
    for (const auto idx : wanted.at(speakers[s])) per_speaker[s].emplace(idx, featurize_raw(crops.at(idx), config.stft));
  });
  std::map<std::string, std::size_t> slot;
  for (std::size_t s = 0; s < speakers.size(); ++s) slot[speakers[s]] = s;
  std::vector<LogSpectrogram> train_features;
  train_features.reserve(refs.size());
  for (const auto& r : refs) train_features.push_back(std::move(per_speaker[slot.at(r.speaker_id)].at(r.crop_index)));
  write_feature_cache(cache_dir / "train.lspg", train_features);
  train_features.clear();

  std::vector<std::vector<LogSpectrogram>> test_parts(test_entries.size());
  parallel_for(test_entries.size(), config.jobs, [&](std::size_t i) {
    const auto clip = load_entry(base, *test_entries[i], config);
    const auto crops = crop(clip, crop_s);
    for (const auto& c : materialize_eval_set(crops, config.sampling.eval_cap)) {
      test_parts[i].push_back(featurize_raw(c, config.stft));
    }
  });
  std::vector<LogSpectrogram> test_features;
  std::size_t test_speakers_with_crops = 0;
  for (auto& part : test_parts) {
    test_speakers_with_crops += part.empty() ? 0 : 1;
    for (auto& f : part) test_features.push_back(std::move(f));
  }
  write_feature_cache(cache_dir / "test.lspg", test_features);

  json summary;
  summary["manifest"] = manifest_path.string();
  summary["train"] = {{"speakers", train_entries.size()},
                      {"crops_per_speaker", plan.crops_per_speaker},
                      {"speakers_per_class", plan.speakers_per_class},
                      {"crops", refs.size()}};
  summary["test"] = {{"speakers", test_entries.size()},
                     {"speakers_with_crops", test_speakers_with_crops},
                     {"crops", test_features.size()}};
  summary["shape"] = {config.network.F0, config.network.T0};
  write_json(cache_dir / "featurize_summary.json", summary);
}

void cmd_train(const fs::path& cache_dir, RunConfig config, const fs::path& out_dir) {
  config.resolve();
  const auto train_set = load_split(cache_dir, "train.lspg", true);
  const auto val_set = load_split(cache_dir, "test.lspg", false);
  check_shape(train_set, config.network, cache_dir / "train.lspg");
  check_shape(val_set, config.network, cache_dir / "test.lspg");
  prepare_output(out_dir, config);

  std::mutex io;
  train_ensemble(train_set, val_set, config.train, config.network, config.ensemble.machines, config.jobs,
                 [&](int m, const TrainResult& result) {
                   std::lock_guard lock(io);
                   save_model(model_path(out_dir, m), result.params);
                   write_history_csv(out_dir / ("history_" + std::to_string(m) + ".csv"), result.history);
                 });
}

void cmd_evaluate(const fs::path& models_dir, const fs::path& cache_dir, RunConfig config, const fs::path& out_dir,
                  const std::optional<fs::path>& predictions_file) {
  config.resolve();
  const auto test_set = load_split(cache_dir, "test.lspg", true);
  if (test_set.empty()) throw Error(ErrorCategory::data, "test split in " + cache_dir.string() + " is empty");
  check_shape(test_set, config.network, cache_dir / "test.lspg");
  const auto truth = truth_labels(test_set);

  std::vector<PredictionSet> predictions;
  if (predictions_file) {
    predictions = read_predictions_csv(*predictions_file);
  } else {
    std::vector<fs::path> paths;
    for (int m = 0; m < config.ensemble.machines; ++m) paths.push_back(model_path(models_dir, m));
    predictions = predict_all(load_models(paths, config.network), test_set, config.jobs);
  }
  if (predictions.empty()) throw Error(ErrorCategory::data, "no machine predictions to evaluate");
  prepare_output(out_dir, config);

  Rng tie_rng(config.ensemble.tie_seed);
  const auto fused = fuse(predictions, config.ensemble.method, tie_rng, config.ensemble.threshold);
  const auto report = metrics(confusion(truth, fused));

  std::vector<std::pair<std::string, MetricsReport>> per_machine;
  std::array<double, 2> mean_single{0.0, 0.0};
  for (const auto& p : predictions) {
    Rng rng(derive_seed(config.ensemble.tie_seed, {static_cast<std::uint64_t>(p.machine) + 1}));
    const auto single = metrics(confusion(truth, single_machine_labels(p, config.ensemble.method, rng,
                                                                       config.ensemble.threshold)));
    for (std::size_t cls = 0; cls < 2; ++cls) mean_single[cls] += single.per_class[cls].f1 / predictions.size();
    per_machine.emplace_back("machine_" + std::to_string(p.machine), single);
  }

  const std::pair<std::string, MetricsReport> pooled{"pooled", report};
  write_metrics_csv(out_dir / "metrics.csv", std::span(&pooled, 1));
  write_metrics_csv(out_dir / "machine_metrics.csv", per_machine);
  write_predictions_csv(out_dir / "predictions.csv", predictions, config.ensemble.threshold);

  std::string rows = "speaker_id,truth,predicted\n";
  for (const auto& [id, label] : truth) rows += id + "," + std::to_string(label) + "," + std::to_string(fused.at(id)) + "\n";
  write_file_atomic(out_dir / "speaker_predictions.csv", rows);

  json summary;
  summary["config"] = config_json(config);
  summary["machines"] = predictions.size();
  summary["test_speakers"] = truth.size();
  summary["ensemble"] = metrics_json(report);
  summary["single_machine_mean_f1"] = {{"non_depressed", mean_single[0]}, {"depressed", mean_single[1]}};
  write_json(out_dir / "run_summary.json", summary);
}

void cmd_curve(const fs::path& models_dir, const fs::path& cache_dir, RunConfig config, const fs::path& out_dir) {
  config.resolve();
  const auto test_set = load_split(cache_dir, "test.lspg", true);
  if (test_set.empty()) throw Error(ErrorCategory::data, "test split in " + cache_dir.string() + " is empty");
  check_shape(test_set, config.network, cache_dir / "test.lspg");
  const auto paths = list_models(models_dir);
  if (paths.empty()) throw Error(ErrorCategory::io, "no machine_<m>.sdm files in " + models_dir.string());
  const auto pool = predict_all(load_models(paths, config.network), test_set, config.jobs);
  const auto truth = truth_labels(test_set);
  prepare_output(out_dir, config);

  CurveOptions opts;
  opts.machine_counts = config.curve.machine_counts;
  if (opts.machine_counts.empty()) {
    for (int m = 1; m <= static_cast<int>(pool.size()); ++m) opts.machine_counts.push_back(m);
  }
  opts.combinations = config.curve.combinations;
  opts.seed = config.ensemble.tie_seed;
  opts.threshold = config.ensemble.threshold;
  opts.jobs = config.jobs;

  std::vector<MethodCurve> curves;
  for (const auto method : {FusionMethod::average_probabilities, FusionMethod::pooled_mode, FusionMethod::mode_of_modes}) {
    opts.method = method;
    curves.push_back({method, f1_vs_m_experiment(pool, truth, opts)});
  }
  write_file_atomic(out_dir / "curve.csv", curve_csv(curves));
  write_file_atomic(out_dir / "curve.svg", curve_svg(curves));
}

void cmd_crossval(const fs::path& cache_dir, RunConfig config, const fs::path& out_dir) {
  config.resolve();
  const auto train_set = load_split(cache_dir, "train.lspg", true);
  const auto test_set = load_split(cache_dir, "test.lspg", true);
  if (test_set.empty()) throw Error(ErrorCategory::data, "test split in " + cache_dir.string() + " is empty");
  check_shape(train_set, config.network, cache_dir / "train.lspg");
  check_shape(test_set, config.network, cache_dir / "test.lspg");
  prepare_output(out_dir, config);

  CrossValOptions opts;
  opts.folds = config.cv.folds;
  opts.seed = derive_seed(config.seed, {0x6376ULL});
  opts.stratified = config.cv.stratified;
  opts.jobs = config.jobs;
  const auto result = cross_validate(train_set, test_set, config.network, config.train, config.ensemble, opts);

  std::vector<std::pair<std::string, MetricsReport>> scoped;
  for (std::size_t f = 0; f < result.per_fold.size(); ++f) scoped.emplace_back("fold_" + std::to_string(f), result.per_fold[f]);
  scoped.emplace_back("pooled", result.pooled);
  write_metrics_csv(out_dir / "metrics.csv", scoped);

  std::string rows = "fold,speaker_id,truth,predicted\n";
  for (const auto& r : result.rows) {
    rows += std::to_string(r.fold) + "," + r.speaker_id + "," + std::to_string(r.truth) + "," +
            std::to_string(r.predicted) + "\n";
  }
  write_file_atomic(out_dir / "cv_rows.csv", rows);

  json summary;
  summary["config"] = config_json(config);
  summary["folds"] = result.per_fold.size();
  summary["pooled_rows"] = result.rows.size();
  summary["pooled"] = metrics_json(result.pooled);
  write_json(out_dir / "run_summary.json", summary);
}

}  // namespace ensdep
