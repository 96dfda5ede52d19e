#include "ensdep/config.hpp"

#include <charconv>
#include <cstdio>
#include <functional>
#include <sstream>

#include "ensdep/binary_io.hpp"
#include "ensdep/error.hpp"
#include "ensdep/random.hpp"

namespace ensdep {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, const char* type) {
  throw Error(ErrorCategory::config, "config key '" + std::string(key) + "': '" + std::string(value) +
                                         "' is not a valid " + type);
}

template <typename Int>
Int parse_int(std::string_view key, std::string_view value) {
  Int out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) bad_value(key, value, "integer");
  return out;
}

double parse_double(std::string_view key, std::string_view value) {
  const std::string text(value);
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(text, &used);
  } catch (const std::exception&) {
    bad_value(key, value, "number");
  }
  if (used != text.size()) bad_value(key, value, "number");
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  bad_value(key, value, "boolean");
}

std::vector<int> parse_int_list(std::string_view key, std::string_view value) {
  std::vector<int> out;
  if (trim(value).empty()) return out;
  std::size_t start = 0;
  while (start <= value.size()) {
    const auto comma = value.find(',', start);
    const auto item = trim(value.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    out.push_back(parse_int<int>(key, item));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_list(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

struct Field {
  std::string key;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define ENSDEP_INT_FIELD(name, member, type)                                                      \
  Field {                                                                                         \
    name, [](RunConfig& c, std::string_view v) { c.member = parse_int<type>(name, v); },          \
        [](const RunConfig& c) { return std::to_string(c.member); }                               \
  }
#define ENSDEP_DOUBLE_FIELD(name, member)                                                         \
  Field {                                                                                         \
    name, [](RunConfig& c, std::string_view v) { c.member = parse_double(name, v); },             \
        [](const RunConfig& c) { return fmt_double(c.member); }                                   \
  }
#define ENSDEP_BOOL_FIELD(name, member)                                                           \
  Field {                                                                                         \
    name, [](RunConfig& c, std::string_view v) { c.member = parse_bool(name, v); },               \
        [](const RunConfig& c) { return std::string(c.member ? "true" : "false"); }               \
  }

const std::vector<Field>& registry() {
  static const std::vector<Field> fields = {
      ENSDEP_INT_FIELD("seed", seed, std::uint64_t),
      ENSDEP_INT_FIELD("jobs", jobs, int),
      ENSDEP_INT_FIELD("synth.train_per_class", synth.train_per_class, int),
      ENSDEP_INT_FIELD("synth.test_per_class", synth.test_per_class, int),
      ENSDEP_DOUBLE_FIELD("synth.duration_s", synth.duration_s),
      ENSDEP_INT_FIELD("synth.sample_rate", synth.sample_rate, int),
      ENSDEP_DOUBLE_FIELD("sampling.crop_s", sampling.crop_s),
      ENSDEP_INT_FIELD("sampling.eval_cap", sampling.eval_cap, std::size_t),
      ENSDEP_BOOL_FIELD("sampling.trim", sampling.trim),
      ENSDEP_DOUBLE_FIELD("sampling.trim_frame_s", sampling.trim_frame_s),
      ENSDEP_DOUBLE_FIELD("sampling.trim_floor_db", sampling.trim_floor_db),
      ENSDEP_DOUBLE_FIELD("stft.window_s", stft.window_s),
      ENSDEP_DOUBLE_FIELD("stft.hop_s", stft.hop_s),
      ENSDEP_INT_FIELD("stft.n_fft", stft.n_fft, int),
      ENSDEP_INT_FIELD("network.N", network.N, int),
      ENSDEP_INT_FIELD("network.k", network.k, int),
      ENSDEP_INT_FIELD("network.s", network.s, int),
      ENSDEP_INT_FIELD("network.p", network.p, int),
      ENSDEP_INT_FIELD("network.n4", network.n4, int),
      ENSDEP_INT_FIELD("train.epochs", train.epochs, int),
      ENSDEP_INT_FIELD("train.batch_size", train.batch_size, int),
      ENSDEP_DOUBLE_FIELD("train.lr_start", train.lr_start),
      ENSDEP_DOUBLE_FIELD("train.lr_end", train.lr_end),
      ENSDEP_DOUBLE_FIELD("train.rho", train.rho),
      ENSDEP_DOUBLE_FIELD("train.eps", train.eps),
      ENSDEP_INT_FIELD("ensemble.machines", ensemble.machines, int),
      Field{"ensemble.method",
            [](RunConfig& c, std::string_view v) {
              c.ensemble.method = fusion_method_from_int(parse_int<int>("ensemble.method", v));
            },
            [](const RunConfig& c) { return std::to_string(static_cast<int>(c.ensemble.method)); }},
      ENSDEP_DOUBLE_FIELD("ensemble.threshold", ensemble.threshold),
      Field{"curve.machine_counts",
            [](RunConfig& c, std::string_view v) { c.curve.machine_counts = parse_int_list("curve.machine_counts", v); },
            [](const RunConfig& c) { return fmt_list(c.curve.machine_counts); }},
      ENSDEP_INT_FIELD("curve.combinations", curve.combinations, int),
      ENSDEP_INT_FIELD("cv.folds", cv.folds, int),
      ENSDEP_BOOL_FIELD("cv.stratified", cv.stratified),
  };
  return fields;
}

#undef ENSDEP_INT_FIELD
#undef ENSDEP_DOUBLE_FIELD
#undef ENSDEP_BOOL_FIELD

const Field& find_field(std::string_view key) {
  for (const auto& f : registry())
    if (f.key == key) return f;
  throw Error(ErrorCategory::config, "unknown config key '" + std::string(key) + "'");
}

}  // namespace

void RunConfig::set(std::string_view key, std::string_view value) { find_field(key).set(*this, trim(value)); }

std::string RunConfig::get(std::string_view key) const { return find_field(key).get(*this); }

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> out = [] {
    std::vector<std::string> k;
    for (const auto& f : registry()) k.push_back(f.key);
    return k;
  }();
  return out;
}

void RunConfig::merge_text(std::string_view text, std::string_view source) {
  std::size_t lineno = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto nl = text.find('\n', start);
    auto line = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (!line.empty()) {
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) {
        throw Error(ErrorCategory::config,
                    std::string(source) + ":" + std::to_string(lineno) + ": expected 'key = value'");
      }
      try {
        set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
      } catch (const Error& e) {
        throw Error(ErrorCategory::config, std::string(source) + ":" + std::to_string(lineno) + ": " + e.what());
      }
    }
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
}

std::string RunConfig::dump() const {
  std::string out;
  for (const auto& f : registry()) out += f.key + " = " + f.get(*this) + "\n";
  return out;
}

void RunConfig::resolve() {
  if (jobs < 1) throw Error(ErrorCategory::config, "jobs must be >= 1");
  if (synth.train_per_class < 1 || synth.test_per_class < 0) {
    throw Error(ErrorCategory::config, "synth: need train_per_class >= 1 and test_per_class >= 0");
  }
  if (synth.sample_rate <= 0) throw Error(ErrorCategory::config, "synth.sample_rate must be positive");
  if (!(sampling.crop_s > 0.0)) throw Error(ErrorCategory::config, "sampling.crop_s must be positive");
  if (sampling.eval_cap < 1) throw Error(ErrorCategory::config, "sampling.eval_cap must be >= 1");
  if (!(sampling.trim_frame_s > 0.0)) throw Error(ErrorCategory::config, "sampling.trim_frame_s must be positive");
  if (curve.combinations < 1) throw Error(ErrorCategory::config, "curve.combinations must be >= 1");
  if (cv.folds < 1) throw Error(ErrorCategory::config, "cv.folds must be >= 1");

  stft.validate(synth.sample_rate);
  network.F0 = stft.frequency_bins();
  network.T0 = stft.frames(crop_length(sampling.crop_s, synth.sample_rate), synth.sample_rate);
  network.validate();
  train.seed = seed;
  train.validate();
  ensemble.tie_seed = derive_seed(seed, {0x746965ULL});
  ensemble.validate();
}

std::uint64_t RunConfig::sampling_seed() const { return derive_seed(seed, {0x73616d70ULL}); }

std::uint64_t RunConfig::synth_seed(Split split) const {
  return derive_seed(seed, {0x73796e74ULL, static_cast<std::uint64_t>(split)});
}

RunConfig load_config_file(const std::string& path) {
  RunConfig cfg;
  cfg.merge_text(read_file(path), path);
  return cfg;
}

}  // namespace ensdep
