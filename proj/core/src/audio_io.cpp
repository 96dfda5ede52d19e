#include "ensdep/audio_io.hpp"

#include <algorithm>
#include <charconv>
#include <complex>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "ensdep/binary_io.hpp"
#include "ensdep/random.hpp"

namespace ensdep {

Label label_from_int(int value) {
  if (value == 0) return Label::non_depressed;
  if (value == 1) return Label::depressed;
  throw Error(ErrorCategory::data, "label must be 0 or 1, got " + std::to_string(value));
}

// ---------------------------------------------------------------------------
// WAV

namespace {

constexpr std::uint16_t kFormatPcm = 1;

}  // namespace

AudioClip parse_wav(std::string_view bytes, const std::string& source) {
  ByteReader reader(bytes, source);
  auto malformed = [&](const std::string& why) {
    return WavError(WavDefect::malformed_header, source + ": malformed header: " + why);
  };

  if (bytes.size() < 12) throw malformed("file shorter than RIFF preamble");
  if (reader.bytes(4) != "RIFF") throw malformed("missing RIFF tag");
  reader.u32();  // riff size; unreliable in the wild, ignored
  if (reader.bytes(4) != "WAVE") throw malformed("missing WAVE tag");

  bool have_fmt = false;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t bits = 0;
  std::string_view payload;
  bool have_data = false;

  while (reader.remaining() >= 8 && !have_data) {
    const auto id = reader.bytes(4);
    const auto size = reader.u32();
    if (id == "fmt ") {
      if (size < 16 || size > reader.remaining()) throw malformed("bad fmt chunk size");
      ByteReader fmt(reader.bytes(size), source + " fmt chunk");
      const auto format = fmt.u16();
      channels = fmt.u16();
      sample_rate = fmt.u32();
      fmt.u32();  // byte rate
      fmt.u16();  // block align
      bits = fmt.u16();
      if (format != kFormatPcm) {
        throw WavError(WavDefect::unsupported_encoding,
                       source + ": unsupported encoding: format code " + std::to_string(format) +
                           " (only PCM = 1)");
      }
      if (bits != 16) {
        throw WavError(WavDefect::unsupported_encoding,
                       source + ": unsupported encoding: " + std::to_string(bits) +
                           " bits per sample (only 16)");
      }
      if (channels == 0) throw malformed("zero channels");
      if (sample_rate == 0) throw malformed("zero sample rate");
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw malformed("data chunk before fmt chunk");
      // Truncated payloads are common; take what is present.
      payload = reader.bytes(std::min<std::size_t>(size, reader.remaining()));
      have_data = true;
    } else {
      if (size > reader.remaining()) throw malformed("chunk '" + std::string(id) + "' overruns file");
      reader.bytes(size);
    }
    if ((size & 1U) != 0 && reader.remaining() > 0 && !have_data) reader.u8();
  }
  if (!have_fmt) throw malformed("no fmt chunk");
  if (!have_data) throw malformed("no data chunk");

  const std::size_t frame_bytes = 2U * channels;
  const std::size_t frames = payload.size() / frame_bytes;
  if (frames == 0) throw WavError(WavDefect::empty_payload, source + ": empty payload");

  AudioClip clip;
  clip.sample_rate = static_cast<int>(sample_rate);
  clip.samples.resize(frames);
  ByteReader data(payload, source + " data chunk");
  for (std::size_t f = 0; f < frames; ++f) {
    double acc = 0.0;
    for (std::uint16_t c = 0; c < channels; ++c) {
      acc += static_cast<double>(static_cast<std::int16_t>(data.u16())) / 32768.0;
    }
    clip.samples[f] = acc / channels;
  }
  return clip;
}

AudioClip load_wav(const std::filesystem::path& path) {
  return parse_wav(read_file(path), path.string());
}

std::string encode_wav(const AudioClip& clip) {
  const auto n = static_cast<std::uint32_t>(clip.samples.size());
  ByteWriter w;
  w.bytes("RIFF");
  w.u32(36 + 2 * n);
  w.bytes("WAVE");
  w.bytes("fmt ");
  w.u32(16);
  w.u16(kFormatPcm);
  w.u16(1);
  w.u32(static_cast<std::uint32_t>(clip.sample_rate));
  w.u32(static_cast<std::uint32_t>(clip.sample_rate) * 2);
  w.u16(2);
  w.u16(16);
  w.bytes("data");
  w.u32(2 * n);
  for (const double x : clip.samples) {
    const double q = std::clamp(std::round(x * 32768.0), -32768.0, 32767.0);
    w.u16(static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
  }
  return w.release();
}

void write_wav(const std::filesystem::path& path, const AudioClip& clip) {
  write_file_atomic(path, encode_wav(clip));
}

// ---------------------------------------------------------------------------
// Silence trimming

AudioClip trim_silence(const AudioClip& clip, double frame_s, double energy_floor_db) {
  if (!(frame_s > 0.0)) throw Error(ErrorCategory::config, "trim frame length must be positive");
  const auto frame = static_cast<std::size_t>(std::llround(frame_s * clip.sample_rate));
  if (frame == 0 || clip.samples.size() < frame) return clip;

  AudioClip out = clip;
  out.samples.clear();
  for (std::size_t start = 0; start < clip.samples.size(); start += frame) {
    const std::size_t stop = std::min(start + frame, clip.samples.size());
    double energy = 0.0;
    for (std::size_t i = start; i < stop; ++i) energy += clip.samples[i] * clip.samples[i];
    const double rms = std::sqrt(energy / static_cast<double>(stop - start));
    const double level_db = rms > 0.0 ? 20.0 * std::log10(rms) : -INFINITY;
    if (level_db > energy_floor_db) {
      out.samples.insert(out.samples.end(), clip.samples.begin() + static_cast<std::ptrdiff_t>(start),
                         clip.samples.begin() + static_cast<std::ptrdiff_t>(stop));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Manifest

std::string_view to_string(Split split) { return split == Split::train ? "train" : "test"; }

Split split_from_string(std::string_view text) {
  if (text == "train") return Split::train;
  if (text == "test") return Split::test;
  throw Error(ErrorCategory::format, "unknown split '" + std::string(text) + "'");
}

void CorpusManifest::validate() const {
  std::set<std::string> seen;
  for (const auto& e : entries) {
    if (e.speaker_id.empty()) throw Error(ErrorCategory::data, "manifest entry with empty speaker_id");
    if (e.speaker_id.find_first_of(",\n\r") != std::string::npos) {
      throw Error(ErrorCategory::data, "speaker_id '" + e.speaker_id + "' contains a separator");
    }
    if (!seen.insert(e.speaker_id).second) {
      throw Error(ErrorCategory::data, "speaker '" + e.speaker_id + "' has more than one clip");
    }
  }
}

void write_manifest_csv(const std::filesystem::path& path, const CorpusManifest& manifest) {
  manifest.validate();
  std::string out = "speaker_id,path,label,split,duration_s\n";
  char num[64];
  for (const auto& e : manifest.entries) {
    std::snprintf(num, sizeof num, "%.6f", e.duration_s);
    out += e.speaker_id + "," + e.path + "," + std::to_string(to_int(e.label)) + "," +
           std::string(to_string(e.split)) + "," + num + "\n";
  }
  write_file_atomic(path, out);
}

namespace {

std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

}  // namespace

CorpusManifest read_manifest_csv(const std::filesystem::path& path) {
  const auto text = read_file(path);
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCategory::format, path.string() + ": empty manifest");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "speaker_id,path,label,split,duration_s") {
    throw Error(ErrorCategory::format, path.string() + ": unexpected manifest header '" + line + "'");
  }
  CorpusManifest manifest;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    const auto where = path.string() + ":" + std::to_string(lineno);
    if (f.size() != 5) throw Error(ErrorCategory::format, where + ": expected 5 fields");
    ManifestEntry e;
    e.speaker_id = std::string(f[0]);
    e.path = std::string(f[1]);
    int label = -1;
    std::from_chars(f[2].data(), f[2].data() + f[2].size(), label);
    if (label != 0 && label != 1) throw Error(ErrorCategory::format, where + ": label must be 0 or 1");
    e.label = label_from_int(label);
    e.split = split_from_string(f[3]);
    try {
      e.duration_s = std::stod(std::string(f[4]));
    } catch (const std::exception&) {
      throw Error(ErrorCategory::format, where + ": bad duration");
    }
    manifest.entries.push_back(std::move(e));
  }
  manifest.validate();
  return manifest;
}

// ---------------------------------------------------------------------------
// Synthetic corpus

namespace {

AudioClip synth_clip(Label label, double duration_s, int sample_rate, Rng& rng) {
  const bool low = label == Label::depressed;
  const double f0 = low ? rng.uniform(80.0, 120.0) : rng.uniform(180.0, 260.0);
  const double am_rate = low ? rng.uniform(0.5, 1.5) : rng.uniform(3.0, 5.0);
  const double am_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double vib_rate = rng.uniform(0.1, 0.4);
  const double vib_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const int harmonics = std::max(1, static_cast<int>(4000.0 / f0));
  // Harmonic h contributes sin(h * theta + phase_h) / h = Im(coef_h * z^h)
  // with z = exp(i * theta).
  std::vector<std::complex<double>> coef(static_cast<std::size_t>(harmonics));
  for (int h = 1; h <= harmonics; ++h) {
    coef[static_cast<std::size_t>(h - 1)] = std::polar(1.0 / h, rng.uniform(0.0, 2.0 * std::numbers::pi));
  }

  const auto n = static_cast<std::size_t>(std::llround(duration_s * sample_rate));
  const double dt = 1.0 / sample_rate;
  // Jitter is an AR(1) process around the nominal f0: narrow, slowly varying.
  const double jitter_pole = 0.9995;
  const double jitter_sigma = 0.01;
  const double jitter_drive = jitter_sigma * std::sqrt(1.0 - jitter_pole * jitter_pole);

  AudioClip clip;
  clip.sample_rate = sample_rate;
  clip.label = label;
  clip.samples.resize(n);
  double theta = 0.0;
  double jitter = 0.0;
  double peak = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * dt;
    jitter = jitter_pole * jitter + jitter_drive * rng.normal();
    const double vibrato = 0.015 * std::sin(2.0 * std::numbers::pi * vib_rate * t + vib_phase);
    theta += 2.0 * std::numbers::pi * f0 * (1.0 + vibrato + jitter) * dt;
    const double envelope = 0.55 + 0.35 * std::sin(2.0 * std::numbers::pi * am_rate * t + am_phase);
    const std::complex<double> z(std::cos(theta), std::sin(theta));
    std::complex<double> zh = z;
    double s = 0.0;
    for (const auto& c : coef) {
      s += c.real() * zh.imag() + c.imag() * zh.real();
      zh *= z;
    }
    s *= envelope;
    clip.samples[i] = s;
    peak = std::max(peak, std::abs(s));
  }

  const double gain = peak > 0.0 ? 0.7 / peak : 1.0;
  double energy = 0.0;
  for (auto& x : clip.samples) {
    x *= gain;
    energy += x * x;
  }
  const double rms = std::sqrt(energy / static_cast<double>(std::max<std::size_t>(n, 1)));
  const double noise_sigma = rms * std::pow(10.0, -30.0 / 20.0);
  for (auto& x : clip.samples) x = std::clamp(x + noise_sigma * rng.normal(), -1.0, 1.0);
  return clip;
}

}  // namespace

SynthCorpus synth_corpus(const SynthOptions& options) {
  if (options.n_speakers_per_class < 1) {
    throw Error(ErrorCategory::config, "synth: n_speakers_per_class must be >= 1");
  }
  if (options.sample_rate <= 0) throw Error(ErrorCategory::config, "synth: sample_rate must be > 0");
  if (!(options.duration_s >= 2.0 * options.crop_s)) {
    throw Error(ErrorCategory::config, "synth: duration_s must be at least twice the crop length");
  }

  SynthCorpus corpus;
  const int per_class = options.n_speakers_per_class;
  for (int cls = 0; cls < 2; ++cls) {
    const Label label = label_from_int(cls);
    for (int i = 0; i < per_class; ++i) {
      const int index = cls * per_class + i;
      const auto speaker_seed = derive_seed(options.seed, {static_cast<std::uint64_t>(index),
                                                           static_cast<std::uint64_t>(cls)});
      Rng rng(speaker_seed);
      const double duration = rng.uniform(options.duration_s / 2.0, options.duration_s);
      AudioClip clip = synth_clip(label, duration, options.sample_rate, rng);

      char id[64];
      std::snprintf(id, sizeof id, "%s%04d", options.id_prefix.c_str(), index);
      clip.speaker_id = id;

      ManifestEntry entry;
      entry.speaker_id = clip.speaker_id;
      entry.path = "synth:" + std::to_string(speaker_seed);
      entry.label = label;
      entry.split = options.split;
      entry.duration_s = clip.duration_s();
      corpus.manifest.entries.push_back(std::move(entry));
      corpus.clips.push_back(std::move(clip));
    }
  }
  return corpus;
}

}  // namespace ensdep
