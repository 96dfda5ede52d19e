#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ensdep/error.hpp"

namespace ensdep {

/// Binary class label. Positive class is `depressed`.
enum class Label : std::uint8_t { non_depressed = 0, depressed = 1 };

inline int to_int(Label label) { return static_cast<int>(label); }
Label label_from_int(int value);

/// Mono waveform of a single speaker.
struct AudioClip {
  std::vector<double> samples;  // nominal range [-1, 1]
  int sample_rate = 16000;
  std::string speaker_id;
  std::optional<Label> label;

  double duration_s() const {
    return static_cast<double>(samples.size()) / static_cast<double>(sample_rate);
  }
};

enum class WavDefect {
  malformed_header,
  unsupported_encoding,
  empty_payload,
};

class WavError : public Error {
 public:
  WavError(WavDefect defect, const std::string& what)
      : Error(ErrorCategory::format, what), defect_(defect) {}
  WavDefect defect() const noexcept { return defect_; }

 private:
  WavDefect defect_;
};

/// Reads a RIFF/WAVE file holding 16-bit linear PCM. Samples are divided by
/// 32768 and multi-channel frames are averaged down to mono.
AudioClip load_wav(const std::filesystem::path& path);
AudioClip parse_wav(std::string_view bytes, const std::string& source = "<memory>");

/// Encodes a clip as mono 16-bit PCM. Values are rounded to the nearest
/// step of 1/32768 and saturated to [-32768, 32767].
std::string encode_wav(const AudioClip& clip);
void write_wav(const std::filesystem::path& path, const AudioClip& clip);

inline constexpr double kDefaultTrimFrameSeconds = 0.1;
inline constexpr double kDefaultTrimFloorDb = -60.0;

/// Drops every frame whose RMS level (dB re. full scale) is at or below the
/// floor. Frames are consecutive and non-overlapping; a trailing partial
/// frame is judged on its own samples. Clips shorter than one frame are
/// returned unchanged.
AudioClip trim_silence(const AudioClip& clip,
                       double frame_s = kDefaultTrimFrameSeconds,
                       double energy_floor_db = kDefaultTrimFloorDb);

enum class Split : std::uint8_t { train, test };
std::string_view to_string(Split split);
Split split_from_string(std::string_view text);

struct ManifestEntry {
  std::string speaker_id;
  std::string path;  // relative to the manifest directory, or "synth:<seed>"
  Label label = Label::non_depressed;
  Split split = Split::train;
  double duration_s = 0.0;
};

/// One clip per speaker; speaker ids are unique.
struct CorpusManifest {
  std::vector<ManifestEntry> entries;

  void validate() const;
};

void write_manifest_csv(const std::filesystem::path& path, const CorpusManifest& manifest);
CorpusManifest read_manifest_csv(const std::filesystem::path& path);

struct SynthOptions {
  int n_speakers_per_class = 31;
  double duration_s = 720.0;
  int sample_rate = 16000;
  std::uint64_t seed = 0;
  double crop_s = 4.0;  // only used to check duration_s >= 2 * crop_s
  Split split = Split::train;
  std::string id_prefix = "spk";
};

struct SynthCorpus {
  CorpusManifest manifest;
  std::vector<AudioClip> clips;  // parallel to manifest.entries
};

/// Deterministic stand-in corpus. Depressed speakers get a low fundamental
/// (80-120 Hz) and slow amplitude modulation; the others a high fundamental
/// (180-260 Hz) and faster modulation. Noise sits 30 dB under the signal.
SynthCorpus synth_corpus(const SynthOptions& options);

}  // namespace ensdep
