#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "frameloss/io.hpp"
#include "frameloss/mask.hpp"
#include "frameloss/metrics.hpp"

namespace frameloss {

enum class Split { train, validation, test };

const char* to_string(Split split) noexcept;
Split split_from_string(std::string_view text);

/// Audio and labels covering the same stretch of time. The audio rate is an
/// integer multiple of the label rate.
struct Track
{
  std::string id;
  std::vector<std::int16_t> audio;
  std::uint32_t audio_rate = 16000;
  EmotionSeries labels;

  std::uint32_t label_rate() const noexcept { return static_cast<std::uint32_t>(labels.rate); }
  std::size_t label_count() const noexcept { return static_cast<std::size_t>(labels.size()); }

  /// Every frame was dropped.
  bool degenerate() const noexcept { return labels.size() == 0; }
};

/// Throws unless the rates divide and audio and label durations agree within
/// one label frame.
void validate(const Track& track);

struct ManifestEntry
{
  std::string id;
  std::filesystem::path audio_path;  ///< relative to the manifest directory, or absolute
  std::filesystem::path labels_path;
  Split split = Split::train;
};

struct Manifest
{
  std::vector<ManifestEntry> tracks;
  std::uint32_t audio_rate = 16000;
  std::uint32_t label_rate = 5;
  std::filesystem::path base_dir;  ///< directory relative paths resolve against; not serialized

  std::filesystem::path resolve(const std::filesystem::path& p) const;
};

/// Parses and checks a manifest: unique ids, referenced files present.
Manifest load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const Manifest& manifest);

Track load_track(const Manifest& manifest, const ManifestEntry& entry);

/// Writes `<dir>/<id>.wav` and `<dir>/<id>.csv`; returns an entry with paths
/// relative to `dir`.
ManifestEntry save_track(const std::filesystem::path& dir, const Track& track, Split split);

/// audio_rate / label_rate; throws invalid_ratio unless it divides exactly.
std::size_t rate_ratio(std::uint32_t audio_rate, std::uint32_t label_rate);

/// Per-dimension median over non-overlapping windows of `factor` frames. An
/// even window takes the mean of its two central values. A trailing partial
/// window is an error unless `truncate` is set, in which case it is dropped.
EmotionSeries median_pool(const EmotionSeries& labels, std::size_t factor, bool truncate = false);

/// Consecutive non-overlapping pieces of `seconds` each; a trailing remainder
/// is dropped. Segment k is named `<id>_seg<kkk>`.
std::vector<Track> segment(const Track& track, double seconds);

/// Drops label frames where the mask is 0 and the matching audio blocks.
Track corrupt_track(const Track& track, const BinaryMask& mask);

struct SynthConfig
{
  std::size_t n_tracks = 8;
  double seconds = 60.0;
  std::uint32_t audio_rate = 16000;
  std::uint32_t label_rate = 5;
};

void validate(const SynthConfig& config);

/// One synthetic track. Arousal drives the audio envelope, valence drives a
/// one-pole low-pass on the noise source. Deterministic in (config, seed, index).
Track synth_track(const SynthConfig& config, std::uint64_t seed, std::size_t index);

/// Writes every synthetic track plus `manifest.json` under `out_dir`.
Manifest synth_corpus(const SynthConfig& config, std::uint64_t seed, const std::filesystem::path& out_dir);

} // namespace frameloss
