#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "frameloss/metrics.hpp"

namespace frameloss {

/// Shortest decimal text that reads back as the same double.
std::string format_double(double value);

/// Mono 16-bit PCM.
struct PcmAudio
{
  std::vector<std::int16_t> samples;
  std::uint32_t sample_rate = 16000;
};

/// Reads a RIFF/WAVE file. Only mono little-endian PCM16 is accepted.
PcmAudio read_wav(const std::filesystem::path& path);
void write_wav(const std::filesystem::path& path, const PcmAudio& audio);

/// Label CSV: `time_s,arousal,valence`.
EmotionSeries read_label_csv(const std::filesystem::path& path, double rate);
void write_label_csv(const std::filesystem::path& path, const EmotionSeries& series);

/// Prediction CSV: `frame_index,arousal,valence`. Times are implied by `rate`.
EmotionSeries read_prediction_csv(const std::filesystem::path& path, double rate);
void write_prediction_csv(const std::filesystem::path& path, const EmotionSeries& series);

/// Reads either CSV flavour, picking by header.
EmotionSeries read_series_csv(const std::filesystem::path& path, double rate);

} // namespace frameloss
