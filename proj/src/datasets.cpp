#include "frameloss/datasets.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>

#include <json.hpp>

#include "frameloss/rng.hpp"

namespace frameloss {

const char*
to_string(Split split)
noexcept
{
  switch (split)
  {
    case Split::train: return "train";
    case Split::validation: return "validation";
    case Split::test: return "test";
  }
  return "?";
}

Split
split_from_string(std::string_view text)
{
  if (text == "train") return Split::train;
  if (text == "validation") return Split::validation;
  if (text == "test") return Split::test;
  throw Error(ErrorCode::invalid_config, "unknown split '" + std::string(text) + "'");
}

std::size_t
rate_ratio(std::uint32_t audio_rate, std::uint32_t label_rate)
{
  if (label_rate == 0 || audio_rate == 0 || audio_rate % label_rate != 0)
  {
    throw Error(ErrorCode::invalid_ratio,
                "audio rate " + std::to_string(audio_rate) + " is not a multiple of label rate "
                  + std::to_string(label_rate));
  }
  return audio_rate / label_rate;
}

void
validate(const Track& track)
{
  if (track.labels.rate != std::floor(track.labels.rate) || track.labels.rate < 1.0)
  {
    throw Error(ErrorCode::invalid_ratio, track.id + ": label rate must be a positive integer");
  }
  const std::size_t r = rate_ratio(track.audio_rate, track.label_rate());
  if (track.labels.times.size() != track.labels.values.rows())
  {
    throw Error(ErrorCode::length_mismatch, track.id + ": label times and values differ in length");
  }
  const std::size_t expected = r * track.label_count();
  const std::size_t actual = track.audio.size();
  const std::size_t gap = expected > actual ? expected - actual : actual - expected;
  if (gap >= r && !(expected == 0 && actual == 0))
  {
    throw Error(ErrorCode::length_mismatch,
                track.id + ": " + std::to_string(actual) + " audio samples do not cover "
                  + std::to_string(track.label_count()) + " label frames");
  }
}

std::filesystem::path
Manifest::resolve(const std::filesystem::path& p)
const
{
  return p.is_absolute() ? p : base_dir / p;
}

Manifest
load_manifest(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
  {
    throw Error(ErrorCode::io, "cannot open manifest " + path.string());
  }
  nlohmann::json j;
  try
  {
    j = nlohmann::json::parse(in);
    Manifest manifest;
    manifest.audio_rate = j.at("audio_rate").get<std::uint32_t>();
    manifest.label_rate = j.at("label_rate").get<std::uint32_t>();
    manifest.base_dir = path.parent_path();
    std::set<std::string> seen;
    for (const auto& t : j.at("tracks"))
    {
      ManifestEntry entry;
      entry.id = t.at("id").get<std::string>();
      entry.audio_path = t.at("audio_path").get<std::string>();
      entry.labels_path = t.at("labels_path").get<std::string>();
      entry.split = split_from_string(t.at("split").get<std::string>());
      if (!seen.insert(entry.id).second)
      {
        throw Error(ErrorCode::invalid_config, "duplicate track id '" + entry.id + "'");
      }
      for (const auto& file : {entry.audio_path, entry.labels_path})
      {
        if (!std::filesystem::exists(manifest.resolve(file)))
        {
          throw Error(ErrorCode::io, "track '" + entry.id + "': missing file " + manifest.resolve(file).string());
        }
      }
      manifest.tracks.push_back(std::move(entry));
    }
    return manifest;
  }
  catch (const nlohmann::json::exception& e)
  {
    throw Error(ErrorCode::invalid_config, path.string() + ": " + e.what());
  }
}

void
save_manifest(const std::filesystem::path& path, const Manifest& manifest)
{
  nlohmann::ordered_json j;
  j["audio_rate"] = manifest.audio_rate;
  j["label_rate"] = manifest.label_rate;
  j["tracks"] = nlohmann::ordered_json::array();
  for (const auto& entry : manifest.tracks)
  {
    nlohmann::ordered_json t;
    t["id"] = entry.id;
    t["audio_path"] = entry.audio_path.generic_string();
    t["labels_path"] = entry.labels_path.generic_string();
    t["split"] = to_string(entry.split);
    j["tracks"].push_back(std::move(t));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out)
  {
    throw Error(ErrorCode::io, "cannot write " + path.string());
  }
  out << j.dump(2) << '\n';
}

Track
load_track(const Manifest& manifest, const ManifestEntry& entry)
{
  Track track;
  track.id = entry.id;
  auto audio = read_wav(manifest.resolve(entry.audio_path));
  if (audio.sample_rate != manifest.audio_rate)
  {
    throw Error(ErrorCode::invalid_config,
                entry.id + ": WAV rate " + std::to_string(audio.sample_rate)
                  + " does not match manifest audio rate " + std::to_string(manifest.audio_rate));
  }
  track.audio = std::move(audio.samples);
  track.audio_rate = manifest.audio_rate;
  track.labels = read_label_csv(manifest.resolve(entry.labels_path), manifest.label_rate);
  validate(track);
  return track;
}

ManifestEntry
save_track(const std::filesystem::path& dir, const Track& track, Split split)
{
  ManifestEntry entry{track.id, track.id + ".wav", track.id + ".csv", split};
  write_wav(dir / entry.audio_path, PcmAudio{track.audio, track.audio_rate});
  write_label_csv(dir / entry.labels_path, track.labels);
  return entry;
}

namespace {

double
median_of(std::vector<double>& window)
{
  std::sort(window.begin(), window.end());
  const std::size_t n = window.size();
  if (n % 2 == 1)
  {
    return window[n / 2];
  }
  return 0.5 * (window[n / 2 - 1] + window[n / 2]);
}

} // namespace

EmotionSeries
median_pool(const EmotionSeries& labels, std::size_t factor, bool truncate)
{
  if (factor < 1)
  {
    throw Error(ErrorCode::invalid_ratio, "pooling factor must be >= 1");
  }
  const auto n = static_cast<std::size_t>(labels.size());
  if (n % factor != 0 && !truncate)
  {
    throw Error(ErrorCode::indivisible_length,
                std::to_string(n) + " frames do not divide into windows of " + std::to_string(factor));
  }
  const auto windows = static_cast<Eigen::Index>(n / factor);
  const auto f = static_cast<Eigen::Index>(factor);

  EmotionSeries pooled;
  pooled.rate = labels.rate / static_cast<double>(factor);
  pooled.values.resize(windows, 2);
  pooled.times.resize(windows);
  std::vector<double> window(factor);
  for (Eigen::Index w = 0; w < windows; ++w)
  {
    pooled.times(w) = labels.times(w * f);
    for (Eigen::Index d : {arousal, valence})
    {
      for (Eigen::Index i = 0; i < f; ++i)
      {
        window[static_cast<std::size_t>(i)] = labels.values(w * f + i, d);
      }
      pooled.values(w, d) = median_of(window);
    }
  }
  return pooled;
}

std::vector<Track>
segment(const Track& track, double seconds)
{
  const double frames_exact = seconds * track.labels.rate;
  const double frames_rounded = std::round(frames_exact);
  if (!(seconds > 0.0) || std::abs(frames_exact - frames_rounded) > 1e-9 || frames_rounded < 1.0)
  {
    throw Error(ErrorCode::invalid_duration,
                "segment length " + format_double(seconds) + " s is not a whole number of label frames");
  }
  const std::size_t r = rate_ratio(track.audio_rate, track.label_rate());
  const auto per_segment = static_cast<std::size_t>(frames_rounded);
  const std::size_t count = track.label_count() / per_segment;

  std::vector<Track> pieces;
  pieces.reserve(count);
  for (std::size_t s = 0; s < count; ++s)
  {
    const auto first = static_cast<Eigen::Index>(s * per_segment);
    const auto rows = static_cast<Eigen::Index>(per_segment);
    Track piece;
    char suffix[32];
    std::snprintf(suffix, sizeof suffix, "_seg%03zu", s);
    piece.id = track.id + suffix;
    piece.audio_rate = track.audio_rate;
    piece.labels.rate = track.labels.rate;
    piece.labels.values = track.labels.values.middleRows(first, rows);
    piece.labels.times = track.labels.times.segment(first, rows).array() - track.labels.times(first);

    const std::size_t audio_begin = std::min(s * per_segment * r, track.audio.size());
    const std::size_t audio_end = std::min((s + 1) * per_segment * r, track.audio.size());
    piece.audio.assign(track.audio.begin() + static_cast<std::ptrdiff_t>(audio_begin),
                       track.audio.begin() + static_cast<std::ptrdiff_t>(audio_end));
    pieces.push_back(std::move(piece));
  }
  return pieces;
}

Track
corrupt_track(const Track& track, const BinaryMask& mask)
{
  if (mask.size() != track.label_count())
  {
    throw Error(ErrorCode::length_mismatch,
                track.id + ": mask has " + std::to_string(mask.size()) + " bits for "
                  + std::to_string(track.label_count()) + " label frames");
  }
  const std::size_t r = rate_ratio(track.audio_rate, track.label_rate());

  Track out;
  out.id = track.id;
  out.audio_rate = track.audio_rate;
  out.labels.rate = track.labels.rate;
  out.labels.values = apply_rows(mask, track.labels.values);
  out.labels.times = apply_rows(mask, track.labels.times);

  // Block k covers samples [k r, (k + 1) r); the last block also owns any
  // sub-frame tail of the audio.
  const std::size_t n = mask.size();
  out.audio.reserve(mask.popcount() * r);
  for (std::size_t k = 0; k < n; ++k)
  {
    if (!mask[k])
    {
      continue;
    }
    const std::size_t begin = std::min(k * r, track.audio.size());
    const std::size_t end = k + 1 == n ? track.audio.size() : std::min((k + 1) * r, track.audio.size());
    out.audio.insert(out.audio.end(),
                     track.audio.begin() + static_cast<std::ptrdiff_t>(begin),
                     track.audio.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

void
validate(const SynthConfig& config)
{
  rate_ratio(config.audio_rate, config.label_rate);
  if (!(config.seconds >= 20.0))
  {
    throw Error(ErrorCode::invalid_config, "synthetic tracks must be at least 20 s long");
  }
  const double frames = config.seconds * config.label_rate;
  if (std::abs(frames - std::round(frames)) > 1e-9)
  {
    throw Error(ErrorCode::invalid_config, "track length must be a whole number of label frames");
  }
}

namespace {

struct Trajectory
{
  std::array<double, 3> amplitude;
  std::array<double, 3> frequency;  // Hz
  std::array<double, 3> phase;

  double at(double t) const
  {
    double v = 0.0;
    for (std::size_t j = 0; j < 3; ++j)
    {
      v += amplitude[j] * std::sin(2.0 * std::numbers::pi * frequency[j] * t + phase[j]);
    }
    return v;
  }
};

Trajectory
draw_trajectory(SplitMix64& rng, const std::array<double, 3>& base_frequency)
{
  Trajectory traj{{0.45, 0.3, 0.15}, {}, {}};
  for (std::size_t j = 0; j < 3; ++j)
  {
    traj.frequency[j] = base_frequency[j] * (0.8 + 0.4 * rng.next_double());
    traj.phase[j] = 2.0 * std::numbers::pi * rng.next_double();
  }
  return traj;
}

constexpr std::array<Split, 4> split_cycle{Split::train, Split::train, Split::validation, Split::test};

} // namespace

Track
synth_track(const SynthConfig& config, std::uint64_t seed, std::size_t index)
{
  validate(config);
  SplitMix64 rng{derive_seed(seed + index)};
  const Trajectory arousal_traj = draw_trajectory(rng, {1.0 / 37.0, 1.0 / 17.0, 1.0 / 7.3});
  const Trajectory valence_traj = draw_trajectory(rng, {1.0 / 41.0, 1.0 / 19.0, 1.0 / 9.1});

  const std::size_t r = rate_ratio(config.audio_rate, config.label_rate);
  const auto n = static_cast<Eigen::Index>(std::llround(config.seconds * config.label_rate));

  Track track;
  char id[32];
  std::snprintf(id, sizeof id, "synth_%03zu", index);
  track.id = id;
  track.audio_rate = config.audio_rate;

  LabelMatrix values(n, 2);
  for (Eigen::Index k = 0; k < n; ++k)
  {
    const double t = static_cast<double>(k) / config.label_rate;
    values(k, arousal) = std::clamp(arousal_traj.at(t), -1.0, 1.0);
    values(k, valence) = std::clamp(valence_traj.at(t), -1.0, 1.0);
  }
  track.labels = EmotionSeries::uniform(std::move(values), config.label_rate);

  track.audio.resize(static_cast<std::size_t>(n) * r);
  double state = 0.0;
  for (std::size_t i = 0; i < track.audio.size(); ++i)
  {
    const auto k = static_cast<Eigen::Index>(i / r);
    const double a = track.labels.values(k, arousal);
    const double v = track.labels.values(k, valence);
    const double amplitude = 1000.0 + 9000.0 * 0.5 * (a + 1.0);
    const double alpha = 0.02 + 0.9 * 0.5 * (v + 1.0);
    // Unit-variance-normalised one-pole low-pass of uniform noise.
    const double noise = 2.0 * rng.next_double() - 1.0;
    state += alpha * (noise - state);
    const double gain = 1.0 / std::sqrt(alpha / (2.0 - alpha));
    const double sample = std::clamp(amplitude * gain * state, -32768.0, 32767.0);
    track.audio[i] = static_cast<std::int16_t>(std::lround(sample));
  }
  return track;
}

Manifest
synth_corpus(const SynthConfig& config, std::uint64_t seed, const std::filesystem::path& out_dir)
{
  validate(config);
  std::filesystem::create_directories(out_dir);
  Manifest manifest;
  manifest.audio_rate = config.audio_rate;
  manifest.label_rate = config.label_rate;
  manifest.base_dir = out_dir;
  for (std::size_t i = 0; i < config.n_tracks; ++i)
  {
    const Track track = synth_track(config, seed, i);
    manifest.tracks.push_back(save_track(out_dir, track, split_cycle[i % split_cycle.size()]));
  }
  save_manifest(out_dir / "manifest.json", manifest);
  return manifest;
}

} // namespace frameloss
