#include "frameloss/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <set>
#include <thread>

#include <json.hpp>

namespace frameloss {

const char*
to_string(RegimeKind kind)
noexcept
{
  switch (kind)
  {
    case RegimeKind::mismatched: return "mismatched";
    case RegimeKind::multi: return "multi";
    case RegimeKind::matched: return "matched";
    case RegimeKind::augmentation: return "augmentation";
  }
  return "?";
}

RegimeKind
regime_from_string(std::string_view text)
{
  if (text == "mismatched") return RegimeKind::mismatched;
  if (text == "multi") return RegimeKind::multi;
  if (text == "matched") return RegimeKind::matched;
  if (text == "augmentation") return RegimeKind::augmentation;
  throw Error(ErrorCode::invalid_config, "unknown setting '" + std::string(text) + "'");
}

RegimeConfig
RegimeConfig::multi(Interval pn, Interval pl)
{
  RegimeConfig config;
  config.kind = RegimeKind::multi;
  config.pn_range = pn;
  config.pl_range = pl;
  return config;
}

RegimeConfig
RegimeConfig::matched(Category pn, Category pl)
{
  RegimeConfig config;
  config.kind = RegimeKind::matched;
  config.pn_category = pn;
  config.pl_category = pl;
  return config;
}

RegimeConfig
RegimeConfig::augmentation()
{
  RegimeConfig config;
  config.kind = RegimeKind::augmentation;
  config.pn_category = Category::high;
  config.pl_category = Category::low;
  return config;
}

std::optional<LossParams>
plan_batch_params(const RegimeConfig& regime, SplitMix64& rng)
{
  switch (regime.kind)
  {
    case RegimeKind::mismatched:
      return std::nullopt;
    case RegimeKind::multi:
    {
      auto pn = regime.pn_range;
      pn.lo = std::max(pn.lo, pn_floor);
      pn.hi = std::max(pn.hi, pn.lo);
      return sample_params(pn, regime.pl_range, rng);
    }
    case RegimeKind::matched:
      return sample_params(category_range(regime.pn_category, ParamKind::pn),
                           category_range(regime.pl_category, ParamKind::pl), rng);
    case RegimeKind::augmentation:
      return sample_params(category_range(Category::high, ParamKind::pn),
                           category_range(Category::low, ParamKind::pl), rng);
  }
  return std::nullopt;
}

std::string
model_key(RegimeKind kind, Category pn, Category pl)
{
  if (kind == RegimeKind::matched)
  {
    return std::string("matched:") + to_string(pn) + ":" + to_string(pl);
  }
  return to_string(kind);
}

ModelRegistry
ModelRegistry::placeholder()
{
  ModelRegistry registry;
  for (auto kind : {RegimeKind::mismatched, RegimeKind::multi, RegimeKind::augmentation})
  {
    registry.checkpoints[model_key(kind)] = "";
  }
  for (auto pn : {Category::low, Category::mid, Category::high})
  {
    for (auto pl : {Category::low, Category::mid, Category::high})
    {
      registry.checkpoints[model_key(RegimeKind::matched, pn, pl)] = "";
    }
  }
  return registry;
}

ModelRegistry
load_registry(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
  {
    throw Error(ErrorCode::io, "cannot open registry " + path.string());
  }
  try
  {
    const auto j = nlohmann::json::parse(in);
    ModelRegistry registry;
    for (const auto& [key, value] : j.at("models").items())
    {
      std::filesystem::path checkpoint = value.get<std::string>();
      if (checkpoint.is_relative())
      {
        checkpoint = path.parent_path() / checkpoint;
      }
      registry.checkpoints[key] = checkpoint.string();
    }
    return registry;
  }
  catch (const nlohmann::json::exception& e)
  {
    throw Error(ErrorCode::invalid_config, path.string() + ": " + e.what());
  }
}

std::string
select_model(RegimeKind kind, const LossParams& cell, const ModelRegistry& registry)
{
  std::string key = kind == RegimeKind::matched
                      ? model_key(kind, classify(cell.p_n, ParamKind::pn).category,
                                  classify(cell.p_l, ParamKind::pl).category)
                      : model_key(kind);
  if (!registry.contains(key))
  {
    throw Error(ErrorCode::missing_model, "registry has no model '" + key + "'");
  }
  return key;
}

TestGrid
TestGrid::uniform(double step, std::uint64_t base_seed)
{
  if (!(step > 0.0) || step > 1.0)
  {
    throw Error(ErrorCode::invalid_config, "grid step must lie in (0, 1]");
  }
  const auto steps = static_cast<std::size_t>(std::llround(1.0 / step));
  if (std::abs(static_cast<double>(steps) * step - 1.0) > 1e-9)
  {
    throw Error(ErrorCode::invalid_config, "grid step must divide 1");
  }
  TestGrid grid;
  grid.base_seed = base_seed;
  for (std::size_t i = 0; i <= steps; ++i)
  {
    for (std::size_t j = 0; j <= steps; ++j)
    {
      grid.cells.push_back({static_cast<double>(i) / static_cast<double>(steps),
                            static_cast<double>(j) / static_cast<double>(steps)});
    }
  }
  return grid;
}

void
validate(const TestGrid& grid)
{
  std::set<std::pair<double, double>> seen;
  for (const auto& cell : grid.cells)
  {
    validate(cell);
    if (!seen.emplace(cell.p_n, cell.p_l).second)
    {
      throw Error(ErrorCode::invalid_config, "duplicate grid cell");
    }
  }
  if (grid.masks_per_cell < 1)
  {
    throw Error(ErrorCode::invalid_config, "masks_per_cell must be >= 1");
  }
  if (grid.masks_per_cell > (1u << 20) || grid.cells.size() > (1u << 24))
  {
    throw Error(ErrorCode::invalid_config, "grid too large for seed derivation");
  }
}

std::uint64_t
cell_seed(std::uint64_t base_seed, std::size_t cell_index)
{
  return base_seed ^ (static_cast<std::uint64_t>(cell_index) << 40);
}

std::uint64_t
track_seed(std::uint64_t base_seed, std::size_t cell_index, std::size_t draw, std::size_t track_index)
{
  const std::uint64_t key = (static_cast<std::uint64_t>(cell_index) << 40)
                            + (static_cast<std::uint64_t>(draw) << 20)
                            + static_cast<std::uint64_t>(track_index);
  return derive_seed(base_seed ^ key);
}

EmotionSeries
IdentityPredictor::predict(const PredictRequest& request)
{
  return request.corrupted.labels;
}

EmotionSeries
CsvDirPredictor::predict(const PredictRequest& request)
{
  const auto& track = request.corrupted;
  std::filesystem::path file = dir_ / request.model_id / (track.id + ".csv");
  if (!std::filesystem::exists(file))
  {
    file = dir_ / (track.id + ".csv");
  }
  if (!std::filesystem::exists(file))
  {
    throw Error(ErrorCode::predictor_failure, "no prediction file for track '" + track.id + "'");
  }
  auto series = read_series_csv(file, track.labels.rate);
  if (series.size() == track.labels.size())
  {
    return series;
  }
  if (static_cast<std::size_t>(series.size()) == request.mask.size())
  {
    EmotionSeries kept;
    kept.rate = series.rate;
    kept.values = apply_rows(request.mask, series.values);
    kept.times = apply_rows(request.mask, series.times);
    return kept;
  }
  throw Error(ErrorCode::predictor_failure,
              file.string() + " has " + std::to_string(series.size()) + " rows; expected "
                + std::to_string(track.labels.size()) + " or " + std::to_string(request.mask.size()));
}

namespace {

std::string
shell_quote(const std::string& text)
{
  std::string quoted = "'";
  for (char c : text)
  {
    if (c == '\'')
    {
      quoted += "'\\''";
    }
    else
    {
      quoted += c;
    }
  }
  return quoted + "'";
}

} // namespace

EmotionSeries
ExecPredictor::predict(const PredictRequest& request)
{
  const auto& track = request.corrupted;
  const auto track_dir = work_dir_
                         / ("cell" + std::to_string(request.cell_index) + "_d" + std::to_string(request.draw))
                         / track.id;
  std::filesystem::create_directories(track_dir);
  write_wav(track_dir / "audio.wav", PcmAudio{track.audio, track.audio_rate});
  {
    nlohmann::ordered_json info;
    info["id"] = track.id;
    info["audio_rate"] = track.audio_rate;
    info["label_rate"] = track.label_rate();
    info["n_frames"] = track.label_count();
    std::ofstream(track_dir / "track.json") << info.dump(2) << '\n';
  }
  const auto out_csv = track_dir / "pred.csv";
  const std::string command = command_ + " predict " + shell_quote(request.checkpoint) + " "
                              + shell_quote(track_dir.string()) + " " + shell_quote(out_csv.string());
  const int status = std::system(command.c_str());
  if (status != 0 || !std::filesystem::exists(out_csv))
  {
    throw Error(ErrorCode::predictor_failure,
                "predictor command failed for track '" + track.id + "' (status " + std::to_string(status) + ")");
  }
  auto series = read_prediction_csv(out_csv, track.labels.rate);
  std::filesystem::remove_all(track_dir.parent_path());
  return series;
}

namespace {

struct CellOutcome
{
  ResultRecord record;
  std::vector<std::string> warnings;
};

CellOutcome
run_cell(const TestGrid& grid,
         std::size_t cell_index,
         const std::vector<Track>& tracks,
         const RegimeConfig& setting,
         Predictor& predictor,
         const ModelRegistry& registry,
         std::mutex& predictor_lock)
{
  const LossParams cell = grid.cells[cell_index];
  CellOutcome outcome;
  auto& record = outcome.record;
  record.setting = to_string(setting.kind);
  record.p_n = cell.p_n;
  record.p_l = cell.p_l;
  record.seed = cell_seed(grid.base_seed, cell_index);

  LossParams effective = cell;
  if (grid.clamp_pn)
  {
    effective.p_n = std::max(effective.p_n, pn_floor);
  }

  try
  {
    record.model_id = select_model(setting.kind, cell, registry);
  }
  catch (const Error& e)
  {
    record.degenerate = true;
    record.error = e.what();
    return outcome;
  }
  const std::string& checkpoint = registry.checkpoints.at(record.model_id);

  std::size_t total = 0;
  std::size_t dropped = 0;
  std::vector<SeriesPair> pairs;
  for (std::size_t draw = 0; draw < grid.masks_per_cell; ++draw)
  {
    for (std::size_t k = 0; k < tracks.size(); ++k)
    {
      const Track& track = tracks[k];
      SplitMix64 rng{track_seed(grid.base_seed, cell_index, draw, k)};
      const BinaryMask mask = sample_mask(effective, track.label_count(), rng);
      Track corrupted = corrupt_track(track, mask);
      total += mask.size();
      dropped += mask.size() - mask.popcount();
      if (corrupted.degenerate())
      {
        outcome.warnings.push_back("cell " + std::to_string(cell_index) + ": track '" + track.id
                                   + "' lost every frame; excluded");
        continue;
      }
      try
      {
        PredictRequest request{record.model_id, checkpoint, cell_index, draw, corrupted, mask};
        EmotionSeries pred;
        if (predictor.concurrent())
        {
          pred = predictor.predict(request);
        }
        else
        {
          std::lock_guard lock(predictor_lock);
          pred = predictor.predict(request);
        }
        if (pred.size() != corrupted.labels.size())
        {
          throw Error(ErrorCode::predictor_failure,
                      "track '" + track.id + "': " + std::to_string(pred.size()) + " predictions for "
                        + std::to_string(corrupted.labels.size()) + " frames");
        }
        pairs.push_back({std::move(corrupted.labels), std::move(pred)});
      }
      catch (const Error& e)
      {
        record.error = e.what();
      }
    }
  }
  record.drop_rate = total == 0 ? 0.0 : static_cast<double>(dropped) / static_cast<double>(total);
  if (!record.error.empty())
  {
    record.degenerate = true;
    return outcome;
  }

  try
  {
    const CccReport report = evaluate_concat(pairs);
    record.ccc_arousal = report.arousal;
    record.ccc_valence = report.valence;
  }
  catch (const Error& e)
  {
    if (e.code() != ErrorCode::empty_input && e.code() != ErrorCode::degenerate)
    {
      throw;
    }
    record.degenerate = true;
    outcome.warnings.push_back("cell " + std::to_string(cell_index) + ": degenerate (" + e.what() + ")");
  }
  return outcome;
}

} // namespace

GridRun
run_grid(const TestGrid& grid,
         const std::vector<Track>& tracks,
         const RegimeConfig& setting,
         Predictor& predictor,
         const ModelRegistry& registry,
         std::size_t jobs)
{
  validate(grid);
  if (tracks.empty())
  {
    throw Error(ErrorCode::empty_input, "no test tracks");
  }

  std::vector<CellOutcome> outcomes(grid.cells.size());
  std::mutex predictor_lock;
  std::atomic<std::size_t> next{0};
  std::mutex failure_lock;
  std::exception_ptr failure;
  auto worker = [&] {
    for (std::size_t c = next++; c < grid.cells.size(); c = next++)
    {
      try
      {
        outcomes[c] = run_cell(grid, c, tracks, setting, predictor, registry, predictor_lock);
      }
      catch (...)
      {
        std::lock_guard lock(failure_lock);
        if (!failure)
        {
          failure = std::current_exception();
        }
      }
    }
  };
  jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(grid.cells.size(), 1));
  if (jobs == 1)
  {
    worker();
  }
  else
  {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < jobs; ++i)
    {
      pool.emplace_back(worker);
    }
  }
  if (failure)
  {
    std::rethrow_exception(failure);
  }

  GridRun run;
  for (auto& outcome : outcomes)
  {
    run.records.push_back(std::move(outcome.record));
    for (auto& w : outcome.warnings)
    {
      run.warnings.push_back(std::move(w));
    }
  }
  return run;
}

GridRun
run_grid(const TestGrid& grid,
         const Manifest& manifest,
         const RegimeConfig& setting,
         Predictor& predictor,
         const ModelRegistry& registry,
         const GridOptions& options)
{
  std::vector<Track> tracks;
  for (const auto& entry : manifest.tracks)
  {
    if (entry.split == options.split)
    {
      tracks.push_back(load_track(manifest, entry));
    }
  }
  return run_grid(grid, tracks, setting, predictor, registry, options.jobs);
}

} // namespace frameloss
