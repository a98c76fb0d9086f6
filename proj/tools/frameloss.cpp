// frameloss: frame-loss simulation, corrupted dataset preparation and CCC
// evaluation from the command line.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "frameloss/datasets.hpp"
#include "frameloss/experiments.hpp"
#include "frameloss/io.hpp"
#include "frameloss/loss_model.hpp"
#include "frameloss/mask.hpp"
#include "frameloss/metrics.hpp"
#include "frameloss/report.hpp"

namespace fs = std::filesystem;
using namespace frameloss;

namespace {

constexpr const char* tool_version = "0.1.0";
constexpr int masks_format_version = 1;
constexpr int results_format_version = 1;
constexpr int manifest_format_version = 1;

struct Globals
{
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  bool quiet = false;
};

void
note(const Globals& g, const std::string& text)
{
  if (!g.quiet)
  {
    std::cerr << text << '\n';
  }
}

// mask sample --------------------------------------------------------------

struct MaskSampleOptions
{
  double p_n = 1.0;
  double p_l = 0.0;
  std::size_t length = 0;
  std::size_t count = 1;
  std::string track_id = "mask";
  fs::path manifest;
  fs::path out;
};

int
run_mask_sample(const Globals& g, const MaskSampleOptions& o)
{
  validate(LossParams{o.p_n, o.p_l});
  std::vector<std::pair<std::string, std::size_t>> targets;
  if (!o.manifest.empty())
  {
    const Manifest manifest = load_manifest(o.manifest);
    for (const auto& entry : manifest.tracks)
    {
      targets.emplace_back(entry.id, load_track(manifest, entry).label_count());
    }
  }
  else
  {
    if (o.length < 1)
    {
      throw Error(ErrorCode::invalid_config, "--len must be >= 1 (or give --manifest)");
    }
    for (std::size_t i = 0; i < o.count; ++i)
    {
      char suffix[32];
      std::snprintf(suffix, sizeof suffix, "_%04zu", i);
      targets.emplace_back(o.count == 1 ? o.track_id : o.track_id + suffix, o.length);
    }
  }

  std::vector<MaskRecord> records;
  records.reserve(targets.size());
  double drop_sum = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i)
  {
    MaskRecord record;
    record.track_id = targets[i].first;
    record.p_n = o.p_n;
    record.p_l = o.p_l;
    record.seed = derive_seed(g.seed + i);
    SplitMix64 rng{record.seed};
    record.bits = sample_mask({o.p_n, o.p_l}, targets[i].second, rng);
    if (!record.bits.empty())
    {
      drop_sum += drop_rate(record.bits);
    }
    records.push_back(std::move(record));
  }
  if (o.out.empty())
  {
    for (const auto& r : records)
    {
      std::cout << serialize(r) << '\n';
    }
  }
  else
  {
    if (o.out.has_parent_path())
    {
      fs::create_directories(o.out.parent_path());
    }
    write_mask_file(o.out, records);
  }
  if (!records.empty())
  {
    note(g, "masks: " + std::to_string(records.size()) + ", mean drop rate "
              + format_double(drop_sum / static_cast<double>(records.size())));
  }
  return 0;
}

// loss apply ---------------------------------------------------------------

struct LossApplyOptions
{
  fs::path manifest;
  fs::path masks;
  fs::path out_dir;
};

int
run_loss_apply(const Globals& g, const LossApplyOptions& o)
{
  const Manifest manifest = load_manifest(o.manifest);
  const auto records = read_mask_file(o.masks);
  std::map<std::string, const MaskRecord*> by_id;
  for (const auto& r : records)
  {
    if (!by_id.emplace(r.track_id, &r).second)
    {
      throw Error(ErrorCode::invalid_config, "duplicate mask for track '" + r.track_id + "'");
    }
  }
  if (manifest.tracks.empty())
  {
    note(g, "manifest has no tracks; nothing to do");
    return 0;
  }

  fs::create_directories(o.out_dir);
  Manifest out;
  out.audio_rate = manifest.audio_rate;
  out.label_rate = manifest.label_rate;
  out.base_dir = o.out_dir;
  std::size_t total = 0;
  std::size_t kept = 0;
  for (const auto& entry : manifest.tracks)
  {
    auto it = by_id.find(entry.id);
    if (it == by_id.end())
    {
      throw Error(ErrorCode::invalid_config, "no mask for track '" + entry.id + "'");
    }
    const Track track = load_track(manifest, entry);
    const Track corrupted = corrupt_track(track, it->second->bits);
    if (corrupted.degenerate())
    {
      note(g, "warning: track '" + entry.id + "' lost every frame");
    }
    total += track.label_count();
    kept += corrupted.label_count();
    out.tracks.push_back(save_track(o.out_dir, corrupted, entry.split));
  }
  save_manifest(o.out_dir / "manifest.json", out);
  note(g, "tracks: " + std::to_string(out.tracks.size()) + ", realized drop rate "
            + format_double(total == 0 ? 0.0 : 1.0 - static_cast<double>(kept) / static_cast<double>(total)));
  return 0;
}

// eval ccc -----------------------------------------------------------------

struct EvalOptions
{
  fs::path ref_dir;
  fs::path pred_dir;
  bool concat = false;
  double rate = 5.0;
  fs::path out;
};

int
run_eval_ccc(const Globals&, const EvalOptions& o)
{
  std::vector<fs::path> refs;
  for (const auto& e : fs::directory_iterator(o.ref_dir))
  {
    if (e.is_regular_file() && e.path().extension() == ".csv")
    {
      refs.push_back(e.path());
    }
  }
  std::sort(refs.begin(), refs.end());
  if (refs.empty())
  {
    throw Error(ErrorCode::empty_input, "no .csv files in " + o.ref_dir.string());
  }

  std::vector<std::string> ids;
  std::vector<SeriesPair> pairs;
  for (const auto& ref : refs)
  {
    const fs::path pred = o.pred_dir / ref.filename();
    if (!fs::exists(pred))
    {
      throw Error(ErrorCode::io, "missing prediction " + pred.string());
    }
    ids.push_back(ref.stem().string());
    pairs.push_back({read_series_csv(ref, o.rate), read_series_csv(pred, o.rate)});
  }

  std::string text = "track,ccc_arousal,ccc_valence,n_frames\n";
  if (o.concat)
  {
    const CccReport report = evaluate_concat(pairs);
    text += "concat," + format_double(report.arousal) + ',' + format_double(report.valence) + ','
            + std::to_string(report.n_frames) + '\n';
  }
  else
  {
    for (std::size_t i = 0; i < pairs.size(); ++i)
    {
      const CccReport report = evaluate_concat(std::span<const SeriesPair>(&pairs[i], 1));
      text += ids[i] + ',' + format_double(report.arousal) + ',' + format_double(report.valence) + ','
              + std::to_string(report.n_frames) + '\n';
    }
  }
  if (o.out.empty())
  {
    std::cout << text;
  }
  else
  {
    if (o.out.has_parent_path())
    {
      fs::create_directories(o.out.parent_path());
    }
    std::ofstream file(o.out, std::ios::binary);
    if (!(file << text))
    {
      throw Error(ErrorCode::io, "cannot write " + o.out.string());
    }
  }
  return 0;
}

// grid run -----------------------------------------------------------------

struct GridOptionsCli
{
  fs::path manifest;
  std::string setting = "mismatched";
  std::string predictor = "identity";
  fs::path pred_dir;
  fs::path registry;
  double step = 0.1;
  std::size_t masks_per_cell = 1;
  std::string split = "test";
  bool clamp_pn = false;
  bool report = false;
  fs::path out_dir;
};

int
run_grid_cli(const Globals& g, const GridOptionsCli& o)
{
  const Manifest manifest = load_manifest(o.manifest);
  const RegimeConfig setting{regime_from_string(o.setting)};
  TestGrid grid = TestGrid::uniform(o.step, g.seed);
  grid.masks_per_cell = o.masks_per_cell;
  grid.clamp_pn = o.clamp_pn;
  const ModelRegistry registry = o.registry.empty() ? ModelRegistry::placeholder() : load_registry(o.registry);

  fs::create_directories(o.out_dir);
  std::unique_ptr<Predictor> predictor;
  if (o.predictor == "identity")
  {
    predictor = std::make_unique<IdentityPredictor>();
  }
  else if (o.predictor == "csv-dir")
  {
    if (o.pred_dir.empty())
    {
      throw Error(ErrorCode::invalid_config, "--predictor csv-dir needs --pred-dir");
    }
    predictor = std::make_unique<CsvDirPredictor>(o.pred_dir);
  }
  else if (o.predictor.rfind("exec:", 0) == 0)
  {
    predictor = std::make_unique<ExecPredictor>(o.predictor.substr(5), o.out_dir / "work");
  }
  else
  {
    throw Error(ErrorCode::invalid_config, "unknown predictor '" + o.predictor + "'");
  }

  GridOptions options;
  options.split = split_from_string(o.split);
  options.jobs = g.jobs;
  const GridRun run = run_grid(grid, manifest, setting, *predictor, registry, options);
  fs::remove_all(o.out_dir / "work");

  if (o.report)
  {
    emit_reports(run.records, o.out_dir);
  }
  else
  {
    write_results_csv(o.out_dir / "results.csv", run.records);
  }

  std::size_t degenerate = 0;
  std::size_t errors = 0;
  for (const auto& r : run.records)
  {
    degenerate += r.degenerate ? 1 : 0;
    if (!r.error.empty())
    {
      ++errors;
      std::cerr << "error: cell (" << format_double(r.p_n) << ", " << format_double(r.p_l) << "): " << r.error << '\n';
    }
  }
  for (const auto& w : run.warnings)
  {
    note(g, "warning: " + w);
  }

  nlohmann::ordered_json summary;
  summary["tool"] = "frameloss";
  summary["version"] = tool_version;
  summary["results_format"] = results_format_version;
  summary["config"] = {
    {"manifest", o.manifest.generic_string()},
    {"setting", o.setting},
    {"predictor", o.predictor},
    {"pred_dir", o.pred_dir.generic_string()},
    {"registry", o.registry.generic_string()},
    {"step", o.step},
    {"masks_per_cell", o.masks_per_cell},
    {"split", o.split},
    {"clamp_pn", o.clamp_pn},
    {"seed", g.seed},
  };
  summary["cells"] = run.records.size();
  summary["degenerate"] = degenerate;
  summary["errors"] = errors;
  summary["warnings"] = run.warnings;
  std::ofstream(o.out_dir / "run.json", std::ios::binary) << summary.dump(2) << '\n';

  note(g, "cells: " + std::to_string(run.records.size()) + ", degenerate " + std::to_string(degenerate));
  return errors == 0 ? 0 : 1;
}

// report emit --------------------------------------------------------------

int
run_report_emit(const Globals& g, const fs::path& results, const fs::path& out_dir)
{
  const auto records = read_results_csv(results);
  const auto files = emit_reports(records, out_dir);
  note(g, "wrote " + std::to_string(files.size()) + " files to " + out_dir.string());
  return 0;
}

// dataset ------------------------------------------------------------------

int
run_dataset_synth(const Globals& g, const SynthConfig& config, const fs::path& out_dir)
{
  const Manifest manifest = synth_corpus(config, g.seed, out_dir);
  note(g, "synthesized " + std::to_string(manifest.tracks.size()) + " tracks in " + out_dir.string());
  return 0;
}

struct PrepareOptions
{
  fs::path manifest;
  fs::path out_dir;
  std::size_t pool_factor = 5;
  double segment_seconds = 0.0;
  bool truncate = false;
};

int
run_dataset_prepare(const Globals& g, const PrepareOptions& o)
{
  const Manifest in = load_manifest(o.manifest);
  if (o.pool_factor < 1 || in.label_rate % o.pool_factor != 0)
  {
    throw Error(ErrorCode::invalid_ratio, "label rate " + std::to_string(in.label_rate)
                                            + " is not divisible by pool factor " + std::to_string(o.pool_factor));
  }
  Manifest out;
  out.audio_rate = in.audio_rate;
  out.label_rate = in.label_rate / static_cast<std::uint32_t>(o.pool_factor);
  rate_ratio(out.audio_rate, out.label_rate);
  out.base_dir = o.out_dir;
  fs::create_directories(o.out_dir);

  for (const auto& entry : in.tracks)
  {
    Track track = load_track(in, entry);
    track.labels = median_pool(track.labels, o.pool_factor, o.truncate);
    // Pooling may have dropped a tail window; keep audio aligned.
    const std::size_t r = rate_ratio(track.audio_rate, track.label_rate());
    track.audio.resize(std::min(track.audio.size(), r * track.label_count()));
    validate(track);

    if (o.segment_seconds > 0.0)
    {
      for (const auto& piece : segment(track, o.segment_seconds))
      {
        out.tracks.push_back(save_track(o.out_dir, piece, entry.split));
      }
    }
    else
    {
      out.tracks.push_back(save_track(o.out_dir, track, entry.split));
    }
  }
  save_manifest(o.out_dir / "manifest.json", out);
  note(g, "prepared " + std::to_string(out.tracks.size()) + " tracks at " + std::to_string(out.label_rate) + " Hz");
  return 0;
}

// stats --------------------------------------------------------------------

int
run_expected_loss(const Globals&, double p_n, double p_l, bool from_n)
{
  const LossParams params{p_n, p_l};
  std::cout << format_double(from_n ? expected_loss_fraction_from_n(params) : expected_loss_fraction(params)) << '\n';
  return 0;
}

} // namespace

int
main(int argc, char** argv)
{
  CLI::App app{"Frame-loss simulation and emotion-prediction robustness toolkit", "frameloss"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version",
                       std::string("frameloss ") + tool_version + " (masks format "
                         + std::to_string(masks_format_version) + ", results format "
                         + std::to_string(results_format_version) + ", manifest format "
                         + std::to_string(manifest_format_version) + ")");

  Globals globals;
  app.add_option("--seed", globals.seed, "Base seed for every random draw")->capture_default_str();
  app.add_option("--jobs", globals.jobs, "Worker threads for per-cell work")->check(CLI::PositiveNumber);
  app.add_flag("--quiet,-q", globals.quiet, "Suppress progress notes on stderr");

  std::function<int()> action;

  // mask
  auto* mask = app.add_subcommand("mask", "Binary loss masks")->require_subcommand(1);
  MaskSampleOptions mask_opts;
  auto* sample = mask->add_subcommand("sample", "Sample masks from the two-state chain into .masks.jsonl");
  sample->add_option("--p-n", mask_opts.p_n, "Stay probability of the no-loss state")->required()->check(CLI::Range(0.0, 1.0));
  sample->add_option("--p-l", mask_opts.p_l, "Stay probability of the loss state")->required()->check(CLI::Range(0.0, 1.0));
  auto* len_opt = sample->add_option("--len", mask_opts.length, "Mask length in label frames");
  auto* manifest_opt = sample->add_option("--manifest", mask_opts.manifest, "One mask per manifest track, sized to it");
  len_opt->excludes(manifest_opt);
  sample->add_option("--count", mask_opts.count, "Number of masks")->check(CLI::PositiveNumber);
  sample->add_option("--track-id", mask_opts.track_id, "Track id (prefix when --count > 1)");
  sample->add_option("--out", mask_opts.out, "Output file; stdout when omitted");
  sample->callback([&] { action = [&] { return run_mask_sample(globals, mask_opts); }; });

  // loss
  auto* loss = app.add_subcommand("loss", "Apply masks to tracks")->require_subcommand(1);
  LossApplyOptions apply_opts;
  auto* apply_cmd = loss->add_subcommand("apply", "Write corrupted WAV and label CSV per manifest track");
  apply_cmd->add_option("--manifest", apply_opts.manifest)->required()->check(CLI::ExistingFile);
  apply_cmd->add_option("--masks", apply_opts.masks)->required()->check(CLI::ExistingFile);
  apply_cmd->add_option("--out-dir", apply_opts.out_dir)->required();
  apply_cmd->callback([&] { action = [&] { return run_loss_apply(globals, apply_opts); }; });

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluation")->require_subcommand(1);
  EvalOptions eval_opts;
  auto* ccc_cmd = eval->add_subcommand("ccc", "CCC between reference and prediction CSV directories");
  ccc_cmd->add_option("--ref-dir", eval_opts.ref_dir)->required()->check(CLI::ExistingDirectory);
  ccc_cmd->add_option("--pred-dir", eval_opts.pred_dir)->required()->check(CLI::ExistingDirectory);
  ccc_cmd->add_flag("--concat", eval_opts.concat, "Score the concatenation of all tracks");
  ccc_cmd->add_option("--rate", eval_opts.rate, "Label rate in Hz")->capture_default_str();
  ccc_cmd->add_option("--out", eval_opts.out, "Write the table here instead of stdout");
  ccc_cmd->callback([&] { action = [&] { return run_eval_ccc(globals, eval_opts); }; });

  // grid
  auto* grid = app.add_subcommand("grid", "Test grids")->require_subcommand(1);
  GridOptionsCli grid_opts;
  auto* run_cmd = grid->add_subcommand("run", "Evaluate a setting over the (p_N, p_L) grid");
  run_cmd->add_option("--manifest", grid_opts.manifest)->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--setting", grid_opts.setting)
    ->check(CLI::IsMember({"mismatched", "multi", "matched", "augmentation"}))
    ->capture_default_str();
  run_cmd->add_option("--predictor", grid_opts.predictor, "identity | csv-dir | exec:<command>")->capture_default_str();
  run_cmd->add_option("--pred-dir", grid_opts.pred_dir, "Prediction directory for csv-dir");
  run_cmd->add_option("--registry", grid_opts.registry, "Model registry JSON")->check(CLI::ExistingFile);
  run_cmd->add_option("--step", grid_opts.step, "Grid step over [0, 1]")->capture_default_str();
  run_cmd->add_option("--masks-per-cell", grid_opts.masks_per_cell)->check(CLI::PositiveNumber)->capture_default_str();
  run_cmd->add_option("--split", grid_opts.split)
    ->check(CLI::IsMember({"train", "validation", "test"}))
    ->capture_default_str();
  run_cmd->add_flag("--clamp-pn", grid_opts.clamp_pn, "Raise test p_N to 0.05 before sampling masks");
  run_cmd->add_flag("--report", grid_opts.report, "Also write curve and heatmap reports");
  run_cmd->add_option("--out-dir", grid_opts.out_dir)->required();
  run_cmd->callback([&] { action = [&] { return run_grid_cli(globals, grid_opts); }; });

  // report
  auto* report = app.add_subcommand("report", "Reports")->require_subcommand(1);
  fs::path results_path;
  fs::path report_dir;
  auto* emit_cmd = report->add_subcommand("emit", "Curves and heatmaps from a results CSV");
  emit_cmd->add_option("--results", results_path)->required()->check(CLI::ExistingFile);
  emit_cmd->add_option("--out-dir", report_dir)->required();
  emit_cmd->callback([&] { action = [&] { return run_report_emit(globals, results_path, report_dir); }; });

  // dataset
  auto* dataset = app.add_subcommand("dataset", "Datasets")->require_subcommand(1);
  SynthConfig synth_config;
  fs::path synth_dir;
  auto* synth_cmd = dataset->add_subcommand("synth", "Generate a synthetic labelled corpus");
  synth_cmd->add_option("--n-tracks", synth_config.n_tracks)->capture_default_str();
  synth_cmd->add_option("--seconds", synth_config.seconds)->capture_default_str();
  synth_cmd->add_option("--audio-rate", synth_config.audio_rate)->capture_default_str();
  synth_cmd->add_option("--label-rate", synth_config.label_rate)->capture_default_str();
  synth_cmd->add_option("--out-dir", synth_dir)->required();
  synth_cmd->callback([&] { action = [&] { return run_dataset_synth(globals, synth_config, synth_dir); }; });

  PrepareOptions prepare_opts;
  auto* prepare_cmd = dataset->add_subcommand("prepare", "Median-pool labels and optionally segment tracks");
  prepare_cmd->add_option("--manifest", prepare_opts.manifest)->required()->check(CLI::ExistingFile);
  prepare_cmd->add_option("--out-dir", prepare_opts.out_dir)->required();
  prepare_cmd->add_option("--pool-factor", prepare_opts.pool_factor)->capture_default_str();
  prepare_cmd->add_option("--segment-seconds", prepare_opts.segment_seconds, "0 keeps whole tracks");
  prepare_cmd->add_flag("--truncate", prepare_opts.truncate, "Drop a trailing partial pooling window");
  prepare_cmd->callback([&] { action = [&] { return run_dataset_prepare(globals, prepare_opts); }; });

  // stats
  auto* stats = app.add_subcommand("stats", "Analytic statistics")->require_subcommand(1);
  double stat_pn = 0.0;
  double stat_pl = 0.0;
  bool from_n = false;
  auto* expected_cmd = stats->add_subcommand("expected-loss", "Stationary fraction of dropped frames");
  expected_cmd->add_option("--p-n", stat_pn)->required()->check(CLI::Range(0.0, 1.0));
  expected_cmd->add_option("--p-l", stat_pl)->required()->check(CLI::Range(0.0, 1.0));
  expected_cmd->add_flag("--from-n", from_n, "Report 0 for p_N = 1 instead of failing");
  expected_cmd->callback([&] { action = [&] { return run_expected_loss(globals, stat_pn, stat_pl, from_n); }; });

  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::ParseError& e)
  {
    return app.exit(e);
  }

  try
  {
    return action ? action() : 0;
  }
  catch (const Error& e)
  {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
    return 2;
  }
  catch (const std::exception& e)
  {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
