#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "frameloss/datasets.hpp"
#include "frameloss/loss_model.hpp"

namespace frameloss {

enum class RegimeKind { mismatched, multi, matched, augmentation };

const char* to_string(RegimeKind kind) noexcept;
RegimeKind regime_from_string(std::string_view text);

/// Training environment. Categories are read only for `matched`; ranges only
/// for `multi`. Augmentation is pinned to (p_N high, p_L low).
struct RegimeConfig
{
  RegimeKind kind = RegimeKind::mismatched;
  Category pn_category = Category::high;
  Category pl_category = Category::low;
  Interval pn_range{pn_floor, 1.0};
  Interval pl_range{0.0, 1.0};

  static RegimeConfig mismatched() { return {}; }
  static RegimeConfig multi(Interval pn = {pn_floor, 1.0}, Interval pl = {0.0, 1.0});
  static RegimeConfig matched(Category pn, Category pl);
  static RegimeConfig augmentation();
};

/// Loss parameters for one training batch; nullopt means the batch stays clean.
/// The caller samples a single mask from them and shares it across the batch.
std::optional<LossParams> plan_batch_params(const RegimeConfig& regime, SplitMix64& rng);

/// Registry key: `mismatched`, `multi`, `augmentation` or `matched:<pN>:<pL>`.
std::string model_key(RegimeKind kind, Category pn = Category::high, Category pl = Category::low);

/// Model id to checkpoint path.
struct ModelRegistry
{
  std::map<std::string, std::string> checkpoints;

  bool contains(const std::string& id) const { return checkpoints.count(id) != 0; }

  /// Every key a grid can ask for, with empty checkpoints. Enough for
  /// predictors that ignore checkpoints.
  static ModelRegistry placeholder();
};

/// Reads `{"models": {"<key>": "<checkpoint>", ...}}`.
ModelRegistry load_registry(const std::filesystem::path& path);

/// Model that serves a test cell under the given setting. Matched settings pick
/// the model whose categories contain the cell (p_N clamped to 0.05 first).
std::string select_model(RegimeKind kind, const LossParams& cell, const ModelRegistry& registry);

struct TestGrid
{
  std::vector<LossParams> cells;
  std::size_t masks_per_cell = 1;
  std::uint64_t base_seed = 0;
  bool clamp_pn = false;  ///< raise test p_N to 0.05 before sampling masks

  /// Full cartesian grid over {0, step, ..., 1}^2, p_N major.
  static TestGrid uniform(double step = 0.1, std::uint64_t base_seed = 0);
};

void validate(const TestGrid& grid);

/// State for mask number `draw` of track `track_index` in grid cell `cell_index`.
std::uint64_t track_seed(std::uint64_t base_seed, std::size_t cell_index, std::size_t draw, std::size_t track_index);

/// Cell-level seed reported in results: base_seed ^ (cell_index << 40).
std::uint64_t cell_seed(std::uint64_t base_seed, std::size_t cell_index);

struct ResultRecord
{
  std::string setting;
  std::string model_id;
  double p_n = 0.0;
  double p_l = 0.0;
  std::uint64_t seed = 0;
  double drop_rate = 0.0;
  double ccc_arousal = 0.0;
  double ccc_valence = 0.0;
  bool degenerate = false;
  std::string error;  ///< non-empty when the predictor failed for this cell
};

struct PredictRequest
{
  const std::string& model_id;
  const std::string& checkpoint;
  std::size_t cell_index;
  std::size_t draw;
  const Track& corrupted;
  const BinaryMask& mask;
};

/// Maps a corrupted track to one (arousal, valence) row per surviving frame.
class Predictor
{
public:

  virtual ~Predictor() = default;
  virtual EmotionSeries predict(const PredictRequest& request) = 0;

  /// False when calls must not overlap.
  virtual bool concurrent() const noexcept { return true; }
};

/// Oracle that returns the surviving reference labels.
class IdentityPredictor final : public Predictor
{
public:

  EmotionSeries predict(const PredictRequest& request) override;
};

/// Precomputed predictions, looked up as `<dir>/<model_id>/<track>.csv` and then
/// `<dir>/<track>.csv`. A file may hold one row per surviving frame, or one row
/// per original frame, in which case the cell's mask selects the survivors.
class CsvDirPredictor final : public Predictor
{
public:

  explicit CsvDirPredictor(std::filesystem::path dir)
    : dir_{std::move(dir)}
  {}

  EmotionSeries predict(const PredictRequest& request) override;

private:

  std::filesystem::path dir_;
};

/// Spawns `<command> predict <checkpoint> <track_dir> <out_csv>` per track. The
/// track directory holds `audio.wav` and `track.json`.
class ExecPredictor final : public Predictor
{
public:

  ExecPredictor(std::string command, std::filesystem::path work_dir)
    : command_{std::move(command)}
    , work_dir_{std::move(work_dir)}
  {}

  EmotionSeries predict(const PredictRequest& request) override;
  bool concurrent() const noexcept override { return false; }

private:

  std::string command_;
  std::filesystem::path work_dir_;
};

struct GridOptions
{
  Split split = Split::test;
  std::size_t jobs = 1;
};

struct GridRun
{
  std::vector<ResultRecord> records;
  std::vector<std::string> warnings;
};

/// Corrupts every track of the chosen split per cell, asks the predictor for the
/// survivors and scores the concatenation. Records come back in cell order.
GridRun run_grid(const TestGrid& grid,
                 const std::vector<Track>& tracks,
                 const RegimeConfig& setting,
                 Predictor& predictor,
                 const ModelRegistry& registry,
                 std::size_t jobs = 1);

/// Loads the tracks of `options.split` from the manifest, then runs the grid.
GridRun run_grid(const TestGrid& grid,
                 const Manifest& manifest,
                 const RegimeConfig& setting,
                 Predictor& predictor,
                 const ModelRegistry& registry,
                 const GridOptions& options = {});

} // namespace frameloss
