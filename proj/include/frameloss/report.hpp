#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "frameloss/experiments.hpp"

namespace frameloss {

/// `setting,model_id,p_n,p_l,seed,drop_rate,ccc_arousal,ccc_valence,degenerate`.
/// Degenerate rows leave both CCC fields empty.
void write_results_csv(const std::filesystem::path& path, std::span<const ResultRecord> records);
std::vector<ResultRecord> read_results_csv(const std::filesystem::path& path);

/// Writes results.csv plus, per setting and dimension, CCC-vs-drop-rate curve
/// data and a heatmap over the (p_N, p_L) grid, each as CSV and SVG. Returns
/// the files written, in order.
std::vector<std::filesystem::path> emit_reports(std::span<const ResultRecord> records,
                                                const std::filesystem::path& out_dir);

} // namespace frameloss
