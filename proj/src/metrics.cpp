#include "frameloss/metrics.hpp"

namespace frameloss {

EmotionSeries
EmotionSeries::uniform(LabelMatrix values, double rate)
{
  EmotionSeries series;
  series.times = Eigen::VectorXd::LinSpaced(values.rows(), 0.0, static_cast<double>(values.rows() - 1)) / rate;
  series.values = std::move(values);
  series.rate = rate;
  return series;
}

double
ccc_loss(std::span<const EmotionSeries> refs, std::span<const EmotionSeries> preds, double epsilon)
{
  if (refs.size() != preds.size())
  {
    throw Error(ErrorCode::length_mismatch,
                "batch sizes differ: " + std::to_string(refs.size()) + " vs "
                  + std::to_string(preds.size()));
  }
  if (refs.empty())
  {
    throw Error(ErrorCode::empty_input, "empty batch");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < refs.size(); ++i)
  {
    if (refs[i].values.rows() != preds[i].values.rows())
    {
      throw Error(ErrorCode::length_mismatch, "example " + std::to_string(i) + " differs in length");
    }
    for (Eigen::Index d : {arousal, valence})
    {
      total += ccc_stabilized(refs[i].values.col(d), preds[i].values.col(d), epsilon);
    }
  }
  return 1.0 - total / static_cast<double>(2 * refs.size());
}

CccReport
evaluate_concat(std::span<const SeriesPair> pairs)
{
  Eigen::Index total = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i)
  {
    if (pairs[i].ref.size() != pairs[i].pred.size())
    {
      throw Error(ErrorCode::length_mismatch,
                  "pair " + std::to_string(i) + ": reference has " + std::to_string(pairs[i].ref.size())
                    + " frames, prediction has " + std::to_string(pairs[i].pred.size()));
    }
    total += pairs[i].ref.size();
  }
  if (total < 2)
  {
    throw Error(ErrorCode::empty_input, "need at least two frames across all tracks");
  }

  LabelMatrix refs(total, 2);
  LabelMatrix preds(total, 2);
  Eigen::Index offset = 0;
  for (const auto& pair : pairs)
  {
    const auto n = pair.ref.size();
    refs.middleRows(offset, n) = pair.ref.values;
    preds.middleRows(offset, n) = pair.pred.values;
    offset += n;
  }

  CccReport report;
  report.arousal = ccc(refs.col(arousal), preds.col(arousal));
  report.valence = ccc(refs.col(valence), preds.col(valence));
  report.n_frames = static_cast<std::size_t>(total);
  return report;
}

double
overlap_rate(std::size_t kernel, std::size_t pool)
{
  if (kernel < 1 || pool < 1)
  {
    throw Error(ErrorCode::invalid_config, "kernel and pool sizes must be >= 1");
  }
  return static_cast<double>(kernel - 1) / static_cast<double>(kernel + pool - 1);
}

} // namespace frameloss
