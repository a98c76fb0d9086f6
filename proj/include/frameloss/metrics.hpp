#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>

#include <Eigen/Core>

#include "frameloss/error.hpp"

namespace frameloss {

/// Rows are frames, columns are (arousal, valence).
template <typename Scalar>
using LabelMatrixT = Eigen::Matrix<Scalar, Eigen::Dynamic, 2>;
using LabelMatrix = LabelMatrixT<double>;

enum Dimension : Eigen::Index { arousal = 0, valence = 1 };

/// Per-frame emotion labels. `times` holds each frame's time tag in seconds,
/// so a series that lost frames still knows where the survivors came from.
struct EmotionSeries
{
  LabelMatrix values;
  Eigen::VectorXd times;
  double rate = 5.0;

  Eigen::Index size() const noexcept { return values.rows(); }

  /// Times k / rate for k = 0..n-1.
  static EmotionSeries uniform(LabelMatrix values, double rate);
};

struct CccReport
{
  double arousal = 0.0;
  double valence = 0.0;
  std::size_t n_frames = 0;
};

namespace detail {

template <typename DX, typename DY>
void
check_ccc_inputs(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y)
{
  if (x.size() != y.size())
  {
    throw Error(ErrorCode::length_mismatch,
                "ccc inputs differ in length: " + std::to_string(x.size()) + " vs "
                  + std::to_string(y.size()));
  }
  if (x.size() < 2)
  {
    throw Error(ErrorCode::empty_input, "ccc needs at least two frames");
  }
}

/// Numerator and denominator of the concordance coefficient with 1/n moments.
template <typename DX, typename DY>
std::pair<typename DX::Scalar, typename DX::Scalar>
ccc_terms(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y)
{
  using Scalar = typename DX::Scalar;
  const Scalar n = static_cast<Scalar>(x.size());
  const Scalar mean_x = x.mean();
  const Scalar mean_y = y.mean();
  const auto dx = (x.array() - mean_x).eval();
  const auto dy = (y.array() - mean_y).eval();
  const Scalar var_x = dx.square().sum() / n;
  const Scalar var_y = dy.square().sum() / n;
  const Scalar cov = (dx * dy).sum() / n;
  const Scalar shift = mean_x - mean_y;
  return {Scalar(2) * cov, var_x + var_y + shift * shift};
}

} // namespace detail

/// Concordance correlation coefficient
///   2 cov(x, y) / (var(x) + var(y) + (mean(x) - mean(y))^2)
/// with population moments. Throws `degenerate` when the denominator is below
/// 1e-12, which happens only for two equal constant sequences.
template <typename DX, typename DY>
typename DX::Scalar
ccc(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y)
{
  detail::check_ccc_inputs(x, y);
  const auto [numerator, denominator] = detail::ccc_terms(x, y);
  if (denominator < typename DX::Scalar(1e-12))
  {
    throw Error(ErrorCode::degenerate, "ccc is undefined for equal constant sequences");
  }
  return numerator / denominator;
}

/// Training variant: `epsilon` is added to the denominator instead of failing.
template <typename DX, typename DY>
typename DX::Scalar
ccc_stabilized(const Eigen::MatrixBase<DX>& x,
               const Eigen::MatrixBase<DY>& y,
               typename DX::Scalar epsilon = typename DX::Scalar(1e-8))
{
  detail::check_ccc_inputs(x, y);
  const auto [numerator, denominator] = detail::ccc_terms(x, y);
  return numerator / (denominator + epsilon);
}

/// 1 - mean CCC over every (example, dimension) cell, each CCC taken along time.
double ccc_loss(std::span<const EmotionSeries> refs,
                std::span<const EmotionSeries> preds,
                double epsilon = 1e-8);

struct SeriesPair
{
  EmotionSeries ref;
  EmotionSeries pred;
};

/// Concatenates every reference and every prediction in the given order and
/// scores each dimension once on the concatenation.
CccReport evaluate_concat(std::span<const SeriesPair> pairs);

/// (K - 1) / (K + P - 1) for kernel size K and pool size P.
double overlap_rate(std::size_t kernel, std::size_t pool);

} // namespace frameloss
