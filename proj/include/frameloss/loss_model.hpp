#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

#include "frameloss/mask.hpp"
#include "frameloss/rng.hpp"

namespace frameloss {

/// Stay probabilities of the two-state (no-loss N / loss L) chain.
struct LossParams
{
  double p_n = 1.0;
  double p_l = 0.0;

  friend bool operator==(const LossParams&, const LossParams&) = default;
};

/// Throws invalid_range unless both probabilities lie in [0, 1].
void validate(const LossParams& params);

enum class ParamKind { pn, pl };

enum class Category { low, mid, high };

const char* to_string(Category category) noexcept;
Category category_from_string(std::string_view text);

/// Closed-open interval [lo, hi); lo == hi denotes the single point lo.
struct Interval
{
  double lo = 0.0;
  double hi = 1.0;

  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Floor applied to p_N whenever it is drawn or classified as `low`.
inline constexpr double pn_floor = 0.05;

/// Parameter range owned by a category. For p_N the low range starts at 0.05.
Interval category_range(Category category, ParamKind kind) noexcept;

struct Classification
{
  Category category;
  bool clamped = false; ///< p_N was raised to the 0.05 floor first.
};

/// Boundaries belong to the upper range: 1/3 is mid, 2/3 is high.
Classification classify(double value, ParamKind kind);

/// Samples `length` frames, starting in N. The first bit is always 1.
BinaryMask sample_mask(const LossParams& params, std::size_t length, SplitMix64& rng);

/// Stationary fraction of dropped frames, (1 - p_N) / (2 - p_L - p_N).
/// Throws degenerate_parameters when p_N = p_L = 1.
double expected_loss_fraction(const LossParams& params);

/// Same as expected_loss_fraction but returns 0 for p_N = 1, where a chain
/// started in N never leaves it.
double expected_loss_fraction_from_n(const LossParams& params);

/// Draws p_N then p_L, each lo + u * (hi - lo).
LossParams sample_params(const Interval& pn_range, const Interval& pl_range, SplitMix64& rng);

/// True when `record.bits` is exactly what its parameters and seed generate.
bool matches_chain(const MaskRecord& record);

} // namespace frameloss
