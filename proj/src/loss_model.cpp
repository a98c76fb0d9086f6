#include "frameloss/loss_model.hpp"

#include <cmath>
#include <string>

namespace frameloss {

namespace {

constexpr double one_third = 1.0 / 3.0;
constexpr double two_thirds = 2.0 / 3.0;
constexpr double singular_tolerance = 1e-12;

bool
is_probability(double v)
noexcept
{
  return v >= 0.0 && v <= 1.0;
}

} // namespace

void
validate(const LossParams& params)
{
  if (!is_probability(params.p_n) || !is_probability(params.p_l))
  {
    throw Error(ErrorCode::invalid_range,
                "loss parameters must lie in [0, 1], got p_n=" + std::to_string(params.p_n)
                  + " p_l=" + std::to_string(params.p_l));
  }
}

const char*
to_string(Category category)
noexcept
{
  switch (category)
  {
    case Category::low: return "low";
    case Category::mid: return "mid";
    case Category::high: return "high";
  }
  return "?";
}

Category
category_from_string(std::string_view text)
{
  if (text == "low") return Category::low;
  if (text == "mid") return Category::mid;
  if (text == "high") return Category::high;
  throw Error(ErrorCode::invalid_config, "unknown category '" + std::string(text) + "'");
}

Interval
category_range(Category category, ParamKind kind)
noexcept
{
  switch (category)
  {
    case Category::low: return {kind == ParamKind::pn ? pn_floor : 0.0, one_third};
    case Category::mid: return {one_third, two_thirds};
    case Category::high: return {two_thirds, 1.0};
  }
  return {0.0, 1.0};
}

Classification
classify(double value, ParamKind kind)
{
  if (!is_probability(value))
  {
    throw Error(ErrorCode::invalid_range, "cannot classify " + std::to_string(value));
  }
  Classification result{Category::low, false};
  if (kind == ParamKind::pn && value < pn_floor)
  {
    value = pn_floor;
    result.clamped = true;
  }
  if (value >= two_thirds)
  {
    result.category = Category::high;
  }
  else if (value >= one_third)
  {
    result.category = Category::mid;
  }
  return result;
}

BinaryMask
sample_mask(const LossParams& params, std::size_t length, SplitMix64& rng)
{
  validate(params);
  BinaryMask mask;
  mask.reserve(length);
  bool in_n = true;
  for (std::size_t i = 0; i < length; ++i)
  {
    mask.push_back(in_n);
    if (i + 1 < length)
    {
      const double u = rng.next_double();
      in_n = in_n ? (u < params.p_n) : !(u < params.p_l);
    }
  }
  return mask;
}

double
expected_loss_fraction(const LossParams& params)
{
  validate(params);
  const double denominator = 2.0 - params.p_l - params.p_n;
  if (denominator <= singular_tolerance)
  {
    throw Error(ErrorCode::degenerate_parameters,
                "expected loss fraction is undefined for p_n = p_l = 1");
  }
  return (1.0 - params.p_n) / denominator;
}

double
expected_loss_fraction_from_n(const LossParams& params)
{
  validate(params);
  if (params.p_n == 1.0)
  {
    return 0.0;
  }
  return expected_loss_fraction(params);
}

LossParams
sample_params(const Interval& pn_range, const Interval& pl_range, SplitMix64& rng)
{
  for (const auto& range : {pn_range, pl_range})
  {
    if (!is_probability(range.lo) || !is_probability(range.hi) || range.lo > range.hi)
    {
      throw Error(ErrorCode::invalid_range,
                  "invalid interval [" + std::to_string(range.lo) + ", " + std::to_string(range.hi)
                    + ")");
    }
  }
  LossParams params;
  params.p_n = pn_range.lo + rng.next_double() * (pn_range.hi - pn_range.lo);
  params.p_l = pl_range.lo + rng.next_double() * (pl_range.hi - pl_range.lo);
  return params;
}

bool
matches_chain(const MaskRecord& record)
{
  SplitMix64 rng{record.seed};
  return sample_mask({record.p_n, record.p_l}, record.bits.size(), rng) == record.bits;
}

} // namespace frameloss
