#pragma once

#include <cstdint>

namespace frameloss {

/// SplitMix64 generator. The whole state is one 64-bit word, so a seed fully
/// determines the emitted stream on every platform.
class SplitMix64
{
public:

  using result_type = std::uint64_t;

  explicit constexpr SplitMix64(std::uint64_t state = 0) noexcept
    : state_{state}
  {}

  constexpr std::uint64_t
  next_u64()
  noexcept
  {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform on [0, 1) with 53 bits of resolution.
  constexpr double
  next_double()
  noexcept
  {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  constexpr std::uint64_t state() const noexcept { return state_; }

  // UniformRandomBitGenerator
  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }
  constexpr result_type operator()() noexcept { return next_u64(); }

private:

  std::uint64_t state_;
};

/// First output of a generator seeded with `key`. Used to turn structured keys
/// (base seed, cell index, track index) into well-mixed independent states.
constexpr std::uint64_t
derive_seed(std::uint64_t key)
noexcept
{
  return SplitMix64{key}.next_u64();
}

} // namespace frameloss
