#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "frameloss/error.hpp"

namespace frameloss {

/// Keep/drop bitstring over frames. 1 keeps a frame, 0 drops it.
class BinaryMask
{
public:

  BinaryMask() = default;

  /// Throws if any element is not 0 or 1.
  explicit BinaryMask(std::vector<std::uint8_t> bits);

  /// Parses an ASCII '0'/'1' string.
  static BinaryMask from_string(std::string_view text);

  std::string to_string() const;

  std::size_t size() const noexcept { return bits_.size(); }
  bool empty() const noexcept { return bits_.empty(); }
  bool operator[](std::size_t i) const noexcept { return bits_[i] != 0; }

  std::span<const std::uint8_t> bits() const noexcept { return bits_; }

  void push_back(bool keep) { bits_.push_back(keep ? 1 : 0); }
  void reserve(std::size_t n) { bits_.reserve(n); }

  std::size_t popcount() const noexcept;

  static BinaryMask ones(std::size_t n) { return BinaryMask(std::vector<std::uint8_t>(n, 1)); }
  static BinaryMask zeros(std::size_t n) { return BinaryMask(std::vector<std::uint8_t>(n, 0)); }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

private:

  std::vector<std::uint8_t> bits_;
};

/// Repeats every bit `ratio` times in place, turning a label-rate mask into a
/// mask over a sequence sampled `ratio` times faster.
BinaryMask expand(const BinaryMask& mask, std::size_t ratio);

/// Fraction of dropped frames. Throws on an empty mask.
double drop_rate(const BinaryMask& mask);

/// Kept frames, in order.
template <typename T>
std::vector<T>
apply_mask(const BinaryMask& mask, std::span<const T> frames)
{
  if (mask.size() != frames.size())
  {
    throw Error(ErrorCode::length_mismatch,
                "mask length " + std::to_string(mask.size()) + " does not match sequence length "
                  + std::to_string(frames.size()));
  }
  std::vector<T> kept;
  kept.reserve(mask.popcount());
  for (std::size_t i = 0; i < frames.size(); ++i)
  {
    if (mask[i])
    {
      kept.push_back(frames[i]);
    }
  }
  return kept;
}

template <typename T>
std::vector<T>
apply_mask(const BinaryMask& mask, const std::vector<T>& frames)
{
  return apply_mask(mask, std::span<const T>(frames));
}

/// Kept rows of a matrix whose rows are frames.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Derived::ColsAtCompileTime>
apply_rows(const BinaryMask& mask, const Eigen::MatrixBase<Derived>& frames)
{
  if (static_cast<Eigen::Index>(mask.size()) != frames.rows())
  {
    throw Error(ErrorCode::length_mismatch,
                "mask length " + std::to_string(mask.size()) + " does not match row count "
                  + std::to_string(frames.rows()));
  }
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Derived::ColsAtCompileTime> kept(
    static_cast<Eigen::Index>(mask.popcount()), frames.cols());
  Eigen::Index out = 0;
  for (Eigen::Index i = 0; i < frames.rows(); ++i)
  {
    if (mask[static_cast<std::size_t>(i)])
    {
      kept.row(out++) = frames.row(i);
    }
  }
  return kept;
}

/// One line of a `.masks.jsonl` file.
struct MaskRecord
{
  std::string track_id;
  double p_n = 1.0;
  double p_l = 0.0;
  std::uint64_t seed = 0;
  BinaryMask bits;

  friend bool operator==(const MaskRecord&, const MaskRecord&) = default;
};

/// Canonical single-line JSON, no trailing newline.
std::string serialize(const MaskRecord& record);

/// `line_number` is only used in error messages.
MaskRecord parse_mask_record(std::string_view line, std::size_t line_number = 1);

std::vector<MaskRecord> read_mask_file(const std::filesystem::path& path);
void write_mask_file(const std::filesystem::path& path, std::span<const MaskRecord> records);

} // namespace frameloss
