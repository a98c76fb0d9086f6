#include "frameloss/mask.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

namespace frameloss {

BinaryMask::BinaryMask(std::vector<std::uint8_t> bits)
  : bits_{std::move(bits)}
{
  if (std::any_of(bits_.begin(), bits_.end(), [](std::uint8_t b) { return b > 1; }))
  {
    throw Error(ErrorCode::invalid_config, "mask elements must be 0 or 1");
  }
}

BinaryMask
BinaryMask::from_string(std::string_view text)
{
  std::vector<std::uint8_t> bits;
  bits.reserve(text.size());
  for (char c : text)
  {
    if (c != '0' && c != '1')
    {
      throw Error(ErrorCode::invalid_config, std::string("invalid mask character '") + c + "'");
    }
    bits.push_back(c == '1' ? 1 : 0);
  }
  return BinaryMask(std::move(bits));
}

std::string
BinaryMask::to_string()
const
{
  std::string text(bits_.size(), '0');
  for (std::size_t i = 0; i < bits_.size(); ++i)
  {
    if (bits_[i])
    {
      text[i] = '1';
    }
  }
  return text;
}

std::size_t
BinaryMask::popcount()
const noexcept
{
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

BinaryMask
expand(const BinaryMask& mask, std::size_t ratio)
{
  if (ratio < 1)
  {
    throw Error(ErrorCode::invalid_ratio, "expansion ratio must be >= 1");
  }
  std::vector<std::uint8_t> out;
  out.reserve(mask.size() * ratio);
  for (auto bit : mask.bits())
  {
    out.insert(out.end(), ratio, bit);
  }
  return BinaryMask(std::move(out));
}

double
drop_rate(const BinaryMask& mask)
{
  if (mask.empty())
  {
    throw Error(ErrorCode::empty_input, "drop rate of an empty mask");
  }
  const auto dropped = mask.size() - mask.popcount();
  return static_cast<double>(dropped) / static_cast<double>(mask.size());
}

std::string
serialize(const MaskRecord& record)
{
  if (record.bits.empty())
  {
    throw Error(ErrorCode::empty_input, "mask record '" + record.track_id + "' has no bits");
  }
  nlohmann::ordered_json j;
  j["track_id"] = record.track_id;
  j["p_n"] = record.p_n;
  j["p_l"] = record.p_l;
  j["seed"] = record.seed;
  j["bits"] = record.bits.to_string();
  return j.dump();
}

namespace {

[[noreturn]] void
malformed(std::size_t line_number, const std::string& why)
{
  throw Error(ErrorCode::malformed_line, "line " + std::to_string(line_number) + ": " + why);
}

} // namespace

MaskRecord
parse_mask_record(std::string_view line, std::size_t line_number)
{
  nlohmann::json j;
  try
  {
    j = nlohmann::json::parse(line);
  }
  catch (const nlohmann::json::exception& e)
  {
    malformed(line_number, e.what());
  }
  if (!j.is_object())
  {
    malformed(line_number, "expected a JSON object");
  }
  for (const char* key : {"track_id", "p_n", "p_l", "seed", "bits"})
  {
    if (!j.contains(key))
    {
      malformed(line_number, std::string("missing key '") + key + "'");
    }
  }
  if (!j["track_id"].is_string() || !j["p_n"].is_number() || !j["p_l"].is_number()
      || !j["seed"].is_number_unsigned() || !j["bits"].is_string())
  {
    malformed(line_number, "field has the wrong type");
  }

  MaskRecord record;
  record.track_id = j["track_id"].get<std::string>();
  record.p_n = j["p_n"].get<double>();
  record.p_l = j["p_l"].get<double>();
  record.seed = j["seed"].get<std::uint64_t>();
  try
  {
    record.bits = BinaryMask::from_string(j["bits"].get<std::string>());
  }
  catch (const Error& e)
  {
    malformed(line_number, e.what());
  }
  if (record.bits.empty())
  {
    malformed(line_number, "empty bits");
  }
  return record;
}

std::vector<MaskRecord>
read_mask_file(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
  {
    throw Error(ErrorCode::io, "cannot open " + path.string());
  }
  std::vector<MaskRecord> records;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line))
  {
    ++line_number;
    if (line.empty())
    {
      continue;
    }
    records.push_back(parse_mask_record(line, line_number));
  }
  return records;
}

void
write_mask_file(const std::filesystem::path& path, std::span<const MaskRecord> records)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
  {
    throw Error(ErrorCode::io, "cannot write " + path.string());
  }
  for (const auto& record : records)
  {
    out << serialize(record) << '\n';
  }
  if (!out)
  {
    throw Error(ErrorCode::io, "write failed: " + path.string());
  }
}

} // namespace frameloss
