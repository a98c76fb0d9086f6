#include "frameloss/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "frameloss/error.hpp"

namespace frameloss {

std::string
format_double(double value)
{
  if (value == 0.0)
  {
    return "0"; // folds -0
  }
  std::array<char, 64> buffer{};
  const auto result = std::to_chars(buffer.data(), buffer.data() + buffer.size(), value);
  return std::string(buffer.data(), result.ptr);
}

namespace {

std::uint32_t
read_u32(const unsigned char* p)
noexcept
{
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8)
         | (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t
read_u16(const unsigned char* p)
noexcept
{
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void
put_u32(std::string& out, std::uint32_t v)
{
  for (int i = 0; i < 4; ++i)
  {
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
}

void
put_u16(std::string& out, std::uint16_t v)
{
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

std::string
slurp(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
  {
    throw Error(ErrorCode::io, "cannot open " + path.string());
  }
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void
dump(const std::filesystem::path& path, const std::string& bytes)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
  {
    throw Error(ErrorCode::io, "cannot write " + path.string());
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out)
  {
    throw Error(ErrorCode::io, "write failed: " + path.string());
  }
}

[[noreturn]] void
bad_wav(const std::filesystem::path& path, const std::string& why)
{
  throw Error(ErrorCode::io, path.string() + ": " + why);
}

} // namespace

PcmAudio
read_wav(const std::filesystem::path& path)
{
  const std::string bytes = slurp(path);
  const auto* data = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < 12 || std::memcmp(data, "RIFF", 4) != 0 || std::memcmp(data + 8, "WAVE", 4) != 0)
  {
    bad_wav(path, "not a RIFF/WAVE file");
  }

  PcmAudio audio;
  bool have_format = false;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size())
  {
    const unsigned char* chunk = data + pos;
    const std::uint32_t size = read_u32(chunk + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size())
    {
      bad_wav(path, "truncated chunk");
    }
    if (std::memcmp(chunk, "fmt ", 4) == 0)
    {
      if (size < 16)
      {
        bad_wav(path, "short fmt chunk");
      }
      const std::uint16_t format = read_u16(data + body);
      const std::uint16_t channels = read_u16(data + body + 2);
      const std::uint16_t bits = read_u16(data + body + 14);
      if (format != 1 || channels != 1 || bits != 16)
      {
        bad_wav(path, "expected mono PCM16");
      }
      audio.sample_rate = read_u32(data + body + 4);
      have_format = true;
    }
    else if (std::memcmp(chunk, "data", 4) == 0)
    {
      if (!have_format)
      {
        bad_wav(path, "data chunk before fmt chunk");
      }
      audio.samples.resize(size / 2);
      for (std::size_t i = 0; i < audio.samples.size(); ++i)
      {
        audio.samples[i] = static_cast<std::int16_t>(read_u16(data + body + 2 * i));
      }
      return audio;
    }
    pos = body + size + (size & 1);
  }
  bad_wav(path, "no data chunk");
}

void
write_wav(const std::filesystem::path& path, const PcmAudio& audio)
{
  const auto data_size = static_cast<std::uint32_t>(audio.samples.size() * 2);
  std::string out;
  out.reserve(44 + data_size);
  out += "RIFF";
  put_u32(out, 36 + data_size);
  out += "WAVEfmt ";
  put_u32(out, 16);
  put_u16(out, 1);                      // PCM
  put_u16(out, 1);                      // mono
  put_u32(out, audio.sample_rate);
  put_u32(out, audio.sample_rate * 2);  // byte rate
  put_u16(out, 2);                      // block align
  put_u16(out, 16);
  out += "data";
  put_u32(out, data_size);
  for (auto s : audio.samples)
  {
    put_u16(out, static_cast<std::uint16_t>(s));
  }
  dump(path, out);
}

namespace {

struct CsvTable
{
  std::vector<std::string> header;
  std::vector<std::array<double, 3>> rows;
};

std::vector<std::string>
split_fields(const std::string& line)
{
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ','))
  {
    fields.push_back(field);
  }
  if (!line.empty() && line.back() == ',')
  {
    fields.emplace_back();
  }
  return fields;
}

double
parse_number(const std::string& text, const std::filesystem::path& path, std::size_t line)
{
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  while (first < last && *first == ' ')
  {
    ++first;
  }
  if (first < last && *first == '+')
  {
    ++first;
  }
  const auto result = std::from_chars(first, last, value);
  if (result.ec != std::errc{} || result.ptr != last || !std::isfinite(value))
  {
    throw Error(ErrorCode::malformed_line,
                path.string() + " line " + std::to_string(line) + ": bad number '" + text + "'");
  }
  return value;
}

CsvTable
read_three_column_csv(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
  {
    throw Error(ErrorCode::io, "cannot open " + path.string());
  }
  CsvTable table;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line))
  {
    ++line_number;
    if (!line.empty() && line.back() == '\r')
    {
      line.pop_back();
    }
    if (line.empty())
    {
      continue;
    }
    auto fields = split_fields(line);
    if (fields.size() != 3)
    {
      throw Error(ErrorCode::malformed_line,
                  path.string() + " line " + std::to_string(line_number) + ": expected 3 fields");
    }
    if (table.header.empty())
    {
      table.header = std::move(fields);
      continue;
    }
    table.rows.push_back({parse_number(fields[0], path, line_number),
                          parse_number(fields[1], path, line_number),
                          parse_number(fields[2], path, line_number)});
  }
  if (table.header.empty())
  {
    throw Error(ErrorCode::malformed_line, path.string() + ": missing header");
  }
  return table;
}

EmotionSeries
series_from_table(const CsvTable& table, double rate, bool first_is_time)
{
  EmotionSeries series;
  series.rate = rate;
  const auto n = static_cast<Eigen::Index>(table.rows.size());
  series.values.resize(n, 2);
  series.times.resize(n);
  for (Eigen::Index i = 0; i < n; ++i)
  {
    const auto& row = table.rows[static_cast<std::size_t>(i)];
    series.times(i) = first_is_time ? row[0] : row[0] / rate;
    series.values(i, arousal) = row[1];
    series.values(i, valence) = row[2];
  }
  return series;
}

void
expect_header(const CsvTable& table, const std::filesystem::path& path, const char* first)
{
  if (table.header != std::vector<std::string>{first, "arousal", "valence"})
  {
    throw Error(ErrorCode::malformed_line,
                path.string() + ": expected header " + first + ",arousal,valence");
  }
}

void
write_rows(const std::filesystem::path& path, const EmotionSeries& series, bool time_column)
{
  std::string out = time_column ? "time_s,arousal,valence\n" : "frame_index,arousal,valence\n";
  for (Eigen::Index i = 0; i < series.size(); ++i)
  {
    out += time_column ? format_double(series.times(i)) : std::to_string(i);
    out += ',';
    out += format_double(series.values(i, arousal));
    out += ',';
    out += format_double(series.values(i, valence));
    out += '\n';
  }
  dump(path, out);
}

} // namespace

EmotionSeries
read_label_csv(const std::filesystem::path& path, double rate)
{
  const auto table = read_three_column_csv(path);
  expect_header(table, path, "time_s");
  return series_from_table(table, rate, true);
}

void
write_label_csv(const std::filesystem::path& path, const EmotionSeries& series)
{
  write_rows(path, series, true);
}

EmotionSeries
read_prediction_csv(const std::filesystem::path& path, double rate)
{
  const auto table = read_three_column_csv(path);
  expect_header(table, path, "frame_index");
  return series_from_table(table, rate, false);
}

void
write_prediction_csv(const std::filesystem::path& path, const EmotionSeries& series)
{
  write_rows(path, series, false);
}

EmotionSeries
read_series_csv(const std::filesystem::path& path, double rate)
{
  const auto table = read_three_column_csv(path);
  if (!table.header.empty() && table.header[0] == "time_s")
  {
    expect_header(table, path, "time_s");
    return series_from_table(table, rate, true);
  }
  expect_header(table, path, "frame_index");
  return series_from_table(table, rate, false);
}

} // namespace frameloss
