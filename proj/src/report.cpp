#include "frameloss/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "frameloss/io.hpp"

namespace frameloss {

namespace {

constexpr const char* results_header = "setting,model_id,p_n,p_l,seed,drop_rate,ccc_arousal,ccc_valence,degenerate";

void
write_text(const std::filesystem::path& path, const std::string& text)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
  {
    throw Error(ErrorCode::io, "cannot write " + path.string());
  }
  out << text;
  if (!out)
  {
    throw Error(ErrorCode::io, "write failed: " + path.string());
  }
}

std::string
fixed(double value, int digits = 3)
{
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.*f", digits, value);
  return buffer;
}

double
ccc_of(const ResultRecord& r, Dimension d)
{
  return d == arousal ? r.ccc_arousal : r.ccc_valence;
}

const char*
dim_name(Dimension d)
{
  return d == arousal ? "arousal" : "valence";
}

/// Diverging blue-white-red ramp over [-1, 1].
std::string
ramp(double value)
{
  const double t = std::clamp((value + 1.0) / 2.0, 0.0, 1.0);
  int r, g, b;
  if (t < 0.5)
  {
    const double s = t / 0.5;
    r = static_cast<int>(std::lround(59 + s * (247 - 59)));
    g = static_cast<int>(std::lround(76 + s * (247 - 76)));
    b = static_cast<int>(std::lround(192 + s * (247 - 192)));
  }
  else
  {
    const double s = (t - 0.5) / 0.5;
    r = static_cast<int>(std::lround(247 + s * (180 - 247)));
    g = static_cast<int>(std::lround(247 + s * (4 - 247)));
    b = static_cast<int>(std::lround(247 + s * (38 - 247)));
  }
  char buffer[16];
  std::snprintf(buffer, sizeof buffer, "#%02x%02x%02x", r, g, b);
  return buffer;
}

std::string
curve_svg(const std::string& title, const std::vector<std::pair<double, double>>& points)
{
  const double width = 480, height = 320, left = 56, right = 16, top = 32, bottom = 44;
  double y_min = 0.0;
  for (const auto& p : points)
  {
    y_min = std::min(y_min, p.second);
  }
  y_min = std::floor(y_min * 10.0) / 10.0;
  const double y_max = 1.0;
  auto sx = [&](double x) { return left + x * (width - left - right); };
  auto sy = [&](double y) { return top + (y_max - y) / (y_max - y_min) * (height - top - bottom); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
  svg << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
  svg << "<line x1=\"" << sx(0) << "\" y1=\"" << sy(y_min) << "\" x2=\"" << sx(1) << "\" y2=\"" << sy(y_min)
      << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << sx(0) << "\" y1=\"" << sy(y_min) << "\" x2=\"" << sx(0) << "\" y2=\"" << sy(y_max)
      << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i)
  {
    const double x = i / 5.0;
    svg << "<text x=\"" << sx(x) << "\" y=\"" << sy(y_min) + 16 << "\" text-anchor=\"middle\" font-size=\"10\">"
        << fixed(x, 1) << "</text>\n";
  }
  for (double y = y_min; y <= y_max + 1e-9; y += (y_max - y_min) / 5.0)
  {
    svg << "<text x=\"" << left - 6 << "\" y=\"" << sy(y) + 3 << "\" text-anchor=\"end\" font-size=\"10\">"
        << fixed(y, 1) << "</text>\n";
  }
  svg << "<text x=\"" << width / 2 << "\" y=\"" << height - 8 << "\" text-anchor=\"middle\" font-size=\"12\">"
      << "drop rate</text>\n";
  svg << "<text x=\"14\" y=\"" << height / 2 << "\" font-size=\"12\" transform=\"rotate(-90 14 " << height / 2
      << ")\" text-anchor=\"middle\">CCC</text>\n";
  if (!points.empty())
  {
    svg << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"";
    for (const auto& [x, y] : points)
    {
      svg << fixed(sx(x), 2) << ',' << fixed(sy(y), 2) << ' ';
    }
    svg << "\"/>\n";
    for (const auto& [x, y] : points)
    {
      svg << "<circle cx=\"" << fixed(sx(x), 2) << "\" cy=\"" << fixed(sy(y), 2) << "\" r=\"2\" fill=\"#1f77b4\"/>\n";
    }
  }
  svg << "</svg>\n";
  return svg.str();
}

struct Heatmap
{
  std::vector<double> pn_values;  // rows
  std::vector<double> pl_values;  // columns
  std::map<std::pair<double, double>, const ResultRecord*> cells;
};

Heatmap
build_heatmap(const std::vector<const ResultRecord*>& records)
{
  Heatmap map;
  std::set<double> pn, pl;
  for (const auto* r : records)
  {
    pn.insert(r->p_n);
    pl.insert(r->p_l);
    map.cells[{r->p_n, r->p_l}] = r;
  }
  map.pn_values.assign(pn.begin(), pn.end());
  map.pl_values.assign(pl.begin(), pl.end());
  return map;
}

std::string
heatmap_csv(const Heatmap& map, Dimension d)
{
  std::string out = "p_n\\p_l";
  for (double pl : map.pl_values)
  {
    out += ',' + format_double(pl);
  }
  out += '\n';
  for (double pn : map.pn_values)
  {
    out += format_double(pn);
    for (double pl : map.pl_values)
    {
      out += ',';
      auto it = map.cells.find({pn, pl});
      if (it != map.cells.end() && !it->second->degenerate)
      {
        out += format_double(ccc_of(*it->second, d));
      }
    }
    out += '\n';
  }
  return out;
}

std::string
heatmap_svg(const std::string& title, const Heatmap& map, Dimension d)
{
  const double cell = 40, left = 56, top = 36;
  const double width = left + cell * static_cast<double>(map.pl_values.size()) + 16;
  const double height = top + cell * static_cast<double>(map.pn_values.size()) + 44;
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
  svg << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
  // Highest p_N at the top.
  const std::size_t rows = map.pn_values.size();
  for (std::size_t i = 0; i < rows; ++i)
  {
    const double pn = map.pn_values[rows - 1 - i];
    const double y = top + cell * static_cast<double>(i);
    svg << "<text x=\"" << left - 6 << "\" y=\"" << y + cell / 2 + 4
        << "\" text-anchor=\"end\" font-size=\"10\">" << fixed(pn, 2) << "</text>\n";
    for (std::size_t j = 0; j < map.pl_values.size(); ++j)
    {
      const double x = left + cell * static_cast<double>(j);
      auto it = map.cells.find({pn, map.pl_values[j]});
      const bool missing = it == map.cells.end() || it->second->degenerate;
      const std::string fill = missing ? "#d9d9d9" : ramp(ccc_of(*it->second, d));
      svg << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\"" << cell
          << "\" fill=\"" << fill << "\" stroke=\"white\"" << (missing ? " class=\"missing\"" : "") << "/>\n";
      svg << "<text x=\"" << x + cell / 2 << "\" y=\"" << y + cell / 2 + 3
          << "\" text-anchor=\"middle\" font-size=\"9\">" << (missing ? "n/a" : fixed(ccc_of(*it->second, d), 2))
          << "</text>\n";
    }
  }
  const double axis_y = top + cell * static_cast<double>(rows);
  for (std::size_t j = 0; j < map.pl_values.size(); ++j)
  {
    svg << "<text x=\"" << left + cell * static_cast<double>(j) + cell / 2 << "\" y=\"" << axis_y + 14
        << "\" text-anchor=\"middle\" font-size=\"10\">" << fixed(map.pl_values[j], 2) << "</text>\n";
  }
  svg << "<text x=\"" << left + cell * static_cast<double>(map.pl_values.size()) / 2 << "\" y=\"" << axis_y + 34
      << "\" text-anchor=\"middle\" font-size=\"12\">p_L</text>\n";
  svg << "<text x=\"12\" y=\"" << top + cell * static_cast<double>(rows) / 2
      << "\" font-size=\"12\">p_N</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

std::vector<std::string>
split_fields(const std::string& line)
{
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true)
  {
    const auto comma = line.find(',', start);
    fields.push_back(line.substr(start, comma - start));
    if (comma == std::string::npos)
    {
      break;
    }
    start = comma + 1;
  }
  return fields;
}

} // namespace

void
write_results_csv(const std::filesystem::path& path, std::span<const ResultRecord> records)
{
  std::string out = std::string(results_header) + '\n';
  for (const auto& r : records)
  {
    out += r.setting + ',' + r.model_id + ',' + format_double(r.p_n) + ',' + format_double(r.p_l) + ','
           + std::to_string(r.seed) + ',' + format_double(r.drop_rate) + ',';
    if (!r.degenerate)
    {
      out += format_double(r.ccc_arousal) + ',' + format_double(r.ccc_valence);
    }
    else
    {
      out += ',';
    }
    out += r.degenerate ? ",1\n" : ",0\n";
  }
  write_text(path, out);
}

std::vector<ResultRecord>
read_results_csv(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
  {
    throw Error(ErrorCode::io, "cannot open " + path.string());
  }
  std::string line;
  if (!std::getline(in, line) || line != results_header)
  {
    throw Error(ErrorCode::malformed_line, path.string() + ": unexpected results header");
  }
  std::vector<ResultRecord> records;
  std::size_t line_number = 1;
  while (std::getline(in, line))
  {
    ++line_number;
    if (line.empty())
    {
      continue;
    }
    const auto f = split_fields(line);
    try
    {
      if (f.size() != 9)
      {
        throw std::invalid_argument("expected 9 fields");
      }
      ResultRecord r;
      r.setting = f[0];
      r.model_id = f[1];
      r.p_n = std::stod(f[2]);
      r.p_l = std::stod(f[3]);
      r.seed = std::stoull(f[4]);
      r.drop_rate = std::stod(f[5]);
      r.degenerate = f[8] == "1";
      if (!r.degenerate)
      {
        r.ccc_arousal = std::stod(f[6]);
        r.ccc_valence = std::stod(f[7]);
      }
      records.push_back(std::move(r));
    }
    catch (const std::exception& e)
    {
      throw Error(ErrorCode::malformed_line,
                  path.string() + " line " + std::to_string(line_number) + ": " + e.what());
    }
  }
  return records;
}

std::vector<std::filesystem::path>
emit_reports(std::span<const ResultRecord> records, const std::filesystem::path& out_dir)
{
  if (records.empty())
  {
    throw Error(ErrorCode::empty_input, "no records to report");
  }
  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> written;

  const auto results = out_dir / "results.csv";
  write_results_csv(results, records);
  written.push_back(results);

  // Settings in order of first appearance.
  std::vector<std::string> settings;
  std::map<std::string, std::vector<const ResultRecord*>> by_setting;
  for (const auto& r : records)
  {
    if (!by_setting.count(r.setting))
    {
      settings.push_back(r.setting);
    }
    by_setting[r.setting].push_back(&r);
  }

  for (const auto& setting : settings)
  {
    const auto& rows = by_setting[setting];
    const Heatmap map = build_heatmap(rows);
    for (Dimension d : {arousal, valence})
    {
      const std::string stem = setting + "_" + dim_name(d);

      std::vector<std::pair<double, double>> points;
      for (const auto* r : rows)
      {
        if (!r->degenerate)
        {
          points.emplace_back(r->drop_rate, ccc_of(*r, d));
        }
      }
      std::stable_sort(points.begin(), points.end());
      std::string curve = "drop_rate,ccc\n";
      for (const auto& [x, y] : points)
      {
        curve += format_double(x) + ',' + format_double(y) + '\n';
      }
      const auto curve_csv = out_dir / ("curve_" + stem + ".csv");
      const auto curve_plot = out_dir / ("curve_" + stem + ".svg");
      write_text(curve_csv, curve);
      write_text(curve_plot, curve_svg(setting + " / " + dim_name(d) + ": CCC vs drop rate", points));

      const auto heat_csv = out_dir / ("heatmap_" + stem + ".csv");
      const auto heat_plot = out_dir / ("heatmap_" + stem + ".svg");
      write_text(heat_csv, heatmap_csv(map, d));
      write_text(heat_plot, heatmap_svg(setting + " / " + dim_name(d), map, d));

      written.insert(written.end(), {curve_csv, curve_plot, heat_csv, heat_plot});
    }
  }
  return written;
}

} // namespace frameloss
