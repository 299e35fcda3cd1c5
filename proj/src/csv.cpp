#include "rydmix/csv.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <istream>
#include <ostream>

#include "rydmix/errors.hpp"

namespace rydmix {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_cells(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t pos = 0;
  while (true) {
    const auto comma = line.find(',', pos);
    cells.emplace_back(trim(line.substr(pos, comma - pos)));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return cells;
}

}  // namespace

std::string format_number(double value) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc{}) return "nan";
  return std::string(buf.data(), ptr);
}

bool CsvTable::has_columns(std::initializer_list<std::string_view> names) const {
  return std::all_of(names.begin(), names.end(), [this](std::string_view n) {
    return std::find(header.begin(), header.end(), n) != header.end();
  });
}

std::size_t CsvTable::column(std::string_view name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw ConfigError("CSV column '" + std::string(name) + "' not found");
  return std::size_t(it - header.begin());
}

double CsvTable::number(std::size_t row, std::string_view name) const {
  const std::size_t col = column(name);
  const auto& cells = rows.at(row);
  if (col >= cells.size()) {
    throw ConfigError("CSV row " + std::to_string(row + 1) + " has no value for '" +
                      std::string(name) + "'");
  }
  const std::string& text = cells[col];
  double value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ConfigError("CSV row " + std::to_string(row + 1) + ", column '" + std::string(name) +
                      "': '" + text + "' is not a number");
  }
  return value;
}

CsvTable read_csv(std::istream& in) {
  CsvTable table;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    const auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    if (!have_header) {
      table.header = split_cells(body);
      have_header = true;
    } else {
      table.rows.push_back(split_cells(body));
    }
  }
  if (!have_header) throw ConfigError("CSV input has no header line");
  return table;
}

void write_metadata(std::ostream& out, const Metadata& meta) {
  for (const auto& [key, value] : meta) out << "# " << key << '=' << value << '\n';
}

void write_header(std::ostream& out, std::initializer_list<std::string_view> columns) {
  bool first = true;
  for (const auto c : columns) {
    if (!first) out << ',';
    out << c;
    first = false;
  }
  out << '\n';
}

void write_row(std::ostream& out, std::initializer_list<double> values) {
  bool first = true;
  for (const double v : values) {
    if (!first) out << ',';
    out << format_number(v);
    first = false;
  }
  out << '\n';
}

void write_row(std::ostream& out, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out << ',';
    out << cells[i];
  }
  out << '\n';
}

void write_time_series(std::ostream& out, const TimeSeries& series, std::string_view value_column,
                       const Metadata& meta) {
  out << "# sample_rate_hz=" << format_number(series.sample_rate)
      << ",unit=" << to_string(series.unit) << '\n';
  write_metadata(out, meta);
  write_header(out, {"time_s", value_column});
  for (Eigen::Index i = 0; i < series.size(); ++i) {
    write_row(out, {series.time_at(i), series.samples[i]});
  }
}

}  // namespace rydmix
