#pragma once

#include <initializer_list>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rydmix/fields.hpp"

namespace rydmix {

/// Shortest decimal representation that round-trips to the same double.
std::string format_number(double value);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  bool has_columns(std::initializer_list<std::string_view> names) const;
  std::size_t column(std::string_view name) const;
  double number(std::size_t row, std::string_view name) const;
};

/// Comma-separated, first non-comment line is the header, `#` starts a comment line.
CsvTable read_csv(std::istream& in);

using Metadata = std::vector<std::pair<std::string, std::string>>;

void write_metadata(std::ostream& out, const Metadata& meta);
void write_header(std::ostream& out, std::initializer_list<std::string_view> columns);
void write_row(std::ostream& out, std::initializer_list<double> values);
void write_row(std::ostream& out, const std::vector<std::string>& cells);

/// `# sample_rate_hz=...,unit=...` comment, then `time_s,<value_column>` rows.
void write_time_series(std::ostream& out, const TimeSeries& series,
                       std::string_view value_column = "value", const Metadata& meta = {});

}  // namespace rydmix
