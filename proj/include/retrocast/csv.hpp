#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "retrocast/series.hpp"

namespace retrocast {

/// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

namespace detail {

inline std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) {
    // trim surrounding whitespace
    size_t a = field.find_first_not_of(" \t\r");
    size_t b = field.find_last_not_of(" \t\r");
    fields.push_back(a == std::string::npos ? "" : field.substr(a, b - a + 1));
  }
  if (!line.empty() && line.back() == ',') fields.emplace_back("");
  return fields;
}

inline double parse_double(const std::string& s, long row) {
  try {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw Error("");
    return v;
  } catch (const std::exception&) {
    throw Error("row " + std::to_string(row) + ": cannot parse number '" + s + "'");
  }
}

}  // namespace detail

/// Column names of the series CSV. Defaults match the documented schema.
struct ColumnSchema {
  std::string date = "date";
  std::string age_group = "age_group";
  std::string quantity = "quantity";
  std::string value = "value";
  std::string smoothed = "smoothed";  // optional on input, written on output
};

/// Reads a series CSV `date,age_group,quantity,value[,smoothed]` into a
/// dataset. Dates of each (age group, quantity) pair must form a contiguous
/// daily range; values must be nonnegative; age labels must be one of the ten
/// decade bins.
inline CohortDataset load_csv(const std::string& path,
                              const ColumnSchema& schema = {}) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);

  std::string line;
  if (!std::getline(in, line)) throw Error("empty file " + path);
  const auto header = detail::split_line(line);
  auto column = [&](const std::string& name, bool required) {
    for (size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return static_cast<int>(i);
    }
    if (required) throw MissingColumn(name);
    return -1;
  };
  const int c_date = column(schema.date, true);
  const int c_age = column(schema.age_group, true);
  const int c_qty = column(schema.quantity, true);
  const int c_val = column(schema.value, true);
  const int c_smooth = column(schema.smoothed, false);

  struct Row {
    Date date;
    double value;
    bool smoothed;
  };
  std::map<SeriesKey, std::vector<Row>> rows;

  long row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = detail::split_line(line);
    const int needed = std::max({c_date, c_age, c_qty, c_val, c_smooth});
    if (static_cast<int>(fields.size()) <= needed) {
      throw Error("row " + std::to_string(row_no) + ": too few fields");
    }
    const std::string& label = fields[static_cast<size_t>(c_age)];
    if (!is_cohort_label(label)) throw UnknownCohortLabel(label);
    const Quantity q = quantity_from_string(fields[static_cast<size_t>(c_qty)]);
    const double v = detail::parse_double(fields[static_cast<size_t>(c_val)], row_no);
    if (!std::isfinite(v)) throw NonFiniteInput("row " + std::to_string(row_no));
    if (v < 0) throw NegativeValue(row_no);
    bool smooth = false;
    if (c_smooth >= 0) {
      const std::string& s = fields[static_cast<size_t>(c_smooth)];
      smooth = (s == "true" || s == "1");
    }
    rows[{label, q}].push_back({parse_date(fields[static_cast<size_t>(c_date)]), v, smooth});
  }

  CohortDataset ds;
  std::map<std::string, bool> seen;
  for (auto& [key, rs] : rows) {
    std::sort(rs.begin(), rs.end(),
              [](const Row& a, const Row& b) { return a.date < b.date; });
    DailySeries s;
    s.start = rs.front().date;
    s.quantity = key.second;
    s.cohort = key.first;
    s.smoothed = rs.front().smoothed;
    s.values.reserve(rs.size());
    Date expected = s.start;
    for (const auto& r : rs) {
      if (r.date != expected) {
        throw GapInDates(key.first, to_string(key.second), to_string(expected));
      }
      if (r.smoothed != s.smoothed) {
        throw Error("inconsistent smoothed flag for (" + key.first + ", " +
                    to_string(key.second) + ")");
      }
      s.values.push_back(r.value);
      ++expected;
    }
    validate_counts(s);
    ds.series.emplace(key, std::move(s));
    seen[key.first] = true;
  }
  for (const auto& [label, _] : seen) ds.cohorts.push_back({label, 0});
  return ds;
}

/// Writes the dataset back in the input schema plus the `smoothed` column.
inline void save_csv(const CohortDataset& ds, const std::string& path,
                     const ColumnSchema& schema = {}) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << schema.date << ',' << schema.age_group << ',' << schema.quantity << ','
      << schema.value << ',' << schema.smoothed << '\n';
  for (const auto& [key, s] : ds.series) {
    for (int i = 0; i < s.size(); ++i) {
      out << to_string(s.date(i)) << ',' << key.first << ',' << to_string(key.second)
          << ',' << format_double(s.values[static_cast<size_t>(i)]) << ','
          << (s.smoothed ? "true" : "false") << '\n';
    }
  }
}

/// Reads the population CSV `age_group,population`.
inline std::map<std::string, std::int64_t> load_population_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw Error("empty file " + path);
  const auto header = detail::split_line(line);
  if (header.size() < 2 || header[0] != "age_group" || header[1] != "population") {
    throw MissingColumn("age_group,population");
  }
  std::map<std::string, std::int64_t> populations;
  long row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = detail::split_line(line);
    if (fields.size() < 2) throw Error("row " + std::to_string(row_no) + ": too few fields");
    if (!is_cohort_label(fields[0])) throw UnknownCohortLabel(fields[0]);
    const double v = detail::parse_double(fields[1], row_no);
    if (v <= 0) throw Error("row " + std::to_string(row_no) + ": population must be positive");
    populations[fields[0]] = static_cast<std::int64_t>(v);
  }
  return populations;
}

}  // namespace retrocast
