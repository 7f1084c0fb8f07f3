#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "retrocast/dates.hpp"
#include "retrocast/errors.hpp"

namespace retrocast {

enum class Quantity { new_cases, hospital_admissions };

inline std::string to_string(Quantity q) {
  return q == Quantity::new_cases ? "new_cases" : "hospital_admissions";
}

inline Quantity quantity_from_string(const std::string& s) {
  if (s == "new_cases") return Quantity::new_cases;
  if (s == "hospital_admissions") return Quantity::hospital_admissions;
  throw Error("unknown quantity '" + s + "'");
}

/// The ten decade age bins used throughout, "00-09" .. "90-99".
inline const std::array<std::string, 10>& cohort_labels() {
  static const std::array<std::string, 10> labels = {
      "00-09", "10-19", "20-29", "30-39", "40-49",
      "50-59", "60-69", "70-79", "80-89", "90-99"};
  return labels;
}

inline bool is_cohort_label(const std::string& label) {
  const auto& all = cohort_labels();
  return std::find(all.begin(), all.end(), label) != all.end();
}

struct AgeCohort {
  std::string label;
  std::int64_t population = 0;  // persons; 0 means not yet attached
};

/// Equally spaced daily values for one quantity of one age cohort.
/// One value per consecutive calendar day starting at `start`.
struct DailySeries {
  Date start;
  std::vector<double> values;
  Quantity quantity = Quantity::new_cases;
  std::string cohort;
  bool smoothed = false;

  int size() const { return static_cast<int>(values.size()); }
  Date date(int i) const { return start + i; }
  Date last_date() const { return start + (size() - 1); }
  DateInterval support() const { return {start, last_date()}; }
  bool covers(Date d) const { return d >= start && d <= last_date(); }
  double at(Date d) const { return values.at(static_cast<size_t>(d - start)); }
  double operator[](int i) const { return values[static_cast<size_t>(i)]; }

  bool operator==(const DailySeries&) const = default;
};

/// Checks the count-series invariants (nonempty, finite, nonnegative).
inline void validate_counts(const DailySeries& s) {
  if (s.values.empty()) throw Error("empty series for cohort " + s.cohort);
  for (size_t i = 0; i < s.values.size(); ++i) {
    if (!std::isfinite(s.values[i])) {
      throw NonFiniteInput("series (" + s.cohort + ", " + to_string(s.quantity) + ")");
    }
    if (s.values[i] < 0) throw NegativeValue(static_cast<long>(i));
  }
}

/// Centered seven-day moving average with shrinking windows at the edges:
/// value t becomes the mean over [t-3, t+3] intersected with the support,
/// so length and date grid are preserved.
inline DailySeries moving_average_7(const DailySeries& s) {
  if (s.values.empty()) throw Error("moving_average_7: empty series");
  DailySeries out = s;
  const int n = s.size();
  for (int t = 0; t < n; ++t) {
    const int lo = std::max(0, t - 3);
    const int hi = std::min(n - 1, t + 3);
    double sum = 0.0;
    for (int j = lo; j <= hi; ++j) sum += s.values[static_cast<size_t>(j)];
    out.values[static_cast<size_t>(t)] = sum / (hi - lo + 1);
  }
  out.smoothed = true;
  return out;
}

/// Slice of the series restricted to `interval`, which must lie inside the
/// series support.
inline DailySeries window(const DailySeries& s, const DateInterval& interval) {
  if (!interval.valid() || !s.support().contains(interval)) {
    throw OutOfRange("window [" + to_string(interval.first) + ", " +
                     to_string(interval.last) + "] not contained in series support [" +
                     to_string(s.start) + ", " + to_string(s.last_date()) + "]");
  }
  DailySeries out = s;
  out.start = interval.first;
  const auto offset = static_cast<size_t>(interval.first - s.start);
  out.values.assign(s.values.begin() + offset,
                    s.values.begin() + offset + interval.length());
  return out;
}

using SeriesKey = std::pair<std::string, Quantity>;

/// All series of a dataset, keyed by (age group, quantity), plus the cohort
/// populations and any named analysis windows.
struct CohortDataset {
  std::vector<AgeCohort> cohorts;                 // sorted by label
  std::map<SeriesKey, DailySeries> series;
  std::map<std::string, DateInterval> windows;

  bool has(const std::string& label, Quantity q) const {
    return series.count({label, q}) > 0;
  }
  const DailySeries& at(const std::string& label, Quantity q) const {
    auto it = series.find({label, q});
    if (it == series.end()) {
      throw Error("no series for (" + label + ", " + to_string(q) + ")");
    }
    return it->second;
  }
  const AgeCohort& cohort(const std::string& label) const {
    for (const auto& c : cohorts) {
      if (c.label == label) return c;
    }
    throw UnknownCohortLabel(label);
  }
};

/// Attaches populations (from the separate population table) to the cohorts.
inline void set_populations(CohortDataset& ds,
                            const std::map<std::string, std::int64_t>& populations) {
  for (auto& c : ds.cohorts) {
    auto it = populations.find(c.label);
    if (it == populations.end()) throw Error("no population for cohort " + c.label);
    if (it->second <= 0) throw Error("population must be positive for " + c.label);
    c.population = it->second;
  }
}

}  // namespace retrocast
