#pragma once

#include <chrono>
#include <compare>
#include <cstdio>
#include <optional>
#include <string>

#include "retrocast/errors.hpp"

namespace retrocast {

/// Calendar day, stored as days since 1970-01-01. Cheap value type so that
/// date arithmetic is plain integer arithmetic.
struct Date {
  int serial = 0;

  Date() = default;
  explicit constexpr Date(int days_since_epoch) : serial(days_since_epoch) {}

  auto operator<=>(const Date&) const = default;

  Date operator+(int days) const { return Date(serial + days); }
  Date operator-(int days) const { return Date(serial - days); }
  int operator-(Date other) const { return serial - other.serial; }
  Date& operator++() { ++serial; return *this; }
};

inline Date make_date(int year, unsigned month, unsigned day) {
  using namespace std::chrono;
  year_month_day ymd{std::chrono::year{year}, std::chrono::month{month},
                     std::chrono::day{day}};
  if (!ymd.ok()) {
    throw Error("invalid calendar date " + std::to_string(year) + "-" +
                std::to_string(month) + "-" + std::to_string(day));
  }
  return Date(static_cast<int>(sys_days{ymd}.time_since_epoch().count()));
}

/// Parses strict ISO-8601 "YYYY-MM-DD".
inline Date parse_date(const std::string& text) {
  int y = 0;
  unsigned m = 0, d = 0;
  char tail = 0;
  if (std::sscanf(text.c_str(), "%d-%u-%u%c", &y, &m, &d, &tail) != 3 ||
      text.size() != 10 || text[4] != '-' || text[7] != '-') {
    throw Error("cannot parse date '" + text + "' (expected YYYY-MM-DD)");
  }
  return make_date(y, m, d);
}

inline std::string to_string(Date date) {
  using namespace std::chrono;
  year_month_day ymd{sys_days{days{date.serial}}};
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", int(ymd.year()),
                unsigned(ymd.month()), unsigned(ymd.day()));
  return buf;
}

/// Closed interval of calendar days, [first, last].
struct DateInterval {
  Date first;
  Date last;

  bool valid() const { return first <= last; }
  int length() const { return last - first + 1; }
  bool contains(Date d) const { return first <= d && d <= last; }
  bool contains(const DateInterval& other) const {
    return first <= other.first && other.last <= last;
  }

  std::optional<DateInterval> intersect(const DateInterval& other) const {
    Date lo = std::max(first, other.first);
    Date hi = std::min(last, other.last);
    if (lo > hi) return std::nullopt;
    return DateInterval{lo, hi};
  }

  bool operator==(const DateInterval&) const = default;
};

}  // namespace retrocast
