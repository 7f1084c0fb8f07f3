#pragma once

#include <stdexcept>
#include <string>

namespace retrocast {

/// Base class of every error thrown by this library.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Data ingestion / series errors.
struct MissingColumn : Error {
  explicit MissingColumn(const std::string& column)
      : Error("missing column: " + column) {}
};

struct GapInDates : Error {
  GapInDates(const std::string& cohort, const std::string& quantity,
             const std::string& date)
      : Error("gap in dates for (" + cohort + ", " + quantity + ") at " + date) {}
};

struct NegativeValue : Error {
  explicit NegativeValue(long row)
      : Error("negative value at row " + std::to_string(row)) {}
};

struct UnknownCohortLabel : Error {
  explicit UnknownCohortLabel(const std::string& label)
      : Error("unknown age group label: " + label) {}
};

struct OutOfRange : Error {
  explicit OutOfRange(const std::string& msg) : Error(msg) {}
};

struct MisalignedDates : Error {
  explicit MisalignedDates(const std::string& msg) : Error(msg) {}
};

// Identification errors.
struct ZeroRegressor : Error {
  ZeroRegressor() : Error("regressor is identically zero") {}
};

struct NonFiniteInput : Error {
  explicit NonFiniteInput(const std::string& what)
      : Error("non-finite values in " + what) {}
};

// Solver errors.
struct SizeTooSmall : Error {
  explicit SizeTooSmall(const std::string& msg) : Error(msg) {}
};

struct SingularSystem : Error {
  explicit SingularSystem(const std::string& msg) : Error(msg) {}
};

struct MaxIterations : Error {
  explicit MaxIterations(const std::string& msg) : Error(msg) {}
};

struct Unbounded : Error {
  explicit Unbounded(const std::string& msg) : Error(msg) {}
};

// Model selection errors.
struct TooFewPoints : Error {
  explicit TooFewPoints(const std::string& msg) : Error(msg) {}
};

struct IllConditioned : Error {
  explicit IllConditioned(const std::string& msg) : Error(msg) {}
};

// Bootstrap errors.
struct EmptyInput : Error {
  explicit EmptyInput(const std::string& msg) : Error(msg) {}
};

struct TooManyFailures : Error {
  TooManyFailures(int failed, int total)
      : Error("too many failed replicates: " + std::to_string(failed) + "/" +
              std::to_string(total)) {}
};

}  // namespace retrocast
