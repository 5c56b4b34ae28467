#pragma once

#include <stdexcept>
#include <string>

namespace pqf {

// Base class for all library errors.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// A matrix or pattern has incompatible dimensions for the requested operation.
class ShapeError : public Error {
  public:
    using Error::Error;
};

// A size or index argument is out of its valid range.
class InvalidDimension : public Error {
  public:
    using Error::Error;
};

// A brute-force computation would exceed the configured work budget.
// Raised instead of silently truncating.
class BudgetExceeded : public Error {
  public:
    using Error::Error;
};

// An estimator was asked to run on an empty or too-small data set.
class InsufficientData : public Error {
  public:
    using Error::Error;
};

// A statistic is undefined for the given data (e.g. zero mean or variance).
class UndefinedStatistic : public Error {
  public:
    using Error::Error;
};

// Malformed input file. Carries a line number when one is known.
class DataFormatError : public Error {
  public:
    explicit DataFormatError(const std::string& what, long line = -1)
        : Error(line >= 0 ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}
    long line() const { return line_; }

  private:
    long line_ = -1;
};

}  // namespace pqf
