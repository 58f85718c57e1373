#pragma once

#include <stdexcept>
#include <string>

namespace tpbn {

/// Argument outside the mathematical domain of a function.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Caller misuse: inconsistent shapes, invalid option combinations.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical routine failed to produce a finite, trustworthy result.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Root of a calibration equation could not be bracketed.
class CalibrationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// An internal invariant was violated; indicates a bug rather than bad input.
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require_domain(bool ok, const std::string& what) {
  if (!ok) throw DomainError(what);
}

inline void require_usage(bool ok, const std::string& what) {
  if (!ok) throw UsageError(what);
}

}  // namespace detail
}  // namespace tpbn
