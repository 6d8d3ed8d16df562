#ifndef SSS_ERRORS_HPP
#define SSS_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace sss {

// Input outside the mathematical domain of an operation (e.g. s(0) = 0/0).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// The log-surrogate and its derivatives are not defined when an entry is 0.
class UndefinedAtZeroError : public DomainError {
 public:
  using DomainError::DomainError;
};

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised when an intermediate quantity overflows or becomes NaN.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegenerateInputError : public DomainError {
 public:
  using DomainError::DomainError;
};

}  // namespace sss

#endif  // SSS_ERRORS_HPP
