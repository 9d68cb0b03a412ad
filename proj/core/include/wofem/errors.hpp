#pragma once

#include <stdexcept>
#include <string>

namespace wofem {

/// Argument outside the mathematical domain of an operation (p <= 1, a < 0, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Evaluation requested outside the numerically supported range.
class RangeError : public std::range_error {
 public:
  using std::range_error::range_error;
};

/// A quantity that should be finite grew without bound under refinement.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input (mesh files, case files, CLI specs).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace wofem
