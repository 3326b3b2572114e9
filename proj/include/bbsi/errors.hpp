#pragma once

#include <stdexcept>
#include <string>

namespace bbsi {

/// Raised when an input violates a documented precondition.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a numerical procedure cannot produce a meaningful result
/// (singular covariance, unreachable selection event, diverging training).
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The estimated selection probability vanishes on the whole grid.
class DegenerateLaw : public NumericalFailure {
 public:
  using NumericalFailure::NumericalFailure;
};

inline void require(bool condition, const std::string& what) {
  if (!condition) throw InvalidInput(what);
}

/// The selection algorithm ran but selected nothing (empty lasso support,
/// no significant stage). Training treats this as a label-0 outcome.
class NothingSelected : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bbsi
