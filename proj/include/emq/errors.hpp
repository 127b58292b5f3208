#pragma once

#include <stdexcept>
#include <string>

namespace emq {

/// Violated precondition on an argument (bad sizes, out-of-range values).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A computation that started but could not produce a trustworthy result
/// (stability limit, non-convergence, non-finite values).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when the chemical potential admits no multivalued free energy
/// (mu <= 0), so no Planck constant can be assigned.
class NoMultivaluedStructure : public std::domain_error {
 public:
  NoMultivaluedStructure()
      : std::domain_error("no multivalued structure: chemical potential must be positive") {}
};

}  // namespace emq
