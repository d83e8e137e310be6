#pragma once

#include <stdexcept>
#include <string>

namespace qlink {

// Shape or subsystem-index mismatch between operands.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Input violates a mathematical precondition (non-Hermitian, non-unitary,
// completeness violated, state outside the admissible subspace, ...).
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A construction could not be carried out (Radon infeasible, code too small).
class ConstructionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A computed result failed one of its own post-condition checks.
class InvariantViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Decoder input carries weight outside the code-carrying blocks.
class LeakageError : public std::runtime_error {
 public:
  explicit LeakageError(const std::string& what, double captured)
      : std::runtime_error(what), captured_(captured) {}
  double captured_weight() const noexcept { return captured_; }

 private:
  double captured_;
};

}  // namespace qlink
