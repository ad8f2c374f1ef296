#pragma once

#include <stdexcept>
#include <string>

namespace dynmatch {

// Argument outside the mathematical domain of a function (negative time,
// probability >= 1, evaluation at the right edge of a support, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Matching rates outside the transportation polytope.
class FeasibilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Gradient requested at a point where a row or column constraint is at a
// boundary and the queue formula is not differentiable.
class GradientUndefinedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed combinatorial input: cyclic support, bad partition, ...
class StructureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Instance too large for an exponential-time routine.
class SizeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// State-space truncation too small for the requested accuracy.
class TruncationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dynmatch
