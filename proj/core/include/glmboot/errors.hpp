#pragma once

#include <stdexcept>
#include <string>

namespace glmboot {

// Error hierarchy mirrors the CLI exit-code contract:
//   InputError      -> exit 2 (bad files, columns, dimensions, config)
//   NumericalError  -> exit 3 (divergence, overflow, failed bootstrap)
//   std::logic_error-> exit 4 (internal invariant breach)

class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public InputError {
 public:
  using InputError::InputError;
};

class ParseError : public InputError {
 public:
  using InputError::InputError;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Overflow or NaN detected mid-computation; carries the offending
/// observation index (or -1 when no single index is responsible).
class NonFiniteError : public NumericalError {
 public:
  NonFiniteError(const std::string& what, long index)
      : NumericalError(what + " (observation " + std::to_string(index) + ")"),
        index_(index) {}
  explicit NonFiniteError(const std::string& what)
      : NumericalError(what), index_(-1) {}
  long index() const { return index_; }

 private:
  long index_;
};

/// The penalized objective is unbounded below (e.g. logistic separation
/// with a too-small penalty).
class SolverDivergence : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Every bootstrap replicate failed, or an experiment lost too many
/// Monte-Carlo repetitions to continue.
class BootstrapFailure : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class InsufficientReplicates : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace glmboot
