#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gdn {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes or channel counts do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A value violates a documented invariant (symmetry, hollowness, range...).
class InvariantError : public Error {
 public:
  using Error::Error;
};

/// An iterative routine hit its iteration cap. Carries the final residual.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Cholesky factorization met a non-positive pivot.
class NotPositiveDefinite : public Error {
 public:
  NotPositiveDefinite(const std::string& what, std::size_t pivot)
      : Error(what), pivot_(pivot) {}
  std::size_t pivot() const noexcept { return pivot_; }

 private:
  std::size_t pivot_;
};

/// Rejection sampling exhausted its budget.
class RejectionError : public Error {
 public:
  RejectionError(const std::string& what, double acceptance_rate)
      : Error(what), acceptance_rate_(acceptance_rate) {}
  double acceptance_rate() const noexcept { return acceptance_rate_; }

 private:
  double acceptance_rate_;
};

/// Training or iterative solver produced a non-finite or exploding value.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ChecksumError : public IoError {
 public:
  using IoError::IoError;
};

class VersionError : public IoError {
 public:
  using IoError::IoError;
};

class FormatError : public IoError {
 public:
  using IoError::IoError;
};

}  // namespace gdn
