#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fdindex {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Empty or mismatched matrix shapes.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Input has the wrong structure for the requested operation (e.g. a
/// non-Hermitian matrix handed to the spectral calculus).
class ShapeError : public Error {
 public:
  using Error::Error;
};

class SingularityError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// A subgroup or subalgebra is not contained where it is required to be.
class ContainmentError : public Error {
 public:
  using Error::Error;
};

/// Problem size exceeds a configured bound.
class SizeError : public Error {
 public:
  using Error::Error;
};

/// A freshly constructed object failed one of its defining identities.
/// The message names the identity.
class ConstructionError : public Error {
 public:
  using Error::Error;
};

/// An invariant that should hold by construction was violated numerically.
class InvariantError : public Error {
 public:
  using Error::Error;
};

/// An intermediate algebra is not compatible with the given expectation.
class IncompatibilityError : public Error {
 public:
  IncompatibilityError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Angle requested for an intermediate equal to the small algebra.
class DegenerateAngleError : public Error {
 public:
  using Error::Error;
};

/// The first-floor algebras are not compatible with the dual expectation.
class ExteriorAngleUndefined : public Error {
 public:
  ExteriorAngleUndefined(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Text input could not be parsed. `position` is a 0-based character offset.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : Error(what + " at position " + std::to_string(position)),
        detail_(what),
        position_(position) {}
  std::size_t position() const noexcept { return position_; }
  /// The message without the position suffix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::string detail_;
  std::size_t position_;
};

}  // namespace fdindex
