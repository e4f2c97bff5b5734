#pragma once

#include <stdexcept>
#include <string>

namespace schatten {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed arguments: non-finite entries, shape mismatches, out-of-range parameters.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// The gauge has an infinite right derivative at zero.
class NotWellBehaved : public Error {
 public:
  using Error::Error;
};

/// The equality-constrained recovery problem has no feasible point.
class Infeasible : public Error {
 public:
  using Error::Error;
};

/// The measurement operator is injective, so nullspace conditions hold vacuously.
class EmptyNullspace : public Error {
 public:
  using Error::Error;
};

/// A nullspace element handed to the witness construction does not violate the condition.
class InvalidWitness : public Error {
 public:
  using Error::Error;
};

/// Diagonal-alignment checks need pairwise separated reference values.
class DistinctnessViolated : public Error {
 public:
  using Error::Error;
};

namespace detail {

template <class E = InvalidInput>
inline void require(bool condition, const std::string& message) {
  if (!condition) throw E(message);
}

}  // namespace detail
}  // namespace schatten
