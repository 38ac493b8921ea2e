#pragma once

#include <stdexcept>
#include <string>

namespace momspec {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes that do not fit together (matrix sizes, vech lengths, sample dims).
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A parameter outside its documented domain (negative weight, c <= 0, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Input matrix expected to be positive semidefinite is not.
class NotPsdError : public Error {
 public:
  using Error::Error;
};

/// Iterative solver failed to converge within its cap.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Problem too large for a dense or enumerative code path.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// Operator and second moment do not come from the same measure.
class InconsistentInputs : public Error {
 public:
  using Error::Error;
};

/// The measure is the point mass at the origin (lambda_1 = 0).
class DegenerateMeasure : public Error {
 public:
  using Error::Error;
};

/// Requested family or configuration is not implemented.
class Unsupported : public Error {
 public:
  using Error::Error;
};

}  // namespace momspec
