#ifndef LSDC_ERRORS_HPP
#define LSDC_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace lsdc {

/// Base class for all lsdc errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes disagree or an index is out of bounds.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A value violates a domain constraint (non-finite entry, nonpositive
/// depth, empty input, invalid configuration).
class InvalidValueError : public Error {
 public:
  using Error::Error;
};

/// A matrix that must be inverted is numerically singular.
class SingularMatrixError : public Error {
 public:
  using Error::Error;
};

/// A file could not be opened, read, or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// A file header is malformed or carries the wrong magic.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A file ended before its declared payload was complete.
class TruncatedError : public Error {
 public:
  using Error::Error;
};

}  // namespace lsdc

#endif  // LSDC_ERRORS_HPP
