#pragma once

#include <stdexcept>
#include <string>

namespace reach {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite or otherwise unusable coordinates.
class InvalidCoordinate : public Error {
 public:
  using Error::Error;
};

/// Bad parameters: zoom out of range, workers < 1, zoom mismatch, ...
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Malformed input files (CSV, RSUM, RTEN, REMB, WKT).
class FormatError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class NotFound : public Error {
 public:
  using Error::Error;
};

/// Value outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Tile offset larger than the reachability buffer.
class OutOfNeighborhood : public Error {
 public:
  using Error::Error;
};

}  // namespace reach
