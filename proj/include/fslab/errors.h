#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fslab {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor or layer shapes do not compose.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Argument outside the mathematical domain of a function (e.g. a label that
// is not 0/1, a non-positive x1).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Operation called in the wrong order, e.g. backward() before forward().
class StateError : public Error {
 public:
  using Error::Error;
};

// Invalid user-supplied parameter (sizes, ranges, incompatible options).
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Problem parameters violate the constraints needed to build an object.
class ConstructionError : public Error {
 public:
  using Error::Error;
};

// An image that does not contain a single well formed stripe.
class MalformedImageError : public Error {
 public:
  using Error::Error;
};

// Training produced a non-finite loss.
class DivergedError : public Error {
 public:
  DivergedError(std::size_t epoch, const std::string& what)
      : Error(what), epoch_(epoch) {}
  std::size_t epoch() const { return epoch_; }

 private:
  std::size_t epoch_;
};

// Malformed serialized data.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace fslab
