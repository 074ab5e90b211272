#pragma once

#include <stdexcept>
#include <string>

namespace lipreach {

/// Malformed or unreadable input file (bad JSON, missing fields, unknown enum values).
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

/// Shape mismatch: weight chains, vector lengths, matrix products that cannot compose.
class DimensionError : public std::runtime_error {
 public:
  explicit DimensionError(const std::string& what) : std::runtime_error(what) {}
};

/// A number that must be finite is NaN or infinite.
class NonFiniteError : public std::runtime_error {
 public:
  explicit NonFiniteError(const std::string& what) : std::runtime_error(what) {}
};

/// A numeric routine failed to converge or produced an unusable factorization.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace lipreach
