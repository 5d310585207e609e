#pragma once

#include <stdexcept>
#include <string>

namespace mmf {

/// Shape/dimension mismatch between operands. Messages carry both shapes.
class ShapeError : public std::runtime_error {
 public:
  explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed or inconsistent on-disk data (datasets, checkpoints, configs with
/// bad payloads). Messages name the file and, where known, the line.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Non-finite values where finite ones are required (divergence, bad grads).
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

/// User-facing configuration problems (unknown keys, missing fields).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mmf
