#pragma once

#include <stdexcept>
#include <string>

namespace calmap {

/// Invalid or inconsistent configuration values.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Problems with dataset files or their contents.
struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// File on disk does not exist or cannot be opened.
struct FileMissingError : DataError {
  explicit FileMissingError(const std::string& msg) : DataError(msg) {}
};

/// File exists but its header or payload is damaged.
struct CorruptFileError : DataError {
  explicit CorruptFileError(const std::string& msg) : DataError(msg) {}
};

/// Stored dimensions do not match what the caller expects.
struct DimensionMismatchError : DataError {
  explicit DimensionMismatchError(const std::string& msg) : DataError(msg) {}
};

/// Array shape disagreement between operands.
struct ShapeError : std::runtime_error {
  explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Training or solving produced non-finite values.
struct DivergenceError : std::runtime_error {
  explicit DivergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ConfigError(msg);
}

inline void require_shape(bool cond, const std::string& msg) {
  if (!cond) throw ShapeError(msg);
}

}  // namespace calmap
