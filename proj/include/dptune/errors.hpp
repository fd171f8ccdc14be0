#pragma once

#include <stdexcept>
#include <string>

namespace dptune {

/// Invalid or inconsistent run configuration. CLI exit code 2.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Dataset files missing, malformed, or insufficient. CLI exit code 3.
struct DataError : std::runtime_error {
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Search could not produce a usable result. CLI exit code 4.
struct SearchError : std::runtime_error {
  explicit SearchError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace dptune
