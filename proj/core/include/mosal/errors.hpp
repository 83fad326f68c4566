#pragma once

#include <stdexcept>
#include <string>

namespace mosal {

/// Bad input data or configuration (CLI exit code 1).
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed on-disk content (reported as validation at the CLI).
struct FormatError : ValidationError {
  explicit FormatError(const std::string& msg) : ValidationError(msg) {}
};

/// Filesystem failure: missing file, unreadable path (CLI exit code 2).
struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace mosal
