#pragma once

#include <stdexcept>
#include <string>

namespace fsdag {

/// Malformed or inconsistent file contents.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File declares a format version this build cannot read.
class VersionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Configuration rejected by strict parsing or range checks.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fsdag
