#pragma once

#include <stdexcept>
#include <string>

namespace tlidar {

/// Base of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed numeric input (non-finite coordinates, out-of-range rates, ...).
class InvalidInputError : public Error {
 public:
  using Error::Error;
};

/// A file or directory the caller pointed at does not exist.
class NotFoundError : public Error {
 public:
  using Error::Error;
};

/// On-disk bytes do not match the expected layout.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent configuration: unknown preset, unmapped class, channel mismatch.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// An instance track that cannot be switched in the requested direction.
class NotAugmentableError : public Error {
 public:
  using Error::Error;
};

/// Bad command-line usage (unknown strategy, missing flag).
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace tlidar
