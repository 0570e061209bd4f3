#pragma once

#include <stdexcept>
#include <string>

namespace spalu {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BoundsError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class GeometryError : public Error {
 public:
  using Error::Error;
};

/// A pivot block turned out exactly singular. `level` and `segment` are -1
/// when the block was factored outside of a dissection context.
class SingularBlockError : public Error {
 public:
  SingularBlockError(const std::string& what, int level = -1, long segment = -1)
      : Error(what + (level >= 0 || segment >= 0
                          ? " (level " + std::to_string(level) + ", segment " +
                                std::to_string(segment) + ")"
                          : std::string())),
        level_(level),
        segment_(segment) {}

  int level() const { return level_; }
  long segment() const { return segment_; }

 private:
  int level_;
  long segment_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& file, long line, const std::string& what)
      : Error(file + ":" + std::to_string(line) + ": " + what), line_(line) {}

  long line() const { return line_; }

 private:
  long line_;
};

/// Raised when a separator walk cannot leave its center vertex.
class DegenerateSeparatorError : public Error {
 public:
  using Error::Error;
};

}  // namespace spalu
