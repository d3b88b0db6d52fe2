#pragma once

#include <stdexcept>
#include <string>

namespace fnb {

/// Failure classes surfaced by the library. The C API and the CLI map each
/// class onto a distinct status / exit code.
enum class ErrorKind {
  kShape,
  kFormat,
  kConfig,
  kIo,
  kNumeric,
  kTape,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct ShapeError : Error {
  explicit ShapeError(const std::string& what) : Error(ErrorKind::kShape, what) {}
};
struct FormatError : Error {
  explicit FormatError(const std::string& what) : Error(ErrorKind::kFormat, what) {}
};
struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error(ErrorKind::kConfig, what) {}
};
struct IoError : Error {
  explicit IoError(const std::string& what) : Error(ErrorKind::kIo, what) {}
};
struct NumericError : Error {
  explicit NumericError(const std::string& what) : Error(ErrorKind::kNumeric, what) {}
};
struct TapeError : Error {
  explicit TapeError(const std::string& what) : Error(ErrorKind::kTape, what) {}
};

}  // namespace fnb
