#pragma once

#include <stdexcept>
#include <string>

namespace odbguard {

/// Base of every error raised by the library. The category decides the CLI
/// exit status.
class Error : public std::runtime_error {
 public:
  enum class Category { kUsage, kIo, kNumeric };

  Error(Category category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  Category category() const noexcept { return category_; }

 private:
  Category category_;
};

/// Precondition or configuration violation.
class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(Category::kUsage, what) {}
};

/// File could not be opened, read or written.
class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(Category::kIo, what) {}
};

/// Malformed file content. `line` is 1-based, 0 when not applicable.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(Category::kIo, line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Persisted file written under an incompatible schema version.
class VersionMismatch : public Error {
 public:
  explicit VersionMismatch(const std::string& what) : Error(Category::kIo, what) {}
};

/// Numerical failure inside a sampler or solver.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(Category::kNumeric, what) {}
};

}  // namespace odbguard
