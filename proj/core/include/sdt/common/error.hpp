#pragma once

#include <stdexcept>
#include <string>

namespace sdt {

// Failure classes map one-to-one onto the CLI exit codes (2, 3, 4).
enum class ErrorCategory { kUsage, kData, kNumerical };

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ErrorCategory::kUsage, what) {}
};

// Malformed input: bad formula text, schema mismatch, unreadable files.
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorCategory::kData, what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(ErrorCategory::kNumerical, what) {}
};

}  // namespace sdt
