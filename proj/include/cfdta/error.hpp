#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cfdta {

// Coarse failure classes. The CLI maps them to distinct exit codes
// (config -> 2, data -> 3, runtime -> 4).
enum class ErrorCategory { config, data, runtime };

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& what)
      : Error(ErrorCategory::config, what) {}
};

struct DataError : Error {
  explicit DataError(const std::string& what)
      : Error(ErrorCategory::data, what) {}
};

struct RuntimeError : Error {
  explicit RuntimeError(const std::string& what)
      : Error(ErrorCategory::runtime, what) {}
};

// Rejected input with the byte offset of the offending token.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(ErrorCategory::data,
              what + " (byte " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace cfdta
