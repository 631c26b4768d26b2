#pragma once

#include <stdexcept>
#include <string>

namespace ipdsc {

// Base for every error raised by the library. Input validation failures use
// std::invalid_argument directly; this type is reserved for runtime failures.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a line of textual input cannot be parsed. line() is 1-based,
// or 0 when the failure is not tied to a line.
class parse_error : public error {
 public:
  parse_error(std::size_t line, const std::string& what)
      : error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace ipdsc
