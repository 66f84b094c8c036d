#pragma once

#include <stdexcept>
#include <string>

namespace pressem {

// Precondition or geometry violation on an operation's arguments.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Malformed or unsupported input document. `location` is a JSON pointer,
// a byte offset, or a "line N" reference depending on the format.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::string location, const std::string& message)
      : std::runtime_error(location.empty() ? message : location + ": " + message),
        location_(std::move(location)),
        message_(message) {}

  const std::string& location() const noexcept { return location_; }
  const std::string& message() const noexcept { return message_; }

 private:
  std::string location_;
  std::string message_;
};

// Capture data does not support the requested model layout.
class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pressem
