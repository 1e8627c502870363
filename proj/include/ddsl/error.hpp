#pragma once

#include <stdexcept>
#include <string>

namespace ddsl {

class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input text (bad tokens, self-loops, negative ids).
class ParseError : public Error {
public:
  explicit ParseError(const std::string& what) : Error(what) {}
  ParseError(const std::string& what, std::size_t line)
      : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const { return line_; }

private:
  std::size_t line_ = 0;
};

// An update batch that contradicts the graph it is applied to.
class ConflictError : public Error {
public:
  explicit ConflictError(const std::string& what) : Error(what) {}
};

// Arguments outside an operation's domain (unknown vertex, invalid cover, ...).
class DomainError : public Error {
public:
  explicit DomainError(const std::string& what) : Error(what) {}
};

// Inputs beyond the supported problem scale.
class ScaleError : public Error {
public:
  explicit ScaleError(const std::string& what) : Error(what) {}
};

}  // namespace ddsl
