#pragma once

#include <stdexcept>
#include <string>

namespace mace {

// Precondition on an argument was not met (non-unit vector, shape mismatch, ...).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed input text; carries the 1-based line where parsing stopped.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Dataset content does not fit the model (unknown element, missing labels, ...).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A non-finite value appeared during evaluation.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Run configuration failed schema validation.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mace
