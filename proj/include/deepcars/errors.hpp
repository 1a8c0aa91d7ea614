#pragma once

#include <stdexcept>
#include <string>

namespace deepcars {

// Invalid EnvConfig / hyperparameter bounds.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// API misuse: stepping a finished episode, sampling an empty buffer, bad CLI input.
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Dimension mismatch between parameters, inputs or gradients.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// NaN/inf reached an update.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed persisted file (model, Q-table, CSV, config). Carries the line when known.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace deepcars
