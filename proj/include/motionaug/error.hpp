#pragma once

#include <stdexcept>
#include <string>

namespace motionaug {

/// Bad argument to a pure operation (negative sigma, short signal, ...).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Experiment configuration is unusable. Maps to CLI exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input file violates its format. Maps to CLI exit code 2.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Lookup of a key that is not present. Maps to CLI exit code 2.
class NotFound : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// The SVM solver hit its iteration cap. Maps to CLI exit code 3.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double gap)
      : std::runtime_error(what + " (final KKT gap " + std::to_string(gap) + ")"), gap_(gap) {}

  double gap() const noexcept { return gap_; }

 private:
  double gap_;
};

}  // namespace motionaug
