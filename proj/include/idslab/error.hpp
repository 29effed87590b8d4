#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace idslab {

/// Raised for malformed input files; carries the offending line number (1-based).
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class UnknownAttackError : public std::runtime_error {
 public:
  explicit UnknownAttackError(const std::string& name)
      : std::runtime_error("unknown attack name '" + name + "'"), name_(name) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

class ArgumentError : public std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

class DecodeError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A metric is mathematically undefined for the given input (empty matrix, single class, ...).
class UndefinedMetricError : public std::domain_error {
  using std::domain_error::domain_error;
};

/// Illegal call for the current environment state (step before reset / after done).
class StateError : public std::logic_error {
  using std::logic_error::logic_error;
};

class SamplingStarvationError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

class ValidationError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

class DependencyError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace idslab
