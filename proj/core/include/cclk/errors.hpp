#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace cclk {

// Base class for every error raised by the library. Each subclass maps to a
// CLI exit code (see tools/cclk.cpp).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

// A documented precondition was violated by the caller.
class ContractError : public Error {
 public:
  using Error::Error;
};

class SingularityError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& message)
      : Error(key.empty() ? message : key + ": " + message), key_(std::move(key)) {}

  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& message)
      : Error(line == 0 ? message : "line " + std::to_string(line) + ": " + message),
        line_(line) {}

  // Zero when the problem is not tied to a line (e.g. a structural JSON error).
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Raised by the discrete conditional-sampling baselines when a conditioning
// outcome has too few members in the batch to build the required pairs.
class InsufficientSamplesError : public Error {
 public:
  explicit InsufficientSamplesError(std::vector<std::size_t> groups);

  // Group ids (indices into the batch's group table) that are singletons.
  const std::vector<std::size_t>& groups() const noexcept { return groups_; }

 private:
  std::vector<std::size_t> groups_;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace cclk
