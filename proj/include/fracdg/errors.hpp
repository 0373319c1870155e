#pragma once

#include <stdexcept>
#include <string>

namespace fracdg {

using InvalidArgument = std::invalid_argument;

/// Fractional operator assembly could not reach its tolerance.
class AssemblyFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A quantity that must be nonnegative (or finite) came out otherwise beyond tolerance.
class NumericalConsistencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Requested combination is outside what the implementation supports.
class Unsupported : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A run would exceed its memory or size budget.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or out-of-range run configuration.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::runtime_error("config key '" + key + "': " + what), key_(std::move(key)) {}
  [[nodiscard]] const std::string& key() const { return key_; }

 private:
  std::string key_;
};

}  // namespace fracdg
