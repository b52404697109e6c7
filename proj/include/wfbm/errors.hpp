#pragma once

#include <stdexcept>
#include <string>

namespace wfbm {

// Argument outside the admissible domain (negative time, a+b >= 1, ...).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// phi(t, t) diverges for b < 1.
class SingularityError : public DomainError {
 public:
  using DomainError::DomainError;
};

// Numerical routine failed to reach the requested tolerance.
class AccuracyError : public std::runtime_error {
 public:
  AccuracyError(const std::string& what, double achieved)
      : std::runtime_error(what + " (achieved " + std::to_string(achieved) + ")"),
        achieved_(achieved) {}
  double achieved() const noexcept { return achieved_; }

 private:
  double achieved_;
};

class FactorizationError : public std::runtime_error {
 public:
  FactorizationError(const std::string& what, double pivot)
      : std::runtime_error(what), pivot_(pivot) {}
  // Most negative pivot seen at the last jitter level.
  double pivot() const noexcept { return pivot_; }

 private:
  double pivot_;
};

class DegenerateSampleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string& key, const std::string& what)
      : std::invalid_argument(key + ": " + what), key_(key) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

}  // namespace wfbm
