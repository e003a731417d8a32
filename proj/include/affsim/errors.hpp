#pragma once

#include <stdexcept>
#include <string>

namespace affsim {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& msg)
      : Error("configuration error [" + field + "]: " + msg), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class SingularInputError : public DomainError {
 public:
  using DomainError::DomainError;
};

class BoundaryError : public DomainError {
 public:
  using DomainError::DomainError;
};

// Carries the best tail bound reachable within the configured caps.
class PrecisionError : public Error {
 public:
  PrecisionError(const std::string& msg, double achievable)
      : Error(msg + " (achievable bound " + std::to_string(achievable) + ")"),
        achievable_(achievable) {}
  double achievable_bound() const noexcept { return achievable_; }

 private:
  double achievable_;
};

class ResourceError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class StepFailureError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class InternalError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class EfficiencyError : public Error {
 public:
  using Error::Error;
};

class DegenerateEstimateError : public Error {
 public:
  using Error::Error;
};

class StatisticsError : public Error {
 public:
  using Error::Error;
};

}  // namespace affsim
