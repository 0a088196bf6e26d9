#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace fcp {

// Base class for every error raised by the library. The CLI maps each
// subclass to a distinct exit code via exit_code().
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const noexcept { return 10; }
};

class ConfigError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

class InvalidWindowError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 3; }
};

class DomainError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 3; }
};

class StationarityError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 4; }
};

class UnreachableQuantileError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 5; }
};

class DisjointnessError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 6; }
};

class PreconditionError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 7; }
};

// Enumeration budget exceeded. The partial count collected so far is a
// lower bound on the true count.
class BudgetError : public Error {
 public:
  BudgetError(const std::string& what, std::uint64_t lower_bound)
      : Error(what), lower_bound_(lower_bound) {}
  std::uint64_t lower_bound() const noexcept { return lower_bound_; }
  int exit_code() const noexcept override { return 8; }

 private:
  std::uint64_t lower_bound_;
};

// A property that must hold on every draw was violated (e.g. a Claim-2
// failure in the conditioned speed-up check).
class PropertyViolation : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 9; }
};

}  // namespace fcp
