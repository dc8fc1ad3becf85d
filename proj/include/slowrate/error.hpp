#pragma once

#include <stdexcept>
#include <string>

namespace slowrate {

// Base for every failure the library reports. Each subclass maps to one
// process exit code in the command-line front-end.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An argument lies outside the domain of the operation (bad nu, n, sigma...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

// A configured resource cap (replicates, R*n work, O(n^2) size) was hit.
class BudgetError : public Error {
 public:
  using Error::Error;
};

// Numerical integration ran out of nodes before reaching its tolerance.
class AccuracyError : public Error {
 public:
  AccuracyError(const std::string& what, double estimate, double error_bound)
      : Error(what), estimate_(estimate), error_bound_(error_bound) {}

  double estimate() const noexcept { return estimate_; }
  double error_bound() const noexcept { return error_bound_; }

 private:
  double estimate_;
  double error_bound_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace slowrate
