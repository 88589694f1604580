#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rradam {

using Vec = std::vector<double>;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input outside an operation's domain (bad index, non-finite point, bad hyperparameter).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A named inequality that must hold for a construction but does not.
class ConstraintViolation : public Error {
 public:
  ConstraintViolation(std::string constraint, double lhs, double rhs);

  const std::string& constraint() const noexcept { return constraint_; }
  double lhs() const noexcept { return lhs_; }
  double rhs() const noexcept { return rhs_; }

 private:
  std::string constraint_;
  double lhs_;
  double rhs_;
};

/// Malformed or inconsistent experiment / objective configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

enum class Exec { Serial, OpenMP };

double norm2(std::span<const double> v);
double norm_inf(std::span<const double> v);
bool all_finite(std::span<const double> v);

/// Shortest round-trip decimal for a double ("inf", "-inf", "nan" otherwise), used by every CSV writer.
std::string format_double(double x);

}  // namespace rradam
