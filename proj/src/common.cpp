#include "rradam/common.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>

namespace rradam {

namespace {

std::string describe(const std::string& constraint, double lhs, double rhs) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "constraint '%s' violated: %.17g vs %.17g", constraint.c_str(),
                lhs, rhs);
  return buf;
}

}  // namespace

ConstraintViolation::ConstraintViolation(std::string constraint, double lhs, double rhs)
    : Error(describe(constraint, lhs, rhs)), constraint_(std::move(constraint)), lhs_(lhs), rhs_(rhs) {}

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double norm_inf(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

std::string format_double(double x) {
  // shortest representation that reads back to the same double
  char buf[40];
  const auto r = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, r.ptr);
}

}  // namespace rradam
