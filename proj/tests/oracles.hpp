#pragma once

// Reference implementations used only by the tests. The theory constants are
// a second transcription of the constants display, written independently of
// src/theory.cpp.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "rradam/landscapes.hpp"

namespace oracle {

inline double g_beta2(double b2, double n) {
  const double inf = std::numeric_limits<double>::infinity();
  const double t1 = 1.0 / std::sqrt(std::pow(b2, n - 1.0)) - 1.0;
  const double t2 = 1.0 - 1.0 / std::sqrt(std::pow(b2, n - 1.0) + 8.0 * n * (1.0 - std::pow(b2, n - 1.0)) / std::pow(b2, n));
  const double t3 = 1.0 - std::sqrt(b2);
  const double inner = 1.0 - (1.0 - b2) * 2.0 * n / std::pow(b2, n);
  const double t4 = inner > 0.0 ? std::sqrt(b2 / inner) - 1.0 : inf;
  return std::max({t1, t2, t3, t4});
}

struct Inputs {
  double b1, b2, n, d, eta, L0, L1, D0, D1;
};

inline std::array<double, 13> constants(const Inputs& p) {
  const double b1 = p.b1, b2 = p.b2, n = p.n, d = p.d, eta = p.eta;
  const double L0 = p.L0, L1 = p.L1, sD0 = std::sqrt(p.D0), sD1 = std::sqrt(p.D1);
  const double g = g_beta2(b2, n);
  const double s2 = std::sqrt(2.0);
  const double A = n - 1.0 + (1.0 + b1) / (1.0 - b1);
  const double B = s2 * n / std::pow(b2, n / 2.0);
  const double Lf = n * L0 + L1 * std::sqrt(n) * sD0;
  const double q = 1.0 - std::sqrt(std::pow(b2, n));
  const double r = std::sqrt(1.0 - b2) / (1.0 - std::sqrt(b2));
  // zero factors multiplying an infinite g stay zero
  auto gx = [g](double rest) { return rest == 0.0 ? 0.0 : g * rest; };

  std::array<double, 13> C{};
  C[0] = std::pow(1.0 - b1, 2) / (1.0 - b2) * (1.0 / (1.0 - b1 * b1 / b2)) + 1.0;
  C[1] = n * C[0] + b1 / (1.0 - b1) * C[0] * (1.0 + s2);
  C[2] = C[0] * (n * (L0 + L1 * sD0) + 2.0 * s2 * (L0 + L1 * sD0) * r * (std::sqrt(b2) / (1.0 - std::sqrt(b2))) +
                 8.0 * std::sqrt(2.0 * n) * L0 / (1.0 - std::pow(b2, n)));
  C[3] = 4.0 * L1 * C[0] * sD1 * r;
  C[4] = n * n * (1.0 + n * std::sqrt(d) * C[0] * eta * L1 * std::sqrt(n) * sD1) * (C[3] + d * C[3] * sD1 / q);
  C[5] = (d * C[2] + C[3] * n * sD1 / q) * eta * eta;
  C[6] = 3.0 * n * (C[3] + d * C[3] / q) * Lf * n * n * std::sqrt(d) * C[0] * std::pow(eta, 3) +
         (d * C[2] + C[1] * C[3] * n * sD1 / q) * eta * eta;
  C[7] = std::sqrt(2.0 * n * n / std::pow(b2, n)) * L1 * sD1 * n * std::sqrt(n) +
         gx(d * A * B * L1 * C[0] * sD1 * (1.0 + 1.0 / (1.0 - std::pow(b2, n))) *
            (n + std::pow(n, 2.5) * std::sqrt(d) * C[0] * eta * L1 * sD1)) +
         2.0 * b1 / ((1.0 - b1) * eta) * std::sqrt(d) * C[0];
  C[8] = std::sqrt(2.0 * n * n / std::pow(b2, n)) * d * (n * n * L0 + n * std::sqrt(n) * L1 * sD0) * C[0] * eta * eta +
         gx(A * B * (n + 2.0 * s2 * b1 / (1.0 - b1)) * C[0] * (L0 + L1 * sD0) * d * std::sqrt(d) * eta * eta);
  C[9] = gx(3.0 * d * A * B * L1 * C[0] * sD1 * (1.0 + 1.0 / (1.0 - std::pow(b2, n))) * n * Lf * n * std::sqrt(d) *
            C[0] * std::pow(eta, 3)) +
         C[8];
  C[10] = (0.5 + C[1]) * C[4] + C[7] + 3.0 * L1 * std::sqrt(n) * sD1 * C[1] * C[1] * d / 2.0;
  C[11] = (0.5 + C[1]) * C[5] + C[8] + Lf / 2.0 * 3.0 * C[1] * C[1] * d * eta * eta;
  C[12] = (0.5 + C[1]) * C[6] + C[9] + Lf / 2.0 * 3.0 * C[1] * C[1] * d * eta * eta;
  return C;
}

/// sqrt(d) g(x) n / x^{n/2} - 1 / (2 (4 + sqrt2) sqrt(D1) (n - 1 + (1 + b1)/(1 - b1))).
inline double gamma_residual(double x, double n, double d, double D1, double b1) {
  const double lhs = std::sqrt(d) * g_beta2(x, n) * n / std::pow(x, n / 2.0);
  const double rhs = 1.0 / (2.0 * (4.0 + std::sqrt(2.0)) * std::sqrt(D1) * (n - 1.0 + (1.0 + b1) / (1.0 - b1)));
  return lhs - rhs;
}

/// Root by TOMS 748 on [lo, hi]; the caller supplies a sign-changing bracket.
inline double gamma_root(double n, double d, double D1, double b1, double lo, double hi) {
  auto f = [&](double x) { return gamma_residual(x, n, d, D1, b1); };
  boost::uintmax_t iters = 200;
  const auto r = boost::math::tools::toms748_solve(f, lo, hi, boost::math::tools::eps_tolerance<double>(52), iters);
  return 0.5 * (r.first + r.second);
}

/// Central finite difference of a scalar function along coordinate l.
inline double central_diff(const std::function<double(const std::vector<double>&)>& f, std::vector<double> w,
                           std::size_t l, double h) {
  const double x = w[l];
  w[l] = x + h;
  const double fp = f(w);
  w[l] = x - h;
  const double fm = f(w);
  return (fp - fm) / (2.0 * h);
}

inline double rel_err(double a, double b) {
  if (a == b) return 0.0;
  return std::abs(a - b) / std::max(std::abs(a), std::abs(b));
}

}  // namespace oracle
