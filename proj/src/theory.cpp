#include "rradam/theory.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

#include <boost/math/tools/roots.hpp>

#include "rradam/probes.hpp"

namespace rradam {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kBracketStep = 1e-4;
constexpr double kBracketUpper = 1.0 - 1e-12;
constexpr std::size_t kMonotoneScan = 1000;

std::string fmt2(const char* pattern, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), pattern, a, b);
  return buf;
}

}  // namespace

NoRoot::NoRoot(double lhs_at_upper, double rhs)
    : Error(fmt2("no beta2 threshold: lhs at upper bracket %.17g exceeds rhs %.17g", lhs_at_upper, rhs)),
      lhs_(lhs_at_upper),
      rhs_(rhs) {}

NonMonotone::NonMonotone(double x, double increase)
    : Error(fmt2("threshold lhs increases near x = %.17g by %.17g", x, increase)), x_(x), increase_(increase) {}

double g_of_beta2(double beta2, std::size_t n) {
  if (!(beta2 > 0.0 && beta2 < 1.0)) throw DomainError("g(beta2) needs 0 < beta2 < 1");
  if (n == 0) throw DomainError("g(beta2) needs n >= 1");
  const double nn = static_cast<double>(n);
  const double b_nm1 = std::pow(beta2, nn - 1.0);
  const double b_n = std::pow(beta2, nn);

  const double t1 = 1.0 / std::sqrt(b_nm1) - 1.0;
  const double t2 = 1.0 - 1.0 / std::sqrt(b_nm1 + 8.0 * nn * (1.0 - b_nm1) / b_n);
  const double t3 = 1.0 - std::sqrt(beta2);
  const double den = 1.0 - (1.0 - beta2) * 2.0 * nn / b_n;
  const double t4 = den > 0.0 ? std::sqrt(beta2 / den) - 1.0 : kInf;
  return std::max({t1, t2, t3, t4});
}

double gamma_lhs(double x, std::size_t n, std::size_t d) {
  const double nn = static_cast<double>(n);
  return std::sqrt(static_cast<double>(d)) * g_of_beta2(x, n) * nn / std::pow(x, nn / 2.0);
}

double gamma_rhs(double D1, std::size_t n, double beta1) {
  const double nn = static_cast<double>(n);
  return 1.0 / (2.0 * (4.0 + kSqrt2) * std::sqrt(D1) * (nn - 1.0 + (1.0 + beta1) / (1.0 - beta1)));
}

double gamma_bracket_lower(std::size_t n) {
  for (int j = 1; j < 10000; ++j) {
    const double x = j * kBracketStep;
    if (std::isfinite(g_of_beta2(x, n))) return x;
  }
  return kBracketUpper;
}

double gamma_threshold(double D1, std::size_t n, std::size_t d, double beta1) {
  if (!(D1 > 0.0) || !std::isfinite(D1)) throw DomainError("gamma threshold needs D1 > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw DomainError("gamma threshold needs beta1 in [0, 1)");
  if (n == 0 || d == 0) throw DomainError("gamma threshold needs n, d >= 1");

  const double rhs = gamma_rhs(D1, n, beta1);
  const double lo = gamma_bracket_lower(n);
  const double hi = kBracketUpper;
  auto lhs = [&](double x) { return gamma_lhs(x, n, d); };

  const double at_hi = lhs(hi);
  if (at_hi > rhs) throw NoRoot(at_hi, rhs);

  double prev = lhs(lo);
  for (std::size_t s = 1; s < kMonotoneScan; ++s) {
    const double x = lo + (hi - lo) * static_cast<double>(s) / static_cast<double>(kMonotoneScan - 1);
    const double cur = lhs(x);
    if (cur - prev > 1e-12 * std::abs(prev)) throw NonMonotone(x, cur - prev);
    prev = cur;
  }

  if (lhs(lo) <= rhs) return lo;  // threshold lies below the scan resolution

  auto f = [&](double x) { return lhs(x) - rhs; };
  std::uintmax_t max_iter = 400;
  const auto [a, b] =
      boost::math::tools::bisect(f, lo, hi, boost::math::tools::eps_tolerance<double>(53), max_iter);
  // the final bracket spans a few ulps where lhs is rounding noise: keep the best double in it
  double best = a, best_res = std::abs(f(a));
  double x = std::nextafter(a, 0.0);
  for (int s = 0; s < 64 && x <= std::nextafter(b, 2.0); ++s, x = std::nextafter(x, 2.0)) {
    const double r = std::abs(f(x));
    if (r < best_res) {
      best = x;
      best_res = r;
    }
  }
  return best;
}

TheoryConstants compute_constants(double beta1, double beta2, std::size_t n, std::size_t d, double eta1,
                                  const ProblemConstants& pc) {
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0))
    throw DomainError("constants need beta1 in [0,1), beta2 in (0,1)");
  if (!(beta1 * beta1 < beta2)) throw DomainError("constants need beta1^2 < beta2");
  if (n == 0 || d == 0) throw DomainError("constants need n, d >= 1");
  if (!(eta1 > 0.0)) throw DomainError("constants need eta1 > 0");
  for (double v : {pc.L0, pc.L1, pc.D0, pc.D1, pc.f_gap})
    if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("problem constants must be finite and nonnegative");

  const double nn = static_cast<double>(n);
  const double dd = static_cast<double>(d);
  const double sd = std::sqrt(dd);
  const double sn = std::sqrt(nn);
  const double L0 = pc.L0, L1 = pc.L1, sD0 = std::sqrt(pc.D0), sD1 = std::sqrt(pc.D1);
  const double sb2 = std::sqrt(beta2);
  const double b2n = std::pow(beta2, nn);
  const double sb2n = std::sqrt(b2n);
  const double g = g_of_beta2(beta2, n);
  const double mom = nn - 1.0 + (1.0 + beta1) / (1.0 - beta1);
  const double root2n_b2n = kSqrt2 * nn / std::pow(beta2, nn / 2.0);
  const double fL0 = nn * L0 + L1 * sn * sD0;  // smoothness L0 of f
  const double ratio = std::sqrt(1.0 - beta2) / (1.0 - sb2);
  // g may be +inf; a term whose other factors vanish stays 0
  auto times_g = [g](double coef) { return coef == 0.0 ? 0.0 : g * coef; };

  TheoryConstants tc;
  tc.beta1 = beta1;
  tc.beta2 = beta2;
  tc.eta1 = eta1;
  tc.n = n;
  tc.d = d;
  tc.g_value = g;
  tc.smooth_L0 = fL0;
  tc.smooth_L1 = L1 * sn * sD1;

  auto& C = tc.C;
  // C1
  C[0] = (1.0 - beta1) * (1.0 - beta1) / (1.0 - beta2) / (1.0 - beta1 * beta1 / beta2) + 1.0;
  const double C1 = C[0];
  // C2
  C[1] = nn * C1 + beta1 / (1.0 - beta1) * C1 * (1.0 + kSqrt2);
  const double C2 = C[1];
  // C3
  C[2] = C1 * (nn * (L0 + L1 * sD0) + 2.0 * kSqrt2 * (L0 + L1 * sD0) * ratio * sb2 / (1.0 - sb2) +
               8.0 * std::sqrt(2.0 * nn) * L0 / (1.0 - b2n));
  const double C3 = C[2];
  // C4
  C[3] = 4.0 * L1 * C1 * sD1 * ratio;
  const double C4 = C[3];
  // C5
  C[4] = nn * nn * (1.0 + nn * sd * C1 * eta1 * L1 * sn * sD1) * (C4 + dd * C4 * sD1 / (1.0 - sb2n));
  // C6
  C[5] = (dd * C3 + C4 * nn * sD1 / (1.0 - sb2n)) * eta1 * eta1;
  // C7
  C[6] = 3.0 * nn * (C4 + dd * C4 / (1.0 - sb2n)) * fL0 * nn * nn * sd * C1 * eta1 * eta1 * eta1 +
         (dd * C3 + C2 * C4 * nn * sD1 / (1.0 - sb2n)) * eta1 * eta1;
  // C8
  C[7] = std::sqrt(2.0 * nn * nn / b2n) * L1 * sD1 * nn * sn +
         times_g(dd * mom * root2n_b2n * L1 * C1 * sD1 * (1.0 + 1.0 / (1.0 - b2n)) *
                 (nn + std::pow(nn, 2.5) * sd * C1 * eta1 * L1 * sD1)) +
         2.0 * beta1 / ((1.0 - beta1) * eta1) * sd * C1;
  // C9
  C[8] = std::sqrt(2.0 * nn * nn / b2n) * dd * (nn * nn * L0 + nn * sn * L1 * sD0) * C1 * eta1 * eta1 +
         times_g(mom * root2n_b2n * (nn + 2.0 * kSqrt2 * beta1 / (1.0 - beta1)) * C1 * (L0 + L1 * sD0) * dd *
                 sd * eta1 * eta1);
  // C10
  C[9] = times_g(3.0 * dd * mom * root2n_b2n * L1 * C1 * sD1 * (1.0 + 1.0 / (1.0 - b2n)) * nn * fL0 * nn * sd *
                 C1 * eta1 * eta1 * eta1) +
         C[8];
  // C11
  C[10] = (0.5 + C2) * C[4] + C[7] + 3.0 * L1 * sn * sD1 * C2 * C2 * dd / 2.0;
  // C12
  C[11] = (0.5 + C2) * C[5] + C[8] + fL0 / 2.0 * 3.0 * C2 * C2 * dd * eta1 * eta1;
  // C13
  C[12] = (0.5 + C2) * C[6] + C[9] + fL0 / 2.0 * 3.0 * C2 * C2 * dd * eta1 * eta1;

  if (pc.D1 > 0.0) {
    try {
      tc.gamma = gamma_threshold(pc.D1, n, d, beta1);
    } catch (const NoRoot&) {
    } catch (const NonMonotone&) {
    }
  }
  return tc;
}

FeasibilityReport eta1_feasible(const TheoryConstants& tc, double eta1, std::size_t d, double L1, double D1) {
  constexpr double kSlack = 1e-14;
  const double sd = std::sqrt(static_cast<double>(d));
  FeasibilityReport r;
  r.step_margin = 1.0 - 2.0 * tc.c(2) * sd * eta1 * L1;
  r.second_order_margin = 1.0 / (4.0 * (2.0 * kSqrt2 + 1.0)) - std::sqrt(D1) * tc.c(11) * eta1;
  r.step_ok = r.step_margin >= -kSlack;
  r.second_order_ok = r.second_order_margin >= -kSlack;
  return r;
}

Theorem1Rhs theorem1_rhs(double T, const TheoryConstants& tc, const ProblemConstants& pc, double eta1,
                         double xi, double beta1, double beta2) {
  if (!(T >= 1.0)) throw DomainError("convergence bound needs T >= 1");
  const double K = 4.0 * (2.0 * kSqrt2 + 1.0);
  const double sD0 = std::sqrt(pc.D0), sD1 = std::sqrt(pc.D1);
  const double sT = std::sqrt(T);
  const double nn = static_cast<double>(pc.n);

  // (sqrt(D0) + xi) / (4 sqrt(D1)) * C11; vanishes with C11
  double noise_c11 = 0.0;
  if (tc.c(11) != 0.0) noise_c11 = sD1 > 0.0 ? (sD0 + xi) / (4.0 * sD1) * tc.c(11) : kInf;

  Theorem1Rhs r;
  r.main = K * pc.f_gap / (eta1 * sT) + K * (tc.c(12) + noise_c11 * eta1 * eta1) * std::log(T) / (eta1 * sT) +
           K * (tc.c(13) + noise_c11) / (eta1 * sT);
  if (pc.D0 == 0.0) {
    r.neighborhood = 0.0;
  } else {
    r.neighborhood = 2.0 * std::sqrt(static_cast<double>(pc.d)) * (2.0 * kSqrt2 + 1.0) * sD0 *
                     g_of_beta2(beta2, pc.n) * (nn - 1.0 + (1.0 + beta1) / (1.0 - beta1)) *
                     std::sqrt(2.0 * nn / std::pow(beta2, nn));
  }
  return r;
}

std::string_view to_string(BoundVerdict v) {
  switch (v) {
    case BoundVerdict::MainBranchHolds: return "MainBranchHolds";
    case BoundVerdict::NeighborhoodBranchHolds: return "NeighborhoodBranchHolds";
    case BoundVerdict::Violated: return "Violated";
  }
  return "Violated";
}

BoundReport check_theorem1(const Trajectory& traj, const ProblemConstants& pc, const AdamParams& params) {
  if (traj.epochs().empty()) throw DomainError("trajectory has no epoch snapshots");
  const TheoryConstants tc = compute_constants(params.beta1, params.beta2, pc.n, pc.d, params.eta1, pc);

  BoundReport r;
  r.epochs = traj.epochs().size();
  const auto rhs = theorem1_rhs(static_cast<double>(r.epochs), tc, pc, params.eta1, params.xi, params.beta1,
                                params.beta2);
  r.main_rhs = rhs.main;
  r.neighborhood_rhs = rhs.neighborhood;
  r.trajectory_lhs = progress_metric(traj, pc.D0, pc.D1, params.xi);
  r.min_grad_norm = kInf;
  for (const auto& s : traj.epochs()) r.min_grad_norm = std::min(r.min_grad_norm, s.grad_norm);

  constexpr double kRel = 1e-9;
  if (r.trajectory_lhs <= r.main_rhs * (1.0 + kRel))
    r.verdict = BoundVerdict::MainBranchHolds;
  else if (r.min_grad_norm <= r.neighborhood_rhs * (1.0 + kRel))
    r.verdict = BoundVerdict::NeighborhoodBranchHolds;
  else
    r.verdict = BoundVerdict::Violated;
  return r;
}

}  // namespace rradam
