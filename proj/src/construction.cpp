#include "rradam/construction.hpp"

#include <cmath>
#include <numbers>

#include "rradam/common.hpp"
#include "rradam/landscapes.hpp"

namespace rradam {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;

ConstraintCheck greater(std::string name, double lhs, double rhs) {
  return ConstraintCheck{std::move(name), lhs, rhs, lhs > rhs};
}

}  // namespace

double m_lower_bound_coefficient() {
  return 2.0 * (std::exp(std::numbers::ln2 / (kSqrt2 - 1.0) - 1.0) - 0.25);
}

double self_consistent_f_bar(double L0, double L1, double M) {
  return M / L1 - L0 / (2.0 * L1 * L1);
}

Thm2Construction evaluate_construction(double L0, double L1, double T, double M, double f_bar) {
  for (double v : {L0, L1, T, M, f_bar})
    if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("construction inputs must be positive and finite");

  Thm2Construction c;
  c.L0 = L0;
  c.L1 = L1;
  c.T = T;
  c.M = M;
  c.f_bar = f_bar;

  const double A = L1 * M / 2.0 + L0 / 4.0;
  const double log_term = std::log(L1 * M / (2.0 * L0) + 0.25) + 1.0;
  // B = A / (2 (1 + sqrt2)(log_term)); eta_star equals 1 / (2B) on this landscape
  const double B = A / (2.0 * (1.0 + kSqrt2) * log_term);

  c.epsilon = std::sqrt(B * f_bar / (4.0 * std::sqrt(T)));
  c.x0 = log_term / L1;

  const double gap1 = lowerbound::f1(c.x0, L0, L1) - lowerbound::f1_min(L0, L1);
  c.y0 = gap1 / c.epsilon + 0.5;

  const double ax0 = std::abs(c.x0);
  const double log_eta_star = std::log(L1 * (1.0 + kSqrt2) * ax0 / L0) - (L1 * ax0 - 1.0);
  c.eta_star = std::exp(log_eta_star);

  const double gap2 = lowerbound::f2(c.y0, c.epsilon);  // min f2 = 0
  const double reach = gap2 / c.epsilon - 1.5;
  c.slow_horizon_exact = reach > 0.0 ? B * B * reach * reach / (c.epsilon * c.epsilon) : 0.0;
  c.slow_horizon = static_cast<std::uint64_t>(std::floor(c.slow_horizon_exact));

  c.m_lower_bound = greater("M > 2(e^{ln2/(sqrt2-1)-1} - 1/4) L0/L1", M, m_lower_bound_coefficient() * L0 / L1);
  c.m_above_eps = greater("M > epsilon", M, c.epsilon);
  c.f_bar_ratio = greater("f_bar / epsilon > 6", f_bar / c.epsilon, 6.0);
  c.constraints_ok = c.m_lower_bound.ok && c.m_above_eps.ok && c.f_bar_ratio.ok;

  c.initial_gap = gap1 + gap2;
  c.gap_consistent = std::abs(c.initial_gap - f_bar) <= 1e-6 * f_bar;
  c.horizon_below_T = c.slow_horizon_exact < T;
  return c;
}

Thm2Construction theorem2_construction(double L0, double L1, double T, double M, double f_bar) {
  Thm2Construction c = evaluate_construction(L0, L1, T, M, f_bar);
  for (const ConstraintCheck* check : {&c.m_lower_bound, &c.m_above_eps, &c.f_bar_ratio})
    if (!check->ok) throw ConstraintViolation(check->name, check->lhs, check->rhs);
  return c;
}

}  // namespace rradam
