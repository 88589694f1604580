#pragma once

#include <cstdint>
#include <string>

namespace rradam {

/// One inequality of the construction, lhs > rhs required.
struct ConstraintCheck {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool ok = false;
};

/// Parameters of the worst-case instance for diminishing-step GD.
struct Thm2Construction {
  double L0 = 0.0;
  double L1 = 0.0;
  double T = 0.0;
  double M = 0.0;
  double f_bar = 0.0;

  double epsilon = 0.0;
  double x0 = 0.0;
  double y0 = 0.0;
  /// Smallest eta1 for which GD provably grows |x| by sqrt(2) every step.
  double eta_star = 0.0;
  /// Iterates with index k < slow_horizon keep ||grad f|| >= epsilon when eta1 < eta_star.
  double slow_horizon_exact = 0.0;
  std::uint64_t slow_horizon = 0;

  ConstraintCheck m_lower_bound;  // M > 2(e^{ln2/(sqrt2-1)-1} - 1/4) L0/L1
  ConstraintCheck m_above_eps;    // M > epsilon
  ConstraintCheck f_bar_ratio;    // f_bar / epsilon > 6
  bool constraints_ok = false;

  /// f(w0) - min f, evaluated directly on the landscape.
  double initial_gap = 0.0;
  /// |initial_gap - f_bar| <= 1e-6 f_bar.
  bool gap_consistent = false;
  bool horizon_below_T = false;
};

/// Evaluates every quantity without enforcing the constraints.
Thm2Construction evaluate_construction(double L0, double L1, double T, double M, double f_bar);

/// As evaluate_construction, but throws ConstraintViolation (first failing
/// constraint, both sides) when the construction is not admissible.
Thm2Construction theorem2_construction(double L0, double L1, double T, double M, double f_bar);

/// The f_bar equal to f(w0) - min f for the given (L0, L1, M): M/L1 - L0/(2 L1^2).
double self_consistent_f_bar(double L0, double L1, double M);

/// 2(e^{ln2/(sqrt2-1)-1} - 1/4), the coefficient of L0/L1 in the lower bound on M.
double m_lower_bound_coefficient();

}  // namespace rradam
