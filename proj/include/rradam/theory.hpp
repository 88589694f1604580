#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>

#include "rradam/common.hpp"
#include "rradam/construction.hpp"
#include "rradam/optimizers.hpp"

namespace rradam {

/// No root of the threshold equation inside the scanned bracket.
class NoRoot : public Error {
 public:
  NoRoot(double lhs_at_upper, double rhs);
  double lhs_at_upper() const noexcept { return lhs_; }
  double rhs() const noexcept { return rhs_; }

 private:
  double lhs_;
  double rhs_;
};

/// The threshold-equation left side increases somewhere on the bracket.
class NonMonotone : public Error {
 public:
  NonMonotone(double x, double increase);
  double where() const noexcept { return x_; }
  double increase() const noexcept { return increase_; }

 private:
  double x_;
  double increase_;
};

/// Smoothness (L0, L1) and affine-noise (D0, D1) constants of a finite sum.
struct ProblemConstants {
  double L0 = 0.0;
  double L1 = 0.0;
  double D0 = 0.0;
  double D1 = 0.0;
  std::size_t n = 1;
  std::size_t d = 1;
  /// f(w_{1,0}) - min f
  double f_gap = 0.0;
};

struct TheoryConstants {
  std::array<double, 13> C{};
  double g_value = 0.0;
  /// beta2 threshold; absent when it could not be located.
  std::optional<double> gamma;
  /// (L0, L1) of the averaged objective: (n L0 + L1 sqrt(n D0), L1 sqrt(n D1)).
  double smooth_L0 = 0.0;
  double smooth_L1 = 0.0;

  double beta1 = 0.0;
  double beta2 = 0.0;
  double eta1 = 0.0;
  std::size_t n = 1;
  std::size_t d = 1;

  /// One-based accessor matching the constant's index.
  double c(std::size_t i) const { return C.at(i - 1); }
};

/// max of the four drift factors; +infinity when (1 - beta2) 2n / beta2^n >= 1.
double g_of_beta2(double beta2, std::size_t n);

/// Left side sqrt(d) g(x) n / x^{n/2} of the threshold equation.
double gamma_lhs(double x, std::size_t n, std::size_t d);
/// Right side 1 / (2 (4 + sqrt2) sqrt(D1) (n - 1 + (1 + beta1)/(1 - beta1))).
double gamma_rhs(double D1, std::size_t n, double beta1);

/// Lower end of the bisection bracket: smallest x = j * 1e-4 with finite g.
double gamma_bracket_lower(std::size_t n);

/// beta2 threshold: root of gamma_lhs = gamma_rhs on (x_lo, 1 - 1e-12).
/// Throws NoRoot or NonMonotone.
double gamma_threshold(double D1, std::size_t n, std::size_t d, double beta1);

TheoryConstants compute_constants(double beta1, double beta2, std::size_t n, std::size_t d, double eta1,
                                  const ProblemConstants& pc);

struct FeasibilityReport {
  /// 1/L1 - 2 C2 sqrt(d) eta1, scaled by L1 (so zero at equality).
  double step_margin = 0.0;
  /// 1/(4(2 sqrt2 + 1)) - sqrt(D1) C11 eta1.
  double second_order_margin = 0.0;
  bool step_ok = false;
  bool second_order_ok = false;
  bool ok() const noexcept { return step_ok && second_order_ok; }
};

FeasibilityReport eta1_feasible(const TheoryConstants& tc, double eta1, std::size_t d, double L1, double D1);

struct Theorem1Rhs {
  double main = 0.0;
  double neighborhood = 0.0;
};

Theorem1Rhs theorem1_rhs(double T, const TheoryConstants& tc, const ProblemConstants& pc, double eta1,
                         double xi, double beta1, double beta2);

enum class BoundVerdict { MainBranchHolds, NeighborhoodBranchHolds, Violated };
std::string_view to_string(BoundVerdict v);

struct BoundReport {
  double main_rhs = 0.0;
  double neighborhood_rhs = 0.0;
  /// min over epochs of min{||grad f||/sqrt(D1), ||grad f||^2/(sqrt(D0) + xi)}
  double trajectory_lhs = 0.0;
  /// min over epochs of ||grad f(w_{k,0})||
  double min_grad_norm = 0.0;
  std::size_t epochs = 0;
  BoundVerdict verdict = BoundVerdict::Violated;
};

/// Evaluates both branches of the either/or bound at T = number of epochs.
BoundReport check_theorem1(const Trajectory& traj, const ProblemConstants& pc, const AdamParams& params);

}  // namespace rradam
