#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "rradam/common.hpp"
#include "rradam/construction.hpp"

namespace rradam {

enum class LandscapeKind { ZhangCounterexample, LowerBound, QuadraticSum, Custom };

std::string_view to_string(LandscapeKind kind);
LandscapeKind landscape_kind_from_string(std::string_view name);

/// n = 10, d = 1: f_0(x) = (x-1)^2, f_j(x) = -0.1 (x - 10/9)^2 for 1 <= j <= 9.
struct ZhangParams {};

/// Worst-case landscape for diminishing-step GD: every component is
/// f1(x) + f2(y), with f1 exponential beyond |x| = 1/L1 and f2 a Huber-like
/// ramp of slope epsilon beyond |y| = 1.
struct LowerBoundParams {
  double L0 = 1.0;
  double L1 = 1.0;
  double epsilon = 0.01;
};

/// f_j(w) = a_j / 2 * ||w - c_j||^2.
struct QuadraticSumParams {
  std::vector<double> curvatures;
  std::vector<Vec> centers;
};

/// User-supplied components. `curvature`, when set, returns the exact
/// Hessian spectral norm of the averaged objective.
struct CustomComponents {
  std::function<double(std::size_t, std::span<const double>)> value;
  std::function<void(std::size_t, std::span<const double>, std::span<double>)> grad;
  std::function<double(std::span<const double>)> curvature;
};

using LandscapeParams = std::variant<ZhangParams, LowerBoundParams, QuadraticSumParams, CustomComponents>;

/// Closed forms of the one-dimensional pieces of the LowerBound landscape.
namespace lowerbound {
double f1(double x, double L0, double L1);
double f1_prime(double x, double L0, double L1);
double f1_second(double x, double L0, double L1);
double f2(double y, double epsilon);
double f2_prime(double y, double epsilon);
double f2_second(double y, double epsilon);
inline double f1_min(double L0, double L1) { return L0 / (2.0 * L1 * L1); }
}  // namespace lowerbound

/// f(w) = scale * (1/n) * sum_j f_j(w). Immutable once built; every member
/// function is a pure function of (objective, point) and safe to call
/// concurrently.
class FiniteSumObjective {
 public:
  static FiniteSumObjective zhang_counterexample(double scale = 1.0);
  static FiniteSumObjective lower_bound(const LowerBoundParams& params, std::size_t n = 1,
                                        double scale = 1.0);
  static FiniteSumObjective quadratic_sum(std::vector<double> curvatures, std::vector<Vec> centers,
                                          double scale = 1.0);
  static FiniteSumObjective custom(std::size_t n, std::size_t d, CustomComponents components);

  std::size_t n() const noexcept { return n_; }
  std::size_t d() const noexcept { return d_; }
  LandscapeKind kind() const noexcept { return kind_; }
  double scale() const noexcept { return scale_; }
  const LandscapeParams& params() const noexcept { return *params_; }

  std::optional<double> known_min() const noexcept { return known_min_; }
  std::optional<std::pair<double, double>> known_D0_D1() const noexcept { return known_D0_D1_; }
  std::optional<std::pair<double, double>> known_L0_L1() const noexcept { return known_L0_L1_; }

  /// Same landscape with every component multiplied by c > 0.
  FiniteSumObjective scaled(double c) const;

  double component_value(std::size_t j, std::span<const double> w) const;
  Vec component_grad(std::size_t j, std::span<const double> w) const;
  /// Allocation-free variant for inner loops; out.size() must equal d().
  void component_grad(std::size_t j, std::span<const double> w, std::span<double> out) const;

  double value(std::span<const double> w) const;
  Vec full_grad(std::span<const double> w) const;
  void full_grad(std::span<const double> w, std::span<double> out) const;

  /// Exact Hessian spectral norm of f at w where a closed form is known.
  /// Absent for Custom objectives without a registered curvature callback.
  std::optional<double> analytic_smoothness(std::span<const double> w) const;

 private:
  FiniteSumObjective() = default;

  void check_point(std::span<const double> w) const;
  void check_index(std::size_t j) const;
  void unscaled_component_grad(std::size_t j, std::span<const double> w, std::span<double> out) const;

  std::size_t n_ = 1;
  std::size_t d_ = 1;
  LandscapeKind kind_ = LandscapeKind::Custom;
  double scale_ = 1.0;
  std::shared_ptr<const LandscapeParams> params_;
  std::optional<double> known_min_;
  std::optional<std::pair<double, double>> known_D0_D1_;
  std::optional<std::pair<double, double>> known_L0_L1_;
};

/// The GD lower-bound worst case: objective, starting point and the construction record.
struct LowerBoundSetup {
  FiniteSumObjective objective;
  Vec w0;
  Thm2Construction construction;
};

/// Builds the two-dimensional lower-bound landscape for horizon T. Throws
/// ConstraintViolation when M is too small or f_bar / epsilon <= 6.
LowerBoundSetup make_lowerbound(double L0, double L1, double T, double M, double f_bar);

}  // namespace rradam
