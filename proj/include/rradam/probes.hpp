#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "rradam/common.hpp"
#include "rradam/landscapes.hpp"
#include "rradam/optimizers.hpp"
#include "rradam/theory.hpp"

namespace rradam {

/// Segments shorter than this carry no smoothness information.
inline constexpr double kDegenerateSegment = 1e-14;

class DegenerateSegment : public Error {
 public:
  using Error::Error;
};

struct SmoothnessEstimate {
  std::size_t step = 0;
  double estimate = 0.0;
  double alpha = 0.1;
  double segment_length = 0.0;
};

/// max over gamma in {alpha, 2 alpha, ..., 1} of
/// ||grad f(a + gamma (b - a)) - grad f(a)|| / (gamma ||b - a||).
/// alpha must be 1/m for a positive integer m.
SmoothnessEstimate local_smoothness(const FiniteSumObjective& obj, std::span<const double> w_a,
                                    std::span<const double> w_b, double alpha = 0.1);

/// Estimates along consecutive iterates of a trajectory (segment s runs from
/// step s's iterate to the next one). Every `stride`-th step is probed;
/// degenerate segments and non-finite points yield nullopt.
std::vector<std::optional<SmoothnessEstimate>> smoothness_along(const FiniteSumObjective& obj,
                                                                const Trajectory& traj, double alpha = 0.1,
                                                                std::size_t stride = 1,
                                                                Exec exec = Exec::OpenMP);

/// Line v <= slope * u + intercept with slope, intercept >= 0.
struct Envelope {
  double intercept = 0.0;
  double slope = 0.0;
  double max_violation = 0.0;
};

/// Upper envelope minimizing intercept + slope * median(u) among the support
/// lines through pairs of samples and the two single-point axis candidates.
/// The production path walks the upper convex hull; the serial reference
/// tries every pair. Both return the same envelope.
Envelope envelope_fit(std::span<const double> u, std::span<const double> v, Exec exec = Exec::OpenMP);
Envelope envelope_fit_reference(std::span<const double> u, std::span<const double> v);

struct AffineNoiseFit {
  double D0_hat = 0.0;
  double D1_hat = 0.0;
  double max_violation = 0.0;
  std::size_t sample_count = 0;
};

/// Fits (1/n) sum_i ||grad f_i(w)||^2 <= D1 ||grad f(w)||^2 + D0 over the
/// sample points. Needs at least two distinct ||grad f||^2 values.
AffineNoiseFit affine_noise_fit(const FiniteSumObjective& obj, std::span<const Vec> samples,
                                Exec exec = Exec::OpenMP);

struct L0L1Fit {
  double L0_hat = 0.0;
  double L1_hat = 0.0;
  double log_log_slope = 0.0;
  double log_log_intercept = 0.0;
  double r_squared = 0.0;
  /// No spread in log(grad_norm): slope undefined, reported as 0.
  bool flat = false;
  std::size_t used = 0;
};

/// (grad_norm, smoothness) pairs -> log-log regression and linear envelope.
L0L1Fit l0l1_fit(std::span<const std::pair<double, double>> pairs);

struct LemmaViolation {
  std::size_t k = 0;
  std::size_t i = 0;
  std::size_t coord = 0;
  double value = 0.0;
  double bound = 0.0;
};

struct LemmaReport {
  std::size_t checks = 0;
  std::size_t violation_count = 0;
  /// First violations, at most kMaxListed of them.
  std::vector<LemmaViolation> violations;
  /// Largest observed value / bound.
  double max_ratio = 0.0;
  /// Largest observed |m| / (sqrt(nu) + xi) (bounded-update report only).
  double max_normalized_momentum = 0.0;

  static constexpr std::size_t kMaxListed = 32;
  bool passed() const noexcept { return violation_count == 0; }
};

/// |m_l| / (sqrt(nu_l) + xi) <= C1 and |dw_l| <= C1 eta_k at every recorded step.
LemmaReport check_bounded_update(const Trajectory& traj, const TheoryConstants& tc, double xi);

/// |u_{l,k} - w_{l,k,0}| <= C2 eta_k and |u_{l,k+1} - u_{l,k}| <= C2 eta_k.
LemmaReport check_u_gap(const Trajectory& traj, const TheoryConstants& tc, double beta1);

/// min over epochs of min{||grad f(w_{k,0})|| / sqrt(D1), ||grad f(w_{k,0})||^2 / (sqrt(D0) + xi)};
/// the second term is +infinity when sqrt(D0) + xi = 0.
double progress_metric(const Trajectory& traj, double D0, double D1, double xi);

/// Same with the denominator sqrt(D0) alone.
double progress_metric_body(const Trajectory& traj, double D0, double D1);

}  // namespace rradam
