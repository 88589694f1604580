#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "rradam/common.hpp"
#include "rradam/landscapes.hpp"
#include "rradam/rng.hpp"

namespace rradam {

/// Iterates beyond this sup-norm are reported as Diverged.
inline constexpr double kDivergenceGuard = 1e100;

enum class Schedule { Diminishing, Constant };
enum class InitMode { PaperTheory, ZeroState };

std::string_view to_string(Schedule s);
std::string_view to_string(InitMode m);

/// Hyperparameters of randomly reshuffled Adam. There is no bias correction.
struct AdamParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eta1 = 0.1;
  double xi = 1e-8;
  Schedule schedule = Schedule::Diminishing;
  std::size_t epochs = 100;
  /// Unset means PaperTheory when lemma_checks is on, ZeroState otherwise.
  std::optional<InitMode> init_mode;
  bool lemma_checks = false;
  std::uint64_t seed = 0;
  std::uint64_t run_id = 0;
  /// Component whose gradient seeds the momentum under PaperTheory init.
  std::size_t init_component = 0;

  InitMode resolved_init() const noexcept;
  /// eta_k for epoch k >= 1.
  double step_size(std::size_t k) const noexcept;
  /// Throws DomainError for out-of-range hyperparameters.
  void validate() const;
};

bool operator==(const AdamParams& a, const AdamParams& b);

/// State of the recursion at (epoch k, inner index i).
struct AdamState {
  Vec w;
  Vec m;
  Vec nu;
  /// w_{k,-1}: the iterate before the last update of the previous epoch
  /// (equal to w_{1,0} in the first epoch).
  Vec w_prev;
  std::size_t k = 1;
  std::size_t i = 0;
  std::vector<std::size_t> tau;
  SplitMix64 rng;
};

struct TerminationStatus {
  enum class Kind { Completed, Diverged, NonFinite };
  Kind kind = Kind::Completed;
  /// Global index of the step that tripped the guard.
  std::size_t step = 0;

  bool completed() const noexcept { return kind == Kind::Completed; }
  friend bool operator==(const TerminationStatus&, const TerminationStatus&) = default;
};

std::string_view to_string(TerminationStatus::Kind kind);

/// One inner step of a recorded run. Spans point into the owning Trajectory.
struct StepRecord {
  std::size_t k;
  std::size_t i;
  std::size_t tau;
  double eta;
  std::span<const double> w;      // w_{k,i} before the update
  std::span<const double> grad;   // g_{k,i}
  std::span<const double> m;      // m_{k,i}
  std::span<const double> nu;     // nu_{k,i}
  std::span<const double> delta;  // w_{k,i+1} - w_{k,i}
  double grad_norm_epoch_start;   // ||grad f(w_{k,0})||
  double f_value;                 // f(w_{k,i})

  double update_inf_norm() const noexcept { return norm_inf(delta); }
};

/// State at the start of epoch k (before the shuffle).
struct EpochSnapshot {
  std::size_t k;
  Vec w;       // w_{k,0}
  Vec w_prev;  // w_{k,-1}
  Vec m;       // m_{k,-1}
  Vec nu;      // nu_{k,-1}
  double grad_norm;  // ||grad f(w_{k,0})||
  double f_value;
};

enum class OptimizerKind { RRAdam, GradientDescent, ClippedGradientDescent };

/// Full record of one run: every inner step plus a snapshot per epoch
/// boundary. For GD a step is an epoch with n = 1.
class Trajectory {
 public:
  Trajectory() = default;
  Trajectory(OptimizerKind kind, std::size_t n, std::size_t d);

  OptimizerKind optimizer() const noexcept { return kind_; }
  std::size_t n() const noexcept { return n_; }
  std::size_t d() const noexcept { return d_; }
  std::size_t steps() const noexcept { return k_.size(); }
  StepRecord step(std::size_t s) const;

  /// Snapshots of epochs 1..T that were started.
  const std::vector<EpochSnapshot>& epochs() const noexcept { return epochs_; }
  /// The boundary after the last epoch that finished (w_{T+1,0}); absent if
  /// no epoch completed.
  const std::optional<EpochSnapshot>& terminal() const noexcept { return terminal_; }
  /// Last iterate computed, including one that tripped the guard.
  const Vec& final_w() const noexcept { return final_w_; }
  const TerminationStatus& status() const noexcept { return status_; }

  /// Present for RR-Adam runs.
  const std::optional<AdamParams>& adam_params() const noexcept { return adam_params_; }
  double eta1() const noexcept { return eta1_; }

  // Recording interface used by the optimizers.
  void push_step(std::size_t k, std::size_t i, std::size_t tau, double eta, std::span<const double> w,
                 std::span<const double> grad, std::span<const double> m, std::span<const double> nu,
                 std::span<const double> delta, double grad_norm_epoch_start, double f_value);
  void push_epoch(EpochSnapshot snap) { epochs_.push_back(std::move(snap)); }
  void set_terminal(EpochSnapshot snap) { terminal_ = std::move(snap); }
  void set_final_w(Vec w) { final_w_ = std::move(w); }
  void set_status(TerminationStatus s) noexcept { status_ = s; }
  void set_adam_params(const AdamParams& p) { adam_params_ = p; eta1_ = p.eta1; }
  void set_eta1(double eta1) noexcept { eta1_ = eta1; }

  friend bool operator==(const Trajectory&, const Trajectory&);

 private:
  OptimizerKind kind_ = OptimizerKind::RRAdam;
  std::size_t n_ = 0;
  std::size_t d_ = 0;
  std::vector<std::size_t> k_, i_, tau_;
  std::vector<double> eta_, grad_norm_, f_;
  std::vector<double> w_, grad_, m_, nu_, delta_;
  std::vector<EpochSnapshot> epochs_;
  std::optional<EpochSnapshot> terminal_;
  Vec final_w_;
  TerminationStatus status_;
  std::optional<AdamParams> adam_params_;
  double eta1_ = 0.0;
};

bool operator==(const EpochSnapshot& a, const EpochSnapshot& b);

/// Initial state (k = 1, i = 0). PaperTheory seeds m with the gradient of
/// component `init_component` at w0 and nu with the componentwise max of
/// squared partials over all components; ZeroState uses m = nu = 0.
AdamState adam_init(const FiniteSumObjective& obj, std::span<const double> w0, const AdamParams& params);

/// Runs one epoch: shuffle, then n updates. Appends records to `traj` when
/// given. Returns the termination status; on Diverged/NonFinite the epoch is
/// abandoned and the state holds the offending iterate.
TerminationStatus adam_epoch(AdamState& state, const FiniteSumObjective& obj, const AdamParams& params,
                             Trajectory* traj = nullptr);

Trajectory adam_run(const FiniteSumObjective& obj, std::span<const double> w0, const AdamParams& params);

/// w_{k+1} = w_k - (eta1 / sqrt(k)) grad f(w_k), k = 1..steps.
Trajectory gd_run(const FiniteSumObjective& obj, std::span<const double> w0, double eta1, std::size_t steps);

/// gd_run with the gradient rescaled to norm at most clip_threshold.
Trajectory clipped_gd_run(const FiniteSumObjective& obj, std::span<const double> w0, double eta1,
                          double clip_threshold, std::size_t steps);

/// u_k = (w_{k,0} - beta1 w_{k,-1}) / (1 - beta1) for every recorded epoch
/// boundary, the terminal one included.
std::vector<Vec> aux_sequence(const Trajectory& traj, double beta1);

}  // namespace rradam
