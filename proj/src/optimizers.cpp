#include "rradam/optimizers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace rradam {

std::string_view to_string(Schedule s) {
  return s == Schedule::Diminishing ? "Diminishing" : "Constant";
}

std::string_view to_string(InitMode m) {
  return m == InitMode::PaperTheory ? "PaperTheory" : "ZeroState";
}

std::string_view to_string(TerminationStatus::Kind kind) {
  switch (kind) {
    case TerminationStatus::Kind::Completed: return "Completed";
    case TerminationStatus::Kind::Diverged: return "Diverged";
    case TerminationStatus::Kind::NonFinite: return "NonFinite";
  }
  return "Completed";
}

InitMode AdamParams::resolved_init() const noexcept {
  if (init_mode) return *init_mode;
  return lemma_checks ? InitMode::PaperTheory : InitMode::ZeroState;
}

double AdamParams::step_size(std::size_t k) const noexcept {
  if (schedule == Schedule::Constant) return eta1;
  return eta1 / std::sqrt(static_cast<double>(k));
}

void AdamParams::validate() const {
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw DomainError("beta1 must lie in [0, 1)");
  if (!(beta2 > 0.0 && beta2 < 1.0)) throw DomainError("beta2 must lie in (0, 1)");
  if (!(eta1 > 0.0) || !std::isfinite(eta1)) throw DomainError("eta1 must be positive and finite");
  if (!(xi >= 0.0) || !std::isfinite(xi)) throw DomainError("xi must be nonnegative and finite");
  if (lemma_checks && !(beta1 * beta1 < beta2))
    throw DomainError("lemma checks require beta1^2 < beta2");
}

Trajectory::Trajectory(OptimizerKind kind, std::size_t n, std::size_t d) : kind_(kind), n_(n), d_(d) {}

StepRecord Trajectory::step(std::size_t s) const {
  if (s >= steps()) throw DomainError("step index out of range");
  const std::size_t off = s * d_;
  auto view = [&](const std::vector<double>& v) { return std::span<const double>(v.data() + off, d_); };
  return StepRecord{k_[s], i_[s], tau_[s], eta_[s], view(w_), view(grad_), view(m_), view(nu_),
                    view(delta_), grad_norm_[s], f_[s]};
}

void Trajectory::push_step(std::size_t k, std::size_t i, std::size_t tau, double eta,
                           std::span<const double> w, std::span<const double> grad,
                           std::span<const double> m, std::span<const double> nu,
                           std::span<const double> delta, double grad_norm_epoch_start, double f_value) {
  k_.push_back(k);
  i_.push_back(i);
  tau_.push_back(tau);
  eta_.push_back(eta);
  grad_norm_.push_back(grad_norm_epoch_start);
  f_.push_back(f_value);
  w_.insert(w_.end(), w.begin(), w.end());
  grad_.insert(grad_.end(), grad.begin(), grad.end());
  m_.insert(m_.end(), m.begin(), m.end());
  nu_.insert(nu_.end(), nu.begin(), nu.end());
  delta_.insert(delta_.end(), delta.begin(), delta.end());
}

bool operator==(const EpochSnapshot& a, const EpochSnapshot& b) {
  return a.k == b.k && a.w == b.w && a.w_prev == b.w_prev && a.m == b.m && a.nu == b.nu &&
         a.grad_norm == b.grad_norm && a.f_value == b.f_value;
}

bool operator==(const AdamParams& a, const AdamParams& b) {
  return a.beta1 == b.beta1 && a.beta2 == b.beta2 && a.eta1 == b.eta1 && a.xi == b.xi &&
         a.schedule == b.schedule && a.epochs == b.epochs && a.init_mode == b.init_mode &&
         a.lemma_checks == b.lemma_checks && a.seed == b.seed && a.run_id == b.run_id &&
         a.init_component == b.init_component;
}

bool operator==(const Trajectory& a, const Trajectory& b) {
  return a.kind_ == b.kind_ && a.n_ == b.n_ && a.d_ == b.d_ && a.k_ == b.k_ && a.i_ == b.i_ &&
         a.tau_ == b.tau_ && a.eta_ == b.eta_ && a.grad_norm_ == b.grad_norm_ && a.f_ == b.f_ &&
         a.w_ == b.w_ && a.grad_ == b.grad_ && a.m_ == b.m_ && a.nu_ == b.nu_ && a.delta_ == b.delta_ &&
         a.epochs_ == b.epochs_ && a.terminal_ == b.terminal_ && a.final_w_ == b.final_w_ &&
         a.status_ == b.status_ && a.adam_params_ == b.adam_params_ && a.eta1_ == b.eta1_;
}

namespace {

EpochSnapshot snapshot(const FiniteSumObjective& obj, std::size_t k, const Vec& w, const Vec& w_prev,
                       const Vec& m, const Vec& nu) {
  return EpochSnapshot{k, w, w_prev, m, nu, norm2(obj.full_grad(w)), obj.value(w)};
}

TerminationStatus::Kind classify(std::span<const double> w, std::span<const double> m,
                                 std::span<const double> nu) {
  if (!all_finite(w) || !all_finite(m) || !all_finite(nu)) return TerminationStatus::Kind::NonFinite;
  if (norm_inf(w) > kDivergenceGuard) return TerminationStatus::Kind::Diverged;
  return TerminationStatus::Kind::Completed;
}

bool is_permutation_of_range(const std::vector<std::size_t>& tau) {
  std::vector<bool> seen(tau.size(), false);
  for (std::size_t t : tau) {
    if (t >= tau.size() || seen[t]) return false;
    seen[t] = true;
  }
  return true;
}

}  // namespace

AdamState adam_init(const FiniteSumObjective& obj, std::span<const double> w0, const AdamParams& params) {
  params.validate();
  if (w0.size() != obj.d()) throw DomainError("w0 has wrong dimension");
  if (!all_finite(w0)) throw DomainError("w0 must be finite");

  const std::size_t d = obj.d();
  AdamState s;
  s.w.assign(w0.begin(), w0.end());
  s.w_prev = s.w;
  s.m.assign(d, 0.0);
  s.nu.assign(d, 0.0);
  s.k = 1;
  s.i = 0;
  s.tau.resize(obj.n());
  std::iota(s.tau.begin(), s.tau.end(), std::size_t{0});
  s.rng = SplitMix64::stream(params.seed, params.run_id);

  if (params.resolved_init() == InitMode::PaperTheory) {
    if (params.init_component >= obj.n()) throw DomainError("init_component out of range");
    s.m = obj.component_grad(params.init_component, w0);
    Vec g(d);
    for (std::size_t j = 0; j < obj.n(); ++j) {
      obj.component_grad(j, w0, g);
      for (std::size_t l = 0; l < d; ++l) s.nu[l] = std::max(s.nu[l], g[l] * g[l]);
    }
  }
  return s;
}

TerminationStatus adam_epoch(AdamState& state, const FiniteSumObjective& obj, const AdamParams& params,
                             Trajectory* traj) {
  const std::size_t n = obj.n();
  const std::size_t d = obj.d();
  if (state.w.size() != d || state.m.size() != d || state.nu.size() != d || state.tau.size() != n)
    throw DomainError("state does not match objective dimensions");

  const std::size_t k = state.k;
  const double eta = params.step_size(k);
  double grad_norm_start = 0.0;
  if (traj) {
    EpochSnapshot snap = snapshot(obj, k, state.w, state.w_prev, state.m, state.nu);
    grad_norm_start = snap.grad_norm;
    traj->push_epoch(std::move(snap));
  }

  std::iota(state.tau.begin(), state.tau.end(), std::size_t{0});
  state.rng.shuffle(state.tau);
  if (!is_permutation_of_range(state.tau)) throw Error("shuffle produced an invalid permutation");

  const double b1 = params.beta1;
  const double b2 = params.beta2;
  Vec g(d), delta(d);
  for (std::size_t i = 0; i < n; ++i) {
    state.i = i;
    const std::size_t j = state.tau[i];
    obj.component_grad(j, state.w, g);
    for (std::size_t l = 0; l < d; ++l) {
      state.nu[l] = b2 * state.nu[l] + (1.0 - b2) * g[l] * g[l];
      state.m[l] = b1 * state.m[l] + (1.0 - b1) * g[l];
      const double denom = std::sqrt(state.nu[l]) + params.xi;
      // 0/0 only arises with zero momentum; no movement then
      delta[l] = state.m[l] == 0.0 ? 0.0 : -eta * state.m[l] / denom;
    }
    if (traj) {
      const double f = all_finite(g) ? obj.value(state.w) : HUGE_VAL;
      traj->push_step(k, i, j, eta, state.w, g, state.m, state.nu, delta, grad_norm_start, f);
    }
    state.w_prev = state.w;
    for (std::size_t l = 0; l < d; ++l) state.w[l] += delta[l];

    const auto kind = classify(state.w, state.m, state.nu);
    if (kind != TerminationStatus::Kind::Completed) {
      if (traj) traj->set_final_w(state.w);
      return TerminationStatus{kind, (k - 1) * n + i};
    }
  }
  state.k = k + 1;
  state.i = 0;
  return TerminationStatus{};
}

Trajectory adam_run(const FiniteSumObjective& obj, std::span<const double> w0, const AdamParams& params) {
  AdamState state = adam_init(obj, w0, params);
  Trajectory traj(OptimizerKind::RRAdam, obj.n(), obj.d());
  traj.set_adam_params(params);
  for (std::size_t e = 0; e < params.epochs; ++e) {
    const TerminationStatus st = adam_epoch(state, obj, params, &traj);
    if (!st.completed()) {
      traj.set_status(st);
      return traj;
    }
  }
  traj.set_final_w(state.w);
  if (params.epochs > 0)
    traj.set_terminal(snapshot(obj, state.k, state.w, state.w_prev, state.m, state.nu));
  return traj;
}

namespace {

Trajectory descend(const FiniteSumObjective& obj, std::span<const double> w0, double eta1,
                   std::optional<double> clip, std::size_t steps) {
  if (!(eta1 > 0.0) || !std::isfinite(eta1)) throw DomainError("eta1 must be positive and finite");
  if (steps == 0) throw DomainError("GD needs at least one step");
  if (clip && !(*clip > 0.0)) throw DomainError("clip threshold must be positive");
  if (w0.size() != obj.d() || !all_finite(w0)) throw DomainError("w0 must be finite with dimension d");

  const std::size_t d = obj.d();
  Trajectory traj(clip ? OptimizerKind::ClippedGradientDescent : OptimizerKind::GradientDescent, 1, d);
  traj.set_eta1(eta1);
  Vec w(w0.begin(), w0.end()), w_prev = w, g(d), step_dir(d), delta(d), zeros(d, 0.0);

  for (std::size_t k = 1; k <= steps; ++k) {
    obj.full_grad(w, g);
    const double gnorm = norm2(g);
    const double f = all_finite(g) ? obj.value(w) : HUGE_VAL;
    traj.push_epoch(EpochSnapshot{k, w, w_prev, zeros, zeros, gnorm, f});

    double factor = 1.0;
    if (clip && gnorm > *clip) factor = *clip / gnorm;
    const double eta = eta1 / std::sqrt(static_cast<double>(k));
    for (std::size_t l = 0; l < d; ++l) {
      step_dir[l] = g[l] * factor;
      delta[l] = -eta * step_dir[l];
    }
    traj.push_step(k, 0, 0, eta, w, g, step_dir, zeros, delta, gnorm, f);

    w_prev = w;
    for (std::size_t l = 0; l < d; ++l) w[l] += delta[l];
    const auto kind = classify(w, zeros, zeros);
    if (kind != TerminationStatus::Kind::Completed) {
      traj.set_final_w(w);
      traj.set_status(TerminationStatus{kind, k - 1});
      return traj;
    }
  }
  obj.full_grad(w, g);
  traj.set_terminal(EpochSnapshot{steps + 1, w, w_prev, zeros, zeros, norm2(g), obj.value(w)});
  traj.set_final_w(w);
  return traj;
}

}  // namespace

Trajectory gd_run(const FiniteSumObjective& obj, std::span<const double> w0, double eta1, std::size_t steps) {
  return descend(obj, w0, eta1, std::nullopt, steps);
}

Trajectory clipped_gd_run(const FiniteSumObjective& obj, std::span<const double> w0, double eta1,
                          double clip_threshold, std::size_t steps) {
  return descend(obj, w0, eta1, clip_threshold, steps);
}

std::vector<Vec> aux_sequence(const Trajectory& traj, double beta1) {
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw DomainError("aux_sequence needs beta1 in [0, 1)");
  std::vector<Vec> u;
  u.reserve(traj.epochs().size() + 1);
  auto push = [&](const EpochSnapshot& s) {
    if (s.k == 1) {
      u.push_back(s.w);  // w_{1,-1} := w_{1,0}
      return;
    }
    Vec uk(s.w.size());
    for (std::size_t l = 0; l < uk.size(); ++l) uk[l] = (s.w[l] - beta1 * s.w_prev[l]) / (1.0 - beta1);
    u.push_back(std::move(uk));
  };
  for (const auto& s : traj.epochs()) push(s);
  if (traj.terminal()) push(*traj.terminal());
  return u;
}

}  // namespace rradam
