#include "rradam/probes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <tuple>

namespace rradam {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLemmaSlack = 1e-12;

std::size_t grid_size(double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("alpha must lie in (0, 1]");
  const double m = std::round(1.0 / alpha);
  if (std::abs(m * alpha - 1.0) > 1e-9) throw DomainError("alpha must be 1/m for a positive integer m");
  return static_cast<std::size_t>(m);
}

double segment_ratio_max(const FiniteSumObjective& obj, std::span<const double> a, std::span<const double> b,
                         std::size_t m, double len) {
  const std::size_t d = obj.d();
  Vec ga = obj.full_grad(a), p(d), gp(d), diff(d);
  double best = 0.0;
  for (std::size_t j = 1; j <= m; ++j) {
    const double gamma = static_cast<double>(j) / static_cast<double>(m);
    for (std::size_t l = 0; l < d; ++l) p[l] = j == m ? b[l] : a[l] + gamma * (b[l] - a[l]);
    obj.full_grad(p, gp);
    for (std::size_t l = 0; l < d; ++l) diff[l] = gp[l] - ga[l];
    best = std::max(best, norm2(diff) / (gamma * len));
  }
  return best;
}

double median(std::span<const double> xs) {
  Vec s(xs.begin(), xs.end());
  std::sort(s.begin(), s.end());
  const std::size_t m = s.size();
  return m % 2 == 1 ? s[m / 2] : 0.5 * (s[m / 2 - 1] + s[m / 2]);
}

struct Candidate {
  double intercept;
  double slope;
};

bool feasible(const Candidate& c, std::span<const double> u, std::span<const double> v) {
  if (!(c.intercept >= 0.0) || !(c.slope >= 0.0) || !std::isfinite(c.intercept) || !std::isfinite(c.slope))
    return false;
  for (std::size_t s = 0; s < u.size(); ++s) {
    const double line = c.slope * u[s] + c.intercept;
    const double tol = 1e-12 * std::max({1.0, std::abs(v[s]), std::abs(line)});
    if (v[s] > line + tol) return false;
  }
  return true;
}

// Smaller objective wins; ties broken on (intercept, slope) so the choice is order independent.
bool better(const Candidate& a, double obj_a, const Candidate& b, double obj_b) {
  return std::tie(obj_a, a.intercept, a.slope) < std::tie(obj_b, b.intercept, b.slope);
}

std::vector<Candidate> axis_candidates(std::span<const double> u, std::span<const double> v) {
  std::vector<Candidate> out;
  double vmax = 0.0;
  for (double x : v) vmax = std::max(vmax, x);
  out.push_back({vmax, 0.0});
  double slope = 0.0;
  bool ok = true;
  for (std::size_t s = 0; s < u.size(); ++s) {
    if (u[s] > 0.0)
      slope = std::max(slope, v[s] / u[s]);
    else if (v[s] > 0.0)
      ok = false;
  }
  if (ok) out.push_back({0.0, slope});
  return out;
}

Candidate through(double u1, double v1, double u2, double v2) {
  const double slope = (v2 - v1) / (u2 - u1);
  return {v1 - slope * u1, slope};
}

Envelope finish(Candidate best, std::span<const double> u, std::span<const double> v) {
  auto worst = [&](const Candidate& c) {
    double w = -kInf;
    for (std::size_t s = 0; s < u.size(); ++s) w = std::max(w, v[s] - (c.slope * u[s] + c.intercept));
    return w;
  };
  double viol = worst(best);
  if (viol > 0.0) {
    best.intercept += viol;
    viol = worst(best);
  }
  return Envelope{best.intercept, best.slope, viol};
}

void check_envelope_input(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw DomainError("envelope fit: u and v differ in length");
  if (u.empty()) throw DomainError("envelope fit: no samples");
  if (!all_finite(u) || !all_finite(v)) throw DomainError("envelope fit: non-finite sample");
}

}  // namespace

SmoothnessEstimate local_smoothness(const FiniteSumObjective& obj, std::span<const double> w_a,
                                    std::span<const double> w_b, double alpha) {
  const std::size_t m = grid_size(alpha);
  if (w_a.size() != obj.d() || w_b.size() != obj.d()) throw DomainError("segment endpoints have wrong dimension");
  Vec seg(obj.d());
  for (std::size_t l = 0; l < seg.size(); ++l) seg[l] = w_b[l] - w_a[l];
  const double len = norm2(seg);
  if (!(len >= kDegenerateSegment)) throw DegenerateSegment("segment shorter than 1e-14");
  return SmoothnessEstimate{0, segment_ratio_max(obj, w_a, w_b, m, len), alpha, len};
}

std::vector<std::optional<SmoothnessEstimate>> smoothness_along(const FiniteSumObjective& obj,
                                                                const Trajectory& traj, double alpha,
                                                                std::size_t stride, Exec exec) {
  const std::size_t m = grid_size(alpha);
  if (stride == 0) throw DomainError("probe stride must be positive");
  const std::size_t steps = traj.steps();
  std::vector<std::optional<SmoothnessEstimate>> out(steps);

  auto probe = [&](std::size_t s) -> std::optional<SmoothnessEstimate> {
    const auto a = traj.step(s).w;
    const std::span<const double> b = s + 1 < steps ? traj.step(s + 1).w : std::span<const double>(traj.final_w());
    if (b.size() != a.size() || !all_finite(a) || !all_finite(b)) return std::nullopt;
    Vec seg(a.size());
    for (std::size_t l = 0; l < seg.size(); ++l) seg[l] = b[l] - a[l];
    const double len = norm2(seg);
    if (!(len >= kDegenerateSegment) || !std::isfinite(len)) return std::nullopt;
    try {
      const double est = segment_ratio_max(obj, a, b, m, len);
      if (!std::isfinite(est)) return std::nullopt;
      return SmoothnessEstimate{s, est, alpha, len};
    } catch (const Error&) {
      return std::nullopt;
    }
  };

  const auto count = static_cast<std::ptrdiff_t>((steps + stride - 1) / stride);
  if (exec == Exec::OpenMP) {
#pragma omp parallel for schedule(dynamic, 64)
    for (std::ptrdiff_t q = 0; q < count; ++q) {
      const auto s = static_cast<std::size_t>(q) * stride;
      out[s] = probe(s);
    }
  } else {
    for (std::ptrdiff_t q = 0; q < count; ++q) {
      const auto s = static_cast<std::size_t>(q) * stride;
      out[s] = probe(s);
    }
  }
  return out;
}

Envelope envelope_fit_reference(std::span<const double> u, std::span<const double> v) {
  check_envelope_input(u, v);
  const double med = median(u);
  std::vector<Candidate> cands = axis_candidates(u, v);
  for (std::size_t a = 0; a < u.size(); ++a)
    for (std::size_t b = a + 1; b < u.size(); ++b)
      if (u[a] != u[b]) cands.push_back(through(u[a], v[a], u[b], v[b]));

  std::optional<Candidate> best;
  double best_obj = kInf;
  for (const auto& c : cands) {
    if (!feasible(c, u, v)) continue;
    const double o = c.intercept + c.slope * med;
    if (!best || better(c, o, *best, best_obj)) {
      best = c;
      best_obj = o;
    }
  }
  // the horizontal candidate is always feasible
  return finish(*best, u, v);
}

Envelope envelope_fit(std::span<const double> u, std::span<const double> v, Exec exec) {
  check_envelope_input(u, v);
  const double med = median(u);

  // Upper convex hull (monotone chain): a line through two samples bounds
  // every sample from above only if the pair is a hull edge.
  std::vector<std::size_t> order(u.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::tie(u[a], v[a]) < std::tie(u[b], v[b]);
  });
  std::vector<std::size_t> hull;
  for (std::size_t idx : order) {
    // keep only the highest v per distinct u
    if (!hull.empty() && u[hull.back()] == u[idx]) hull.pop_back();
    while (hull.size() >= 2) {
      const std::size_t o = hull[hull.size() - 2], a = hull.back();
      const double cross = (u[a] - u[o]) * (v[idx] - v[o]) - (v[a] - v[o]) * (u[idx] - u[o]);
      if (cross >= 0.0)
        hull.pop_back();
      else
        break;
    }
    hull.push_back(idx);
  }

  std::vector<Candidate> cands = axis_candidates(u, v);
  for (std::size_t e = 0; e + 1 < hull.size(); ++e)
    cands.push_back(through(u[hull[e]], v[hull[e]], u[hull[e + 1]], v[hull[e + 1]]));

  std::vector<char> ok(cands.size(), 0);
  const auto nc = static_cast<std::ptrdiff_t>(cands.size());
  if (exec == Exec::OpenMP) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t c = 0; c < nc; ++c) ok[c] = feasible(cands[c], u, v) ? 1 : 0;
  } else {
    for (std::ptrdiff_t c = 0; c < nc; ++c) ok[c] = feasible(cands[c], u, v) ? 1 : 0;
  }

  std::optional<Candidate> best;
  double best_obj = kInf;
  for (std::size_t c = 0; c < cands.size(); ++c) {
    if (!ok[c]) continue;
    const double o = cands[c].intercept + cands[c].slope * med;
    if (!best || better(cands[c], o, *best, best_obj)) {
      best = cands[c];
      best_obj = o;
    }
  }
  return finish(*best, u, v);
}

AffineNoiseFit affine_noise_fit(const FiniteSumObjective& obj, std::span<const Vec> samples, Exec exec) {
  if (samples.size() < 2) throw DomainError("affine noise fit needs at least two samples");
  for (const auto& w : samples)
    if (w.size() != obj.d() || !all_finite(w)) throw DomainError("affine noise fit: bad sample point");

  const std::size_t m = samples.size();
  Vec u(m), v(m);
  auto eval = [&](std::size_t s) {
    const Vec g = obj.full_grad(samples[s]);
    u[s] = norm2(g) * norm2(g);
    double acc = 0.0;
    Vec gi(obj.d());
    for (std::size_t i = 0; i < obj.n(); ++i) {
      obj.component_grad(i, samples[s], gi);
      for (double x : gi) acc += x * x;
    }
    v[s] = acc / static_cast<double>(obj.n());
  };
  const auto count = static_cast<std::ptrdiff_t>(m);
  if (exec == Exec::OpenMP) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t s = 0; s < count; ++s) eval(static_cast<std::size_t>(s));
  } else {
    for (std::ptrdiff_t s = 0; s < count; ++s) eval(static_cast<std::size_t>(s));
  }

  const auto [lo, hi] = std::minmax_element(u.begin(), u.end());
  if (*lo == *hi) throw DomainError("affine noise fit needs two distinct gradient norms");

  const Envelope env = envelope_fit(u, v, exec);
  return AffineNoiseFit{env.intercept, env.slope, env.max_violation, m};
}

L0L1Fit l0l1_fit(std::span<const std::pair<double, double>> pairs) {
  Vec gn, sm;
  for (const auto& [g, s] : pairs) {
    if (std::isfinite(g) && std::isfinite(s) && g > 1e-12 && s > 1e-12) {
      gn.push_back(g);
      sm.push_back(s);
    }
  }
  if (gn.size() < 3) throw DomainError("l0l1 fit needs at least three admissible pairs");

  const std::size_t m = gn.size();
  Vec x(m), y(m);
  for (std::size_t s = 0; s < m; ++s) {
    x[s] = std::log(gn[s]);
    y[s] = std::log(sm[s]);
  }
  const double xbar = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(m);
  const double ybar = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(m);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t s = 0; s < m; ++s) {
    sxx += (x[s] - xbar) * (x[s] - xbar);
    sxy += (x[s] - xbar) * (y[s] - ybar);
    syy += (y[s] - ybar) * (y[s] - ybar);
  }

  L0L1Fit fit;
  fit.used = m;
  if (sxx <= 1e-24 * std::max(1.0, xbar * xbar) * static_cast<double>(m)) {
    fit.flat = true;
    fit.log_log_intercept = ybar;
  } else {
    fit.log_log_slope = sxy / sxx;
    fit.log_log_intercept = ybar - fit.log_log_slope * xbar;
    if (syy > 0.0) {
      double ss_res = 0.0;
      for (std::size_t s = 0; s < m; ++s) {
        const double r = y[s] - (fit.log_log_intercept + fit.log_log_slope * x[s]);
        ss_res += r * r;
      }
      fit.r_squared = std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
    }
  }
  const Envelope env = envelope_fit(gn, sm, Exec::Serial);
  fit.L0_hat = env.intercept;
  fit.L1_hat = env.slope;
  return fit;
}

namespace {

const AdamParams& lemma_params(const Trajectory& traj, const TheoryConstants& tc) {
  if (!traj.adam_params()) throw DomainError("lemma checks need an RR-Adam trajectory");
  const AdamParams& p = *traj.adam_params();
  if (!(p.beta1 * p.beta1 < p.beta2)) throw DomainError("lemma checks need beta1^2 < beta2");
  if (p.resolved_init() != InitMode::PaperTheory)
    throw DomainError("lemma checks need the PaperTheory initialization");
  if (tc.beta1 != p.beta1 || tc.beta2 != p.beta2) throw DomainError("constants computed for different betas");
  return p;
}

void note(LemmaReport& r, std::size_t k, std::size_t i, std::size_t l, double value, double bound) {
  ++r.checks;
  if (bound > 0.0) r.max_ratio = std::max(r.max_ratio, value / bound);
  if (value > bound * (1.0 + kLemmaSlack)) {
    ++r.violation_count;
    if (r.violations.size() < LemmaReport::kMaxListed) r.violations.push_back({k, i, l, value, bound});
  }
}

}  // namespace

LemmaReport check_bounded_update(const Trajectory& traj, const TheoryConstants& tc, double xi) {
  lemma_params(traj, tc);
  const double C1 = tc.c(1);
  LemmaReport r;
  for (std::size_t s = 0; s < traj.steps(); ++s) {
    const StepRecord rec = traj.step(s);
    for (std::size_t l = 0; l < traj.d(); ++l) {
      const double denom = std::sqrt(rec.nu[l]) + xi;
      const double ratio = rec.m[l] == 0.0 ? 0.0 : std::abs(rec.m[l]) / denom;
      r.max_normalized_momentum = std::max(r.max_normalized_momentum, ratio);
      note(r, rec.k, rec.i, l, ratio, C1);
      note(r, rec.k, rec.i, l, std::abs(rec.delta[l]), C1 * rec.eta);
    }
  }
  return r;
}

LemmaReport check_u_gap(const Trajectory& traj, const TheoryConstants& tc, double beta1) {
  const AdamParams& p = lemma_params(traj, tc);
  if (beta1 != p.beta1) throw DomainError("beta1 differs from the trajectory's");
  const std::vector<Vec> u = aux_sequence(traj, beta1);

  std::vector<const EpochSnapshot*> snaps;
  for (const auto& s : traj.epochs()) snaps.push_back(&s);
  if (traj.terminal()) snaps.push_back(&*traj.terminal());

  const double C2 = tc.c(2);
  LemmaReport r;
  for (std::size_t e = 0; e < snaps.size(); ++e) {
    const std::size_t k = snaps[e]->k;
    const double bound = C2 * p.step_size(k);
    for (std::size_t l = 0; l < traj.d(); ++l) {
      note(r, k, 0, l, std::abs(u[e][l] - snaps[e]->w[l]), bound);
      if (e + 1 < snaps.size()) note(r, k, 0, l, std::abs(u[e + 1][l] - u[e][l]), bound);
    }
  }
  return r;
}

namespace {

double metric(const Trajectory& traj, double D1, double denom) {
  if (traj.epochs().empty()) throw DomainError("progress metric needs at least one epoch");
  if (!(D1 > 0.0)) throw DomainError("progress metric needs D1 > 0");
  const double sD1 = std::sqrt(D1);
  double best = kInf;
  for (const auto& s : traj.epochs()) {
    const double first = s.grad_norm / sD1;
    const double second = denom > 0.0 ? s.grad_norm * s.grad_norm / denom : kInf;
    best = std::min({best, first, second});
  }
  return best;
}

}  // namespace

double progress_metric(const Trajectory& traj, double D0, double D1, double xi) {
  return metric(traj, D1, std::sqrt(D0) + xi);
}

double progress_metric_body(const Trajectory& traj, double D0, double D1) {
  return metric(traj, D1, std::sqrt(D0));
}

}  // namespace rradam
