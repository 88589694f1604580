#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "rradam/optimizers.hpp"

using namespace rradam;
using doctest::Approx;

namespace {

// Straight transcription of the epoch loop, used as the reference.
struct RefRun {
  std::vector<Vec> w_at_epoch_start;
  Vec final_w;
};

RefRun reference_adam(const FiniteSumObjective& obj, Vec w, const AdamParams& p) {
  const std::size_t n = obj.n(), d = obj.d();
  Vec m(d, 0.0), nu(d, 0.0);
  if (p.resolved_init() == InitMode::PaperTheory) {
    m = obj.component_grad(p.init_component, w);
    for (std::size_t j = 0; j < n; ++j) {
      const Vec g = obj.component_grad(j, w);
      for (std::size_t l = 0; l < d; ++l) nu[l] = std::max(nu[l], g[l] * g[l]);
    }
  }
  auto rng = SplitMix64::stream(p.seed, p.run_id);
  RefRun out;
  for (std::size_t k = 1; k <= p.epochs; ++k) {
    out.w_at_epoch_start.push_back(w);
    std::vector<std::size_t> tau(n);
    std::iota(tau.begin(), tau.end(), std::size_t{0});
    rng.shuffle(tau);
    const double eta = p.schedule == Schedule::Diminishing ? p.eta1 / std::sqrt(double(k)) : p.eta1;
    for (std::size_t i = 0; i < n; ++i) {
      const Vec g = obj.component_grad(tau[i], w);
      for (std::size_t l = 0; l < d; ++l) {
        nu[l] = p.beta2 * nu[l] + (1 - p.beta2) * g[l] * g[l];
        m[l] = p.beta1 * m[l] + (1 - p.beta1) * g[l];
      }
      for (std::size_t l = 0; l < d; ++l)
        if (m[l] != 0.0) w[l] -= eta * m[l] / (std::sqrt(nu[l]) + p.xi);
    }
  }
  out.final_w = w;
  return out;
}

AdamParams zhang_params(double b2, std::uint64_t seed, std::size_t epochs) {
  AdamParams p;
  p.beta1 = 0.9;
  p.beta2 = b2;
  p.eta1 = 0.1;
  p.xi = 1e-8;
  p.epochs = epochs;
  p.seed = seed;
  p.run_id = 17;
  return p;
}

}  // namespace

TEST_CASE("one ZeroState step has no bias correction") {
  const auto q = FiniteSumObjective::quadratic_sum({2.0}, {Vec{1.0}});
  AdamParams p;
  p.beta1 = 0.9;
  p.beta2 = 0.999;
  p.eta1 = 0.5;
  p.xi = 0.0;
  p.epochs = 1;
  p.init_mode = InitMode::ZeroState;
  const auto t = adam_run(q, Vec{3.0}, p);
  REQUIRE(t.steps() == 1);
  const auto r = t.step(0);
  // g = 2 (3 - 1) = 4, m = 0.1 * 4, nu = 0.001 * 16
  CHECK(r.grad[0] == 4.0);
  CHECK(r.m[0] == Approx(0.4).epsilon(1e-15));
  CHECK(r.nu[0] == Approx(0.016).epsilon(1e-15));
  CHECK(r.delta[0] == Approx(-0.5 * 0.1 / std::sqrt(0.001)).epsilon(1e-14));
  CHECK(t.final_w()[0] == Approx(3.0 - 0.5 * 0.1 / std::sqrt(0.001)).epsilon(1e-14));
}

TEST_CASE("PaperTheory initialization") {
  const auto z = FiniteSumObjective::zhang_counterexample();
  AdamParams p = zhang_params(0.99, 0, 1);
  p.init_mode = InitMode::PaperTheory;
  const auto s = adam_init(z, Vec{-2.0}, p);
  CHECK(s.m[0] == -6.0);
  // max over components of the squared partials: f0' = -6, fj' = 0.2 * 28/9
  CHECK(s.nu[0] == 36.0);
  CHECK(s.w_prev == s.w);
  AdamParams q = p;
  q.init_mode.reset();
  q.lemma_checks = true;
  CHECK(q.resolved_init() == InitMode::PaperTheory);
  q.lemma_checks = false;
  CHECK(q.resolved_init() == InitMode::ZeroState);
}

TEST_CASE("recorded run matches the reference transcription") {
  const auto z = FiniteSumObjective::zhang_counterexample();
  for (auto mode : {InitMode::ZeroState, InitMode::PaperTheory}) {
    for (auto sched : {Schedule::Diminishing, Schedule::Constant}) {
      AdamParams p = zhang_params(0.99, 4, 50);
      p.init_mode = mode;
      p.schedule = sched;
      const auto t = adam_run(z, Vec{-2.0}, p);
      const auto ref = reference_adam(z, Vec{-2.0}, p);
      REQUIRE(t.epochs().size() == 50);
      for (std::size_t k = 0; k < 50; ++k) CHECK(t.epochs()[k].w == ref.w_at_epoch_start[k]);
      CHECK(t.final_w() == ref.final_w);
      CHECK(t.terminal()->w == ref.final_w);
      CHECK(t.terminal()->k == 51);
    }
  }
}

TEST_CASE("every epoch processes a permutation and records n steps") {
  const auto z = FiniteSumObjective::zhang_counterexample();
  const auto t = adam_run(z, Vec{-2.0}, zhang_params(0.999, 9, 30));
  REQUIRE(t.steps() == 300);
  for (std::size_t k = 0; k < 30; ++k) {
    std::vector<std::size_t> taus;
    for (std::size_t i = 0; i < 10; ++i) {
      const auto r = t.step(k * 10 + i);
      CHECK(r.k == k + 1);
      CHECK(r.i == i);
      taus.push_back(r.tau);
    }
    std::sort(taus.begin(), taus.end());
    for (std::size_t i = 0; i < 10; ++i) CHECK(taus[i] == i);
  }
}

TEST_CASE("determinism and seed dependence") {
  const auto z = FiniteSumObjective::zhang_counterexample();
  const auto a = adam_run(z, Vec{-2.0}, zhang_params(0.99, 1, 40));
  const auto b = adam_run(z, Vec{-2.0}, zhang_params(0.99, 1, 40));
  const auto c = adam_run(z, Vec{-2.0}, zhang_params(0.99, 2, 40));
  CHECK(a == b);
  CHECK(!(a == c));
}

TEST_CASE("epoch snapshot carries w_{k,-1}") {
  const auto z = FiniteSumObjective::zhang_counterexample();
  const auto t = adam_run(z, Vec{-2.0}, zhang_params(0.99, 0, 5));
  CHECK(t.epochs()[0].w_prev == t.epochs()[0].w);
  for (std::size_t k = 1; k < 5; ++k) {
    const auto last = t.step(k * 10 - 1);
    CHECK(t.epochs()[k].w_prev[0] == last.w[0]);
    CHECK(t.epochs()[k].w[0] == last.w[0] + last.delta[0]);
  }
}

TEST_CASE("scale invariance with xi = 0") {
  const auto z = FiniteSumObjective::zhang_counterexample();
  AdamParams p = zhang_params(0.99, 3, 100);
  p.xi = 0.0;
  const auto base = adam_run(z, Vec{-2.0}, p);
  for (double c : {10.0, 0.01}) {
    const auto t = adam_run(z.scaled(c), Vec{-2.0}, p);
    REQUIRE(t.steps() == base.steps());
    double worst = 0.0;
    for (std::size_t s = 0; s < t.steps(); ++s) worst = std::max(worst, oracle::rel_err(t.step(s).w[0], base.step(s).w[0]));
    CHECK(worst <= 1e-9);
  }
}

TEST_CASE("zero epochs") {
  const auto z = FiniteSumObjective::zhang_counterexample();
  const auto t = adam_run(z, Vec{-2.0}, zhang_params(0.99, 0, 0));
  CHECK(t.steps() == 0);
  CHECK(t.epochs().empty());
  CHECK(!t.terminal());
  CHECK(t.final_w() == Vec{-2.0});
  CHECK(t.status().completed());
}

TEST_CASE("parameter validation") {
  AdamParams p;
  p.beta1 = 1.0;
  CHECK_THROWS_AS(p.validate(), DomainError);
  p = {};
  p.beta2 = 1.0;
  CHECK_THROWS_AS(p.validate(), DomainError);
  p = {};
  p.eta1 = 0.0;
  CHECK_THROWS_AS(p.validate(), DomainError);
  p = {};
  p.beta1 = 0.99;
  p.beta2 = 0.9;
  p.lemma_checks = true;
  CHECK_THROWS_AS(p.validate(), DomainError);
  p = {};
  p.eta1 = 0.4;
  CHECK(p.step_size(4) == Approx(0.2));
  p.schedule = Schedule::Constant;
  CHECK(p.step_size(4) == 0.4);
}

TEST_CASE("gradient descent records and guards") {
  const auto q = FiniteSumObjective::quadratic_sum({1.0}, {Vec{0.0}});
  const auto t = gd_run(q, Vec{1.0}, 0.5, 3);
  CHECK(t.epochs().size() == 3);
  // w2 = 1 - 0.5 = 0.5, w3 = 0.5 - 0.5/sqrt2 * 0.5
  CHECK(t.epochs()[1].w[0] == 0.5);
  CHECK(t.epochs()[2].w[0] == Approx(0.5 - 0.25 / std::sqrt(2.0)).epsilon(1e-15));
  CHECK(t.terminal()->k == 4);
  CHECK_THROWS_AS(gd_run(q, Vec{1.0}, 0.5, 0), DomainError);

  // negative curvature with a large step grows geometrically past the guard
  const auto up = FiniteSumObjective::quadratic_sum({-1.0}, {Vec{0.0}});
  const auto d = gd_run(up, Vec{1.0}, 1e3, 1000);
  CHECK(d.status().kind == TerminationStatus::Kind::Diverged);
  CHECK(norm_inf(d.final_w()) > kDivergenceGuard);
  CHECK(d.status().step + 1 == d.steps());

  const auto lb = make_lowerbound(1, 1, 1e4, 100, self_consistent_f_bar(1, 1, 100));
  const auto nf = gd_run(lb.objective, lb.w0, 2.0 * lb.construction.eta_star, 100);
  CHECK(!nf.status().completed());
}

TEST_CASE("clipped gradient descent bounds every update") {
  const auto lb = make_lowerbound(1, 1, 1e4, 100, self_consistent_f_bar(1, 1, 100));
  const auto t = clipped_gd_run(lb.objective, lb.w0, 1.0, 0.5, 200);
  CHECK(t.status().completed());
  for (std::size_t s = 0; s < t.steps(); ++s) CHECK(norm2(t.step(s).delta) <= t.step(s).eta * 0.5 * (1 + 1e-12));
  CHECK_THROWS_AS(clipped_gd_run(lb.objective, lb.w0, 1.0, 0.0, 10), DomainError);
}

TEST_CASE("auxiliary sequence") {
  const auto z = FiniteSumObjective::zhang_counterexample();
  const auto t = adam_run(z, Vec{-2.0}, zhang_params(0.99, 0, 8));
  const auto u0 = aux_sequence(t, 0.0);
  REQUIRE(u0.size() == 9);
  for (std::size_t k = 0; k < 8; ++k) CHECK(u0[k] == t.epochs()[k].w);
  CHECK(u0[8] == t.terminal()->w);
  const auto u = aux_sequence(t, 0.9);
  CHECK(u[0] == t.epochs()[0].w);
  const auto& s = t.epochs()[3];
  CHECK(u[3][0] == Approx((s.w[0] - 0.9 * s.w_prev[0]) / 0.1).epsilon(1e-14));
  CHECK_THROWS_AS(aux_sequence(t, 1.0), DomainError);
}
