#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "rradam/optimizers.hpp"
#include "rradam/theory.hpp"

using namespace rradam;
using doctest::Approx;

TEST_CASE("C1 at reference points") {
  const ProblemConstants pc{1, 1, 1, 1, 2, 1, 1};
  CHECK(compute_constants(0.9, 0.999, 2, 1, 0.1, pc).c(1) == Approx(53.857142857142857).epsilon(1e-14));
  CHECK(compute_constants(0.0, 0.999, 2, 1, 0.1, pc).c(1) == Approx(1001.0).epsilon(1e-14));
}

TEST_CASE("g(beta2) reference values and the infinite region") {
  // high-precision evaluations of the four-term maximum
  CHECK(g_of_beta2(0.999, 10) == Approx(0.23647958704772172).epsilon(1e-13));
  CHECK(g_of_beta2(0.9999, 10) == Approx(0.033779703786144501).epsilon(1e-12));
  // (1 - beta2) 2n / beta2^n >= 1
  CHECK(std::isinf(g_of_beta2(0.5, 1)));
  CHECK(std::isinf(g_of_beta2(0.9, 10)));
  CHECK(std::isfinite(g_of_beta2(0.99, 10)));
  CHECK_THROWS_AS(g_of_beta2(1.0, 3), DomainError);
  for (double b : {0.7, 0.9, 0.99, 0.9999})
    for (std::size_t n : {1u, 2u, 10u}) {
      const double a = g_of_beta2(b, n), r = oracle::g_beta2(b, static_cast<double>(n));
      if (std::isinf(r))
        CHECK(std::isinf(a));
      else
        CHECK(oracle::rel_err(a, r) <= 1e-14);
    }
}

TEST_CASE("g decreases towards zero as beta2 approaches one") {
  double prev = INFINITY;
  for (double b = 0.95; b < 0.99999; b += 0.001) {
    const double g = g_of_beta2(b, 4);
    CHECK(g <= prev);
    prev = g;
  }
  CHECK(g_of_beta2(1.0 - 1e-9, 4) < 1e-6);
}

TEST_CASE("dual-entry transcription of C1..C13") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 1 + rng() % 12, d = 1 + rng() % 4;
    const double b2 = 0.95 + 0.0499 * u01(rng);
    const double b1 = std::sqrt(b2) * 0.95 * u01(rng);
    const ProblemConstants pc{0.1 + 3 * u01(rng), 2 * u01(rng), 2 * u01(rng), 0.1 + 3 * u01(rng), n, d, 1.0};
    const double eta = 1e-3 + 0.2 * u01(rng);
    const auto tc = compute_constants(b1, b2, n, d, eta, pc);
    const auto ref = oracle::constants({b1, b2, double(n), double(d), eta, pc.L0, pc.L1, pc.D0, pc.D1});
    for (std::size_t i = 0; i < 13; ++i) {
      if (std::isinf(ref[i])) {
        CHECK(std::isinf(tc.C[i]));
        continue;
      }
      INFO("C" << i + 1 << " at grid point " << t);
      CHECK(oracle::rel_err(tc.C[i], ref[i]) <= 1e-12);
    }
  }
}

TEST_CASE("gamma threshold") {
  struct Case {
    std::size_t n, d;
    double b1, expected, x_lo;
  };
  // roots evaluated at 40 digits
  const Case cases[] = {{2, 1, 0.0, 0.99684347611792866, 0.8285},
                        {1, 2, 0.9, 0.99331963826306391, 0.6667},
                        {1, 2, 0.0, 0.91267222701901845, 0.6667},
                        {10, 1, 0.9, 0.9999990717875295, 0.965}};
  for (const auto& c : cases) {
    CHECK(gamma_bracket_lower(c.n) == Approx(c.x_lo).epsilon(1e-12));
    const double g = gamma_threshold(1.0, c.n, c.d, c.b1);
    CHECK(g == Approx(c.expected).epsilon(1e-13));
    const double lhs = gamma_lhs(g, c.n, c.d), rhs = gamma_rhs(1.0, c.n, c.b1);
    CHECK(std::abs(lhs - rhs) <= 1e-10 * rhs);
    const double ref = oracle::gamma_root(double(c.n), double(c.d), 1.0, c.b1, c.x_lo, 1.0 - 1e-12);
    CHECK(g == Approx(ref).epsilon(1e-12));
  }
  CHECK_THROWS_AS(gamma_threshold(0.0, 2, 1, 0.0), DomainError);
}

TEST_CASE("gamma grows with D1") {
  CHECK(gamma_threshold(4.0, 2, 1, 0.0) > gamma_threshold(1.0, 2, 1, 0.0));
  const ProblemConstants pc{1, 0, 1, 1, 2, 1, 0.5};
  const auto tc = compute_constants(0.0, 0.999, 2, 1, 0.1, pc);
  REQUIRE(tc.gamma);
  CHECK(*tc.gamma == Approx(0.99684347611792866).epsilon(1e-13));
}

TEST_CASE("eta1 feasibility") {
  const ProblemConstants pc{1, 0, 1, 1, 2, 1, 0.5};
  const auto tc = compute_constants(0.0, 0.999, 2, 1, 0.1, pc);
  // L1 = 0 and beta1 = 0 remove every term of C11
  CHECK(tc.c(11) == 0.0);
  const auto r = eta1_feasible(tc, 0.1, 1, 0.0, 1.0);
  CHECK(r.ok());
  const ProblemConstants pc2{1, 1, 1, 1, 2, 1, 0.5};
  const auto tc2 = compute_constants(0.0, 0.999, 2, 1, 0.1, pc2);
  const auto r2 = eta1_feasible(tc2, 0.1, 1, 1.0, 1.0);
  CHECK(r2.step_margin == Approx(1.0 - 2.0 * tc2.c(2) * 0.1));
  CHECK(!r2.ok());
}

TEST_CASE("theorem-1 right-hand side") {
  const ProblemConstants pc{1, 0, 0, 1, 2, 1, 0.5};
  const auto tc = compute_constants(0.0, 0.999, 2, 1, 0.1, pc);
  const auto a = theorem1_rhs(100, tc, pc, 0.1, 1e-8, 0.0, 0.999);
  const auto b = theorem1_rhs(1e4, tc, pc, 0.1, 1e-8, 0.0, 0.999);
  CHECK(a.neighborhood == 0.0);
  CHECK(b.main < a.main);
  const double K = 4.0 * (2.0 * std::sqrt(2.0) + 1.0);
  CHECK(a.main == Approx(K * 0.5 / (0.1 * 10.0) + K * tc.c(12) * std::log(100.0) / (0.1 * 10.0) +
                         K * tc.c(13) / (0.1 * 10.0)));
  CHECK_THROWS_AS(theorem1_rhs(0.5, tc, pc, 0.1, 1e-8, 0.0, 0.999), DomainError);
}

TEST_CASE("check_theorem1 on a quadratic finite sum") {
  const auto q = FiniteSumObjective::quadratic_sum({1.0, 1.0}, {Vec{-1.0}, Vec{1.0}});
  const ProblemConstants pc{1.0, 0.0, 1.0, 1.0, 2, 1, q.value(Vec{3.0}) - *q.known_min()};
  AdamParams p;
  p.beta1 = 0.0;
  p.beta2 = 0.999;
  p.eta1 = 0.1;
  p.epochs = 200;
  const auto t = adam_run(q, Vec{3.0}, p);
  const auto r = check_theorem1(t, pc, p);
  CHECK(r.verdict != BoundVerdict::Violated);
  CHECK(r.epochs == 200);
  CHECK(to_string(r.verdict) != std::string_view("Violated"));
}
