#include <benchmark/benchmark.h>

#include <random>

#include "rradam/harness.hpp"

using namespace rradam;

namespace {

Exec exec_of(const benchmark::State& s) { return s.range(0) == 0 ? Exec::Serial : Exec::OpenMP; }

void label(benchmark::State& s) { s.SetLabel(s.range(0) == 0 ? "serial" : "openmp"); }

const Trajectory& zhang_trajectory() {
  static const Trajectory t = [] {
    AdamParams p;
    p.epochs = 2000;
    return adam_run(FiniteSumObjective::zhang_counterexample(), Vec{-2.0}, p);
  }();
  return t;
}

void BM_smoothness_along(benchmark::State& s) {
  const auto z = FiniteSumObjective::zhang_counterexample();
  const auto& t = zhang_trajectory();
  for (auto _ : s) benchmark::DoNotOptimize(smoothness_along(z, t, 0.1, 1, exec_of(s)));
  s.SetItemsProcessed(s.iterations() * static_cast<std::int64_t>(t.steps()));
  label(s);
}
BENCHMARK(BM_smoothness_along)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

std::pair<std::vector<double>, std::vector<double>> envelope_samples(std::size_t m) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 10.0), noise(0.0, 1.0);
  std::vector<double> x(m), y(m);
  for (std::size_t s = 0; s < m; ++s) {
    x[s] = u(rng);
    y[s] = 2.0 * x[s] + 3.0 * noise(rng);
  }
  return {x, y};
}

void BM_envelope_hull(benchmark::State& s) {
  const auto [x, y] = envelope_samples(static_cast<std::size_t>(s.range(1)));
  for (auto _ : s) benchmark::DoNotOptimize(envelope_fit(x, y, exec_of(s)));
  label(s);
}
BENCHMARK(BM_envelope_hull)->Args({0, 1000})->Args({1, 1000})->Args({0, 100000})->Args({1, 100000});

void BM_envelope_all_pairs(benchmark::State& s) {
  const auto [x, y] = envelope_samples(static_cast<std::size_t>(s.range(0)));
  for (auto _ : s) benchmark::DoNotOptimize(envelope_fit_reference(x, y));
}
BENCHMARK(BM_envelope_all_pairs)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_affine_noise_fit(benchmark::State& s) {
  const auto z = FiniteSumObjective::zhang_counterexample();
  std::vector<Vec> samples;
  for (int k = 0; k < 10000; ++k) samples.push_back(Vec{-10.0 + 20.0 * k / 9999.0});
  for (auto _ : s) benchmark::DoNotOptimize(affine_noise_fit(z, samples, exec_of(s)));
  label(s);
}
BENCHMARK(BM_affine_noise_fit)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_lemma_sweep(benchmark::State& s) {
  auto c = default_config(ExperimentKind::LemmaSuite);
  c.adam.epochs = 200;
  c.exec = exec_of(s);
  c.keep_trajectories = false;
  for (auto _ : s) benchmark::DoNotOptimize(run_lemma_suite(c));
  label(s);
}
BENCHMARK(BM_lemma_sweep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
