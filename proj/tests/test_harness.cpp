#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "rradam/harness.hpp"

using namespace rradam;
using doctest::Approx;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("rradam_test_" + name);
  fs::remove_all(p);
  return p;
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

ExperimentConfig small_fig3() {
  auto c = default_config(ExperimentKind::Fig3);
  c.adam.epochs = 200;
  c.seeds = {0, 1};
  return c;
}

}  // namespace

TEST_CASE("objective JSON round-trip") {
  const auto z = FiniteSumObjective::zhang_counterexample(2.0);
  const auto lb = FiniteSumObjective::lower_bound({1.5, 0.5, 0.2}, 3);
  const auto q = FiniteSumObjective::quadratic_sum({1.0, 2.0}, {Vec{0.0, 1.0}, Vec{2.0, -1.0}});
  for (const auto* o : {&z, &lb, &q}) {
    const Json j = objective_to_json(*o);
    const auto back = objective_from_json(j);
    CHECK(objective_to_json(back) == j);
    CHECK(back.n() == o->n());
    CHECK(back.d() == o->d());
    CHECK(back.value(Vec(o->d(), 0.3)) == o->value(Vec(o->d(), 0.3)));
  }
  const Json lbj = objective_to_json(lb);
  CHECK(lbj.at("kind") == "LowerBound");
  CHECK(lbj.at("parameters").at("epsilon") == 0.2);

  CustomComponents c;
  c.value = [](std::size_t, std::span<const double>) { return 0.0; };
  c.grad = [](std::size_t, std::span<const double>, std::span<double> out) { out[0] = 0.0; };
  CHECK_THROWS_AS(objective_to_json(FiniteSumObjective::custom(1, 1, c)), ConfigError);
  CHECK_THROWS_AS(objective_from_json(Json{{"kind", "Custom"}}), ConfigError);
  CHECK_THROWS_AS(objective_from_json(Json{{"kind", "ZhangCounterexample"}, {"n", 3}}), ConfigError);
  CHECK_THROWS_AS(objective_from_json(Json{{"kind", "Nope"}}), ConfigError);
  CHECK_THROWS_AS(objective_from_json(Json{{"kind", "QuadraticSum"}, {"parameters", Json::object()}}), ConfigError);
}

TEST_CASE("optimizer parameters and theory records serialize with fixed names") {
  AdamParams p;
  p.beta2 = 0.95;
  p.schedule = Schedule::Constant;
  p.init_mode = InitMode::PaperTheory;
  const auto back = adam_params_from_json(to_json(p));
  CHECK(back.beta2 == 0.95);
  CHECK(back.schedule == Schedule::Constant);
  CHECK(back.resolved_init() == InitMode::PaperTheory);
  CHECK_THROWS_AS(adam_params_from_json(Json{{"schedule", "Cosine"}}), ConfigError);

  const ProblemConstants pc{1, 1, 1, 1, 2, 1, 1};
  const Json tc = to_json(compute_constants(0.9, 0.999, 2, 1, 0.1, pc));
  for (int i = 1; i <= 13; ++i) CHECK(tc.at("C").contains("C" + std::to_string(i)));
  CHECK(tc.contains("gamma"));
  CHECK(tc.at("C").at("C1").get<double>() == Approx(53.857142857142857));

  const Json con = to_json(evaluate_construction(1, 1, 1e4, 100, 99.5));
  for (const char* k : {"epsilon", "x0", "y0", "eta_star", "slow_horizon", "constraints", "constraints_ok"})
    CHECK(con.contains(k));
  CHECK(con.at("constraints").size() == 3);

  CHECK(json_number(INFINITY) == "inf");
  CHECK(number_from_json(Json("-inf"), "x") == -INFINITY);
  CHECK_THROWS_AS(number_from_json(Json(true), "x"), ConfigError);
}

TEST_CASE("trajectory CSV") {
  const auto lb = FiniteSumObjective::lower_bound({1.0, 1.0, 0.1});
  AdamParams p;
  p.epochs = 20;
  const auto t = adam_run(lb, Vec{2.0, 3.0}, p);
  std::ostringstream out;
  write_trajectory_csv(out, t);
  const auto ls = lines(out.str());
  REQUIRE(ls.size() == t.steps() + 1);
  CHECK(ls[0] == "k,i,tau,w0,w1,grad_norm_epoch_start,f_value,update_inf_norm");
  // values round-trip exactly
  std::istringstream row(ls[5]);
  std::string cell;
  std::vector<std::string> cells;
  while (std::getline(row, cell, ',')) cells.push_back(cell);
  REQUIRE(cells.size() == 8);
  CHECK(std::stod(cells[3]) == t.step(4).w[0]);
  CHECK(std::stod(cells[7]) == t.step(4).update_inf_norm());

  std::vector<std::optional<SmoothnessEstimate>> sm(t.steps());
  sm[0] = SmoothnessEstimate{0, 1.5, 0.1, 0.2};
  std::ostringstream out2;
  write_trajectory_csv(out2, t, &sm);
  const auto l2 = lines(out2.str());
  CHECK(l2[0].ends_with(",smoothness_estimate"));
  CHECK(l2[1].ends_with(",1.5"));
  CHECK(l2[2].ends_with(","));

  const Json side = trajectory_sidecar(t);
  CHECK(side.at("status").at("kind") == "Completed");
  CHECK(side.at("params").at("epochs") == 20);
  CHECK(side.at("rng") == "splitmix64");
}

TEST_CASE("config parsing") {
  const auto c = config_from_json(Json{{"experiment", "fig3"}, {"horizon", 50}, {"grid", {{"beta2", {0.9, 0.99}}}}});
  CHECK(c.experiment == ExperimentKind::Fig3);
  CHECK(c.adam.epochs == 50);
  CHECK(c.beta2_grid == std::vector<double>{0.9, 0.99});
  CHECK(c.seeds == default_config(ExperimentKind::Fig3).seeds);
  CHECK_THROWS_AS(config_from_json(Json{{"experiment", "fig3"}, {"horizn", 5}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(Json{{"experiment", "fig4"}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(Json{{"experiment", "custom"}, {"optimizer", {{"kind", "SGD"}}}}), ConfigError);
  const auto back = config_from_json(to_json(default_config(ExperimentKind::LemmaSuite)));
  CHECK(to_json(back) == to_json(default_config(ExperimentKind::LemmaSuite)));
  for (auto k : {ExperimentKind::Fig3, ExperimentKind::Thm2Divergence, ExperimentKind::Thm2Slow,
                 ExperimentKind::AdamVsGd, ExperimentKind::LemmaSuite, ExperimentKind::Custom})
    CHECK(experiment_kind_from_string(subcommand_name(k)) == k);
}

TEST_CASE("empty grids are configuration errors") {
  auto f = small_fig3();
  f.beta2_grid.clear();
  CHECK_THROWS_AS(run_fig3(f), ConfigError);
  auto t = default_config(ExperimentKind::Thm2Slow);
  t.eta_multipliers.clear();
  CHECK_THROWS_AS(run_thm2(t), ConfigError);
  auto s = small_fig3();
  s.seeds.clear();
  CHECK_THROWS_AS(run_fig3(s), ConfigError);
  CHECK_THROWS_AS(run_thm2(small_fig3()), ConfigError);
  CHECK_THROWS_AS(run_custom(default_config(ExperimentKind::Custom)), ConfigError);
}

TEST_CASE("tail mean uses the last tenth of the epochs") {
  const auto q = FiniteSumObjective::quadratic_sum({1.0}, {Vec{0.0}});
  const auto t = gd_run(q, Vec{1.0}, 0.1, 20);
  const double expect = (t.epochs()[18].grad_norm + t.epochs()[19].grad_norm) / 2.0;
  CHECK(terminal_tail_mean(t) == expect);
}

TEST_CASE("sweep executor orders by label and is independent of execution order") {
  std::vector<RunTask> tasks;
  for (int i = 0; i < 9; ++i)
    tasks.push_back([i] {
      RunSummary r;
      r.label = "run" + std::to_string(8 - i);
      r.terminal_grad = i;
      return r;
    });
  const auto a = execute_sweep(tasks, 0, Exec::OpenMP, 0);
  const auto b = execute_sweep(tasks, 2, Exec::Serial, 99);
  REQUIRE(a.size() == 9);
  for (std::size_t s = 0; s < 9; ++s) {
    CHECK(a[s].label == "run" + std::to_string(s));
    CHECK(a[s].terminal_grad == b[s].terminal_grad);
  }
  std::vector<RunTask> dup{tasks[0], tasks[0]};
  CHECK_THROWS_AS(execute_sweep(dup, 1, Exec::Serial), ConfigError);
  CHECK(run_id_for("beta2=0.9_seed=0") == run_id_for("beta2=0.9_seed=0"));
  CHECK(run_id_for("beta2=0.9_seed=0") != run_id_for("beta2=0.9_seed=1"));
}

TEST_CASE("permuted sweep yields an identical report") {
  auto c = small_fig3();
  const auto a = run_fig3(c);
  c.sweep_shuffle = 12345;
  c.exec = Exec::Serial;
  const auto b = run_fig3(c);
  CHECK(dump_json(to_json(a)) == dump_json(to_json(b)));
  CHECK(a.runs.size() == 6);
  for (std::size_t s = 0; s < a.runs.size(); ++s) CHECK(*a.runs[s].trajectory == *b.runs[s].trajectory);
}

TEST_CASE("emission is deterministic") {
  const auto rep = run_fig3(small_fig3());
  const auto d1 = scratch("emit1"), d2 = scratch("emit2");
  emit(rep, Format::JSON, d1);
  emit(rep, Format::JSON, d2);
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(d1 / "fig3")) {
    if (!e.is_regular_file() || e.path().filename() == "run_info.json") continue;
    ++files;
    CHECK(slurp(e.path()) == slurp(d2 / fs::relative(e.path(), d1)));
  }
  CHECK(files > 10);
  CHECK(fs::exists(d1 / "fig3" / "beta2=0.9_seed=0" / "trajectory.csv"));
  CHECK(fs::exists(d1 / "fig3" / "beta2=0.9_seed=0" / "summary.json"));
  CHECK(fs::exists(d1 / "fig3" / "run_info.json"));

  const auto d3 = scratch("emit3");
  emit(rep, Format::CSV, d3);
  const auto rows = lines(slurp(d3 / "fig3" / "report.csv"));
  CHECK(rows.size() == rep.runs.size() + 1);
  for (const auto& p : rep.plots) {
    const auto pl = lines(slurp(d3 / "fig3" / "plots" / (p.name + ".csv")));
    CHECK(pl.size() == p.points.size() + 1);
    for (std::size_t s = 1; s < pl.size(); ++s) {
      const auto comma = pl[s].find(',');
      REQUIRE(comma != std::string::npos);
      CHECK(comma > 0);
      CHECK(comma + 1 < pl[s].size());
    }
  }
  fs::remove_all(d1);
  fs::remove_all(d2);
  fs::remove_all(d3);
}

TEST_CASE("lemma suite skips grid points outside the lemma domain") {
  auto c = default_config(ExperimentKind::LemmaSuite);
  c.beta1_grid = {0.5, 0.99};
  c.beta2_grid = {0.9};
  c.seeds = {0};
  c.adam.epochs = 20;
  const auto rep = run_lemma_suite(c);
  REQUIRE(rep.runs.size() == 2);
  const auto* skipped = rep.find("beta1=0.99_beta2=0.9_seed=0");
  REQUIRE(skipped);
  CHECK(skipped->skipped);
  CHECK(!skipped->skip_reason.empty());
  CHECK(rep.passed());
  CHECK(rep.extras.at("max_c1_ratio").contains("beta1=0.5_beta2=0.9"));
}

TEST_CASE("lower-bound GD reports") {
  const auto div = run_thm2(default_config(ExperimentKind::Thm2Divergence));
  REQUIRE(div.runs.size() == 3);
  for (const auto& r : div.runs) {
    CHECK(!r.status.completed());
    CHECK(number_from_json(r.metrics.at("min_log_growth"), "g") >= 0.5 * std::log(2.0) - 1e-9);
  }
  CHECK(div.extras.at("grid").size() == 3);

  const auto slow = run_thm2(default_config(ExperimentKind::Thm2Slow));
  const double eps = slow.extras.at("construction").at("epsilon").get<double>();
  for (const auto& r : slow.runs) CHECK(number_from_json(r.metrics.at("min_grad_before_horizon"), "g") >= eps);
  CHECK(slow.passed());

  auto bad = default_config(ExperimentKind::Thm2Slow);
  bad.construction.M = 1.0;
  CHECK_THROWS_AS(run_thm2(bad), ConstraintViolation);
}

TEST_CASE("comparison: Adam crosses epsilon at the frozen epoch") {
  auto c = default_config(ExperimentKind::AdamVsGd);
  c.keep_trajectories = false;
  const auto rep = run_comparison(c);
  CHECK(rep.passed());
  const auto* adam = rep.find("adam_beta2=0.999_seed=0");
  REQUIRE(adam);
  // regression fixture
  CHECK(adam->metrics.at("first_crossing_epoch") == 49);
  for (const auto& r : rep.runs)
    if (r.optimizer == "GradientDescent" && r.params.at("eta_multiplier").get<double>() >= 1.0)
      CHECK(!r.status.completed());
}

TEST_CASE("custom experiment with probes and the bound check") {
  Json j = Json::parse(R"({
    "experiment": "custom",
    "objective": {"kind": "QuadraticSum",
                  "parameters": {"curvatures": [1.0, 1.0], "centers": [[-1.0], [1.0]]}},
    "w0": [3.0],
    "optimizer": {"beta1": 0.0, "beta2": 0.999, "eta1": 0.1, "epochs": 100},
    "seeds": [0, 1],
    "probe": {"enabled": true}
  })");
  const auto rep = run_custom(config_from_json(j));
  REQUIRE(rep.runs.size() == 2);
  CHECK(rep.passed());
  for (const auto& r : rep.runs) {
    REQUIRE(r.bound);
    CHECK(r.bound->verdict != BoundVerdict::Violated);
    CHECK(r.smoothness);
    CHECK(r.metrics.contains("l0l1_fit"));
  }

  Json g = j;
  g["optimizer"] = Json::parse(R"({"kind": "ClippedGradientDescent", "epochs": 50, "clip_threshold": 0.5})");
  g["grid"] = Json::parse(R"({"eta1": [0.1, 0.2]})");
  const auto rg = run_custom(config_from_json(g));
  CHECK(rg.runs.size() == 2);
  CHECK(rg.runs[0].optimizer == "ClippedGradientDescent");
}
