#include "rradam/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <exception>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include <omp.h>

namespace rradam {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
const double kHalfLn2 = 0.5 * std::log(2.0);

std::string num_label(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

std::string join(const std::vector<std::string>& parts, const char* sep = ", ") {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
  return out;
}

}  // namespace

std::string_view to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Fig3: return "Fig3";
    case ExperimentKind::Thm2Divergence: return "Thm2Divergence";
    case ExperimentKind::Thm2Slow: return "Thm2Slow";
    case ExperimentKind::AdamVsGd: return "AdamVsGd";
    case ExperimentKind::LemmaSuite: return "LemmaSuite";
    case ExperimentKind::Custom: return "Custom";
  }
  return "unknown";
}

std::string_view subcommand_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Fig3: return "fig3";
    case ExperimentKind::Thm2Divergence: return "thm2-diverge";
    case ExperimentKind::Thm2Slow: return "thm2-slow";
    case ExperimentKind::AdamVsGd: return "compare";
    case ExperimentKind::LemmaSuite: return "lemmas";
    case ExperimentKind::Custom: return "custom";
  }
  return "unknown";
}

ExperimentKind experiment_kind_from_string(std::string_view name) {
  for (auto k : {ExperimentKind::Fig3, ExperimentKind::Thm2Divergence, ExperimentKind::Thm2Slow,
                 ExperimentKind::AdamVsGd, ExperimentKind::LemmaSuite, ExperimentKind::Custom})
    if (name == to_string(k) || name == subcommand_name(k)) return k;
  throw ConfigError("unknown experiment '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// configuration

ExperimentConfig default_config(ExperimentKind kind) {
  ExperimentConfig c;
  c.experiment = kind;
  c.adam.beta1 = 0.9;
  c.adam.eta1 = 0.1;
  c.adam.xi = 1e-8;
  c.adam.schedule = Schedule::Diminishing;
  switch (kind) {
    case ExperimentKind::Fig3:
      c.adam.epochs = 10000;
      c.adam.init_mode = InitMode::PaperTheory;
      c.beta2_grid = {0.9, 0.99, 0.999};
      c.seeds = {0, 1, 2};
      break;
    case ExperimentKind::Thm2Divergence:
      c.eta_multipliers = {1.0, 1.05, 2.0};
      break;
    case ExperimentKind::Thm2Slow:
      c.eta_multipliers = {0.1, 0.5, 0.99};
      break;
    case ExperimentKind::AdamVsGd:
      c.adam.eta1 = 1.0;
      c.adam.epochs = 10000;
      c.adam.init_mode = InitMode::ZeroState;
      c.beta2_grid = {0.999};
      c.seeds = {0};
      for (int j = -4; j <= 2; ++j) c.eta_multipliers.push_back(std::pow(10.0, j / 4.0));
      c.adam_budget = 10000;
      break;
    case ExperimentKind::LemmaSuite:
      c.adam.epochs = 1000;
      c.adam.init_mode = InitMode::PaperTheory;
      c.adam.lemma_checks = true;
      c.beta1_grid = {0.0, 0.5, 0.9};
      c.beta2_grid = {0.99, 0.999};
      c.seeds = {0, 1, 2, 3, 4};
      break;
    case ExperimentKind::Custom:
      c.adam.epochs = 100;
      c.seeds = {0};
      break;
  }
  return c;
}

namespace {

std::string_view to_string(CustomOptimizer o) {
  switch (o) {
    case CustomOptimizer::RRAdam: return "RRAdam";
    case CustomOptimizer::GradientDescent: return "GradientDescent";
    case CustomOptimizer::ClippedGradientDescent: return "ClippedGradientDescent";
  }
  return "unknown";
}

std::vector<double> doubles(const Json& j, const std::string& what) {
  if (!j.is_array()) throw ConfigError(what + ": expected an array");
  std::vector<double> out;
  for (const auto& x : j) out.push_back(number_from_json(x, what));
  return out;
}

std::uint64_t u64(const Json& j, const std::string& what) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer() && j.get<long long>() >= 0) return j.get<std::uint64_t>();
  throw ConfigError(what + ": expected a nonnegative integer");
}

void reject_unknown(const Json& j, std::initializer_list<std::string_view> known, const std::string& where) {
  for (const auto& [key, _] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ConfigError(where + ": unknown field '" + key + "'");
}

}  // namespace

ExperimentConfig config_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  if (!j.contains("experiment") || !j.at("experiment").is_string()) throw ConfigError("config: missing experiment");
  reject_unknown(j,
                 {"experiment", "objective", "w0", "optimizer", "grid", "seeds", "horizon", "construction", "probe",
                  "adam_budget", "workers", "exec", "sweep_shuffle", "keep_trajectories", "output_dir"},
                 "config");
  ExperimentConfig c = default_config(experiment_kind_from_string(j.at("experiment").get<std::string>()));
  try {
    if (j.contains("objective") && !j.at("objective").is_null()) {
      objective_from_json(j.at("objective"));
      c.objective = j.at("objective");
    }
    if (j.contains("w0") && !j.at("w0").is_null()) c.w0 = doubles(j.at("w0"), "w0");
    if (j.contains("optimizer")) {
      const Json& o = j.at("optimizer");
      if (!o.is_object()) throw ConfigError("optimizer: expected an object");
      reject_unknown(o,
                     {"kind", "beta1", "beta2", "eta1", "xi", "schedule", "epochs", "init_mode", "lemma_checks",
                      "init_component", "clip_threshold"},
                     "optimizer");
      Json adam = o;
      adam.erase("kind");
      adam.erase("clip_threshold");
      c.adam = adam_params_from_json(adam, c.adam);
      if (o.contains("kind")) {
        const auto k = o.at("kind").get<std::string>();
        if (k == "RRAdam")
          c.optimizer = CustomOptimizer::RRAdam;
        else if (k == "GradientDescent")
          c.optimizer = CustomOptimizer::GradientDescent;
        else if (k == "ClippedGradientDescent")
          c.optimizer = CustomOptimizer::ClippedGradientDescent;
        else
          throw ConfigError("optimizer.kind must be RRAdam, GradientDescent or ClippedGradientDescent");
      }
      if (o.contains("clip_threshold")) c.clip_threshold = number_from_json(o.at("clip_threshold"), "clip_threshold");
    }
    if (j.contains("grid")) {
      const Json& g = j.at("grid");
      if (!g.is_object()) throw ConfigError("grid: expected an object");
      reject_unknown(g, {"beta1", "beta2", "eta_multipliers", "eta1"}, "grid");
      if (g.contains("beta1")) c.beta1_grid = doubles(g.at("beta1"), "grid.beta1");
      if (g.contains("beta2")) c.beta2_grid = doubles(g.at("beta2"), "grid.beta2");
      if (g.contains("eta_multipliers")) c.eta_multipliers = doubles(g.at("eta_multipliers"), "grid.eta_multipliers");
      if (g.contains("eta1")) c.eta1_grid = doubles(g.at("eta1"), "grid.eta1");
    }
    if (j.contains("seeds")) {
      if (!j.at("seeds").is_array()) throw ConfigError("seeds: expected an array");
      c.seeds.clear();
      for (const auto& s : j.at("seeds")) c.seeds.push_back(u64(s, "seeds"));
    }
    if (j.contains("horizon")) c.adam.epochs = static_cast<std::size_t>(u64(j.at("horizon"), "horizon"));
    if (j.contains("construction")) {
      const Json& k = j.at("construction");
      if (!k.is_object()) throw ConfigError("construction: expected an object");
      reject_unknown(k, {"L0", "L1", "T", "M", "f_bar"}, "construction");
      if (k.contains("L0")) c.construction.L0 = number_from_json(k.at("L0"), "L0");
      if (k.contains("L1")) c.construction.L1 = number_from_json(k.at("L1"), "L1");
      if (k.contains("T")) c.construction.T = number_from_json(k.at("T"), "T");
      if (k.contains("M")) c.construction.M = number_from_json(k.at("M"), "M");
      if (k.contains("f_bar") && !k.at("f_bar").is_null())
        c.construction.f_bar = number_from_json(k.at("f_bar"), "f_bar");
    }
    if (j.contains("probe")) {
      const Json& p = j.at("probe");
      if (!p.is_object()) throw ConfigError("probe: expected an object");
      reject_unknown(p, {"enabled", "alpha", "stride"}, "probe");
      if (p.contains("enabled")) c.probe.enabled = p.at("enabled").get<bool>();
      if (p.contains("alpha")) c.probe.alpha = number_from_json(p.at("alpha"), "alpha");
      if (p.contains("stride")) c.probe.stride = static_cast<std::size_t>(u64(p.at("stride"), "stride"));
    }
    if (j.contains("adam_budget")) c.adam_budget = static_cast<std::size_t>(u64(j.at("adam_budget"), "adam_budget"));
    if (j.contains("workers")) c.workers = static_cast<std::size_t>(u64(j.at("workers"), "workers"));
    if (j.contains("exec")) {
      const auto e = j.at("exec").get<std::string>();
      if (e == "Serial")
        c.exec = Exec::Serial;
      else if (e == "OpenMP")
        c.exec = Exec::OpenMP;
      else
        throw ConfigError("exec must be Serial or OpenMP");
    }
    if (j.contains("sweep_shuffle")) c.sweep_shuffle = u64(j.at("sweep_shuffle"), "sweep_shuffle");
    if (j.contains("keep_trajectories")) c.keep_trajectories = j.at("keep_trajectories").get<bool>();
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

Json to_json(const ExperimentConfig& c) {
  Json j;
  j["experiment"] = std::string(to_string(c.experiment));
  j["objective"] = c.objective ? *c.objective : Json(nullptr);
  if (c.w0) {
    Json w = Json::array();
    for (double x : *c.w0) w.push_back(json_number(x));
    j["w0"] = w;
  } else {
    j["w0"] = nullptr;
  }
  Json opt = to_json(c.adam);
  opt.erase("seed");
  opt.erase("run_id");
  opt["init_mode"] = c.adam.init_mode ? Json(std::string(to_string(*c.adam.init_mode))) : Json(nullptr);
  opt["kind"] = std::string(to_string(c.optimizer));
  opt["clip_threshold"] = c.clip_threshold;
  j["optimizer"] = opt;
  j["grid"] = Json{{"beta1", c.beta1_grid},
                   {"beta2", c.beta2_grid},
                   {"eta_multipliers", c.eta_multipliers},
                   {"eta1", c.eta1_grid}};
  j["seeds"] = c.seeds;
  j["horizon"] = c.adam.epochs;
  j["construction"] = Json{{"L0", c.construction.L0},
                           {"L1", c.construction.L1},
                           {"T", c.construction.T},
                           {"M", c.construction.M},
                           {"f_bar", c.construction.f_bar ? Json(*c.construction.f_bar) : Json(nullptr)}};
  j["probe"] = Json{{"enabled", c.probe.enabled}, {"alpha", c.probe.alpha}, {"stride", c.probe.stride}};
  j["adam_budget"] = c.adam_budget;
  // execution knobs (workers, exec, sweep order, output directory) do not
  // change any result and stay out of the echo
  return j;
}

// ---------------------------------------------------------------------------
// summaries and reports

Json to_json(const RunSummary& r) {
  Json j;
  j["label"] = r.label;
  j["optimizer"] = r.optimizer;
  Json params = Json::object();
  for (const auto& [k, v] : r.params) params[k] = v;
  j["params"] = params;
  j["skipped"] = r.skipped;
  j["skip_reason"] = r.skip_reason;
  j["status"] = to_json(r.status);
  j["epochs_run"] = r.epochs_run;
  j["terminal_grad"] = json_number(r.terminal_grad);
  j["progress_metric"] = r.progress_metric ? json_number(*r.progress_metric) : Json(nullptr);
  j["bounded_update"] = r.bounded_update ? to_json(*r.bounded_update) : Json(nullptr);
  j["u_gap"] = r.u_gap ? to_json(*r.u_gap) : Json(nullptr);
  j["bound"] = r.bound ? to_json(*r.bound) : Json(nullptr);
  Json metrics = Json::object();
  for (const auto& [k, v] : r.metrics) metrics[k] = v;
  j["metrics"] = metrics;
  return j;
}

bool ExperimentReport::passed() const noexcept {
  return std::all_of(assertions.begin(), assertions.end(), [](const Assertion& a) { return a.passed; });
}

const RunSummary* ExperimentReport::find(std::string_view label) const {
  for (const auto& r : runs)
    if (r.label == label) return &r;
  return nullptr;
}

Json to_json(const ExperimentReport& r) {
  Json j;
  j["experiment"] = std::string(to_string(r.experiment));
  j["config"] = r.config;
  j["environment"] = Json{{"version", std::string(kVersion)}, {"rng", std::string(SplitMix64::algorithm_id)}};
  Json runs = Json::array();
  for (const auto& s : r.runs) runs.push_back(to_json(s));
  j["runs"] = runs;
  Json asserts = Json::array();
  for (const auto& a : r.assertions)
    asserts.push_back(Json{{"name", a.name}, {"passed", a.passed}, {"detail", a.detail}, {"runs", a.runs}});
  j["assertions"] = asserts;
  j["passed"] = r.passed();
  Json extras = Json::object();
  for (const auto& [k, v] : r.extras) extras[k] = v;
  j["extras"] = extras;
  return j;
}

double terminal_tail_mean(const Trajectory& traj) {
  const auto& e = traj.epochs();
  if (e.empty()) return kNaN;
  const std::size_t tail = std::max<std::size_t>(1, (e.size() + 9) / 10);
  double acc = 0.0;
  for (std::size_t s = e.size() - tail; s < e.size(); ++s) acc += e[s].grad_norm;
  return acc / static_cast<double>(tail);
}

std::uint64_t run_id_for(std::string_view label) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : label) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<RunSummary> execute_sweep(std::vector<RunTask> tasks, std::size_t workers, Exec exec,
                                      std::uint64_t shuffle_seed) {
  const std::size_t count = tasks.size();
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (shuffle_seed != 0) {
    SplitMix64 rng(shuffle_seed);
    rng.shuffle(order);
  }

  std::vector<RunSummary> results(count);
  std::vector<std::exception_ptr> errors(count);
  auto run_one = [&](std::size_t q) {
    const std::size_t t = order[q];
    try {
      results[t] = tasks[t]();
    } catch (...) {
      errors[t] = std::current_exception();
    }
  };

  const auto n = static_cast<std::ptrdiff_t>(count);
  if (exec == Exec::OpenMP) {
    const int threads = workers > 0 ? static_cast<int>(workers) : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
    for (std::ptrdiff_t q = 0; q < n; ++q) run_one(static_cast<std::size_t>(q));
  } else {
    for (std::ptrdiff_t q = 0; q < n; ++q) run_one(static_cast<std::size_t>(q));
  }

  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::sort(results.begin(), results.end(),
            [](const RunSummary& a, const RunSummary& b) { return a.label < b.label; });
  for (std::size_t s = 1; s < results.size(); ++s)
    if (results[s].label == results[s - 1].label)
      throw ConfigError("two runs share the identity '" + results[s].label + "'");
  return results;
}

// ---------------------------------------------------------------------------
// shared run helpers

namespace {

void fill_common(RunSummary& r, const Trajectory& traj) {
  r.optimizer = std::string(to_string(traj.optimizer()));
  r.status = traj.status();
  r.epochs_run = traj.epochs().size();
  r.terminal_grad = terminal_tail_mean(traj);
}

void attach(RunSummary& r, Trajectory traj, bool keep) {
  if (keep) r.trajectory = std::make_shared<const Trajectory>(std::move(traj));
}

void add_probes(RunSummary& r, const FiniteSumObjective& obj, const Trajectory& traj, const ProbeConfig& probe) {
  auto est = smoothness_along(obj, traj, probe.alpha, probe.stride, Exec::Serial);
  std::vector<std::pair<double, double>> pairs;
  for (std::size_t s = 0; s < est.size(); ++s) {
    if (!est[s]) continue;
    pairs.emplace_back(norm2(obj.full_grad(traj.step(s).w)), est[s]->estimate);
  }
  r.metrics["probed_segments"] = pairs.size();
  try {
    r.metrics["l0l1_fit"] = to_json(l0l1_fit(pairs));
  } catch (const DomainError& e) {
    r.metrics["l0l1_fit"] = std::string("unavailable: ") + e.what();
  }
  r.smoothness = std::make_shared<const std::vector<std::optional<SmoothnessEstimate>>>(std::move(est));
}

void add_lemmas(RunSummary& r, const Trajectory& traj, const FiniteSumObjective& obj, const AdamParams& p) {
  ProblemConstants pc;
  pc.n = obj.n();
  pc.d = obj.d();
  const TheoryConstants tc = compute_constants(p.beta1, p.beta2, obj.n(), obj.d(), p.eta1, pc);
  r.bounded_update = check_bounded_update(traj, tc, p.xi);
  r.u_gap = check_u_gap(traj, tc, p.beta1);
  r.metrics["C1"] = json_number(tc.c(1));
  r.metrics["C2"] = json_number(tc.c(2));
  r.metrics["max_c1_ratio"] = json_number(r.bounded_update->max_normalized_momentum / tc.c(1));
}

PlotSeries grad_series(const RunSummary& r, const Trajectory& traj) {
  PlotSeries p{"grad_norm_" + r.label, "epoch", "grad_norm", {}};
  for (const auto& s : traj.epochs()) p.points.emplace_back(static_cast<double>(s.k), s.grad_norm);
  if (traj.terminal()) p.points.emplace_back(static_cast<double>(traj.terminal()->k), traj.terminal()->grad_norm);
  return p;
}

FiniteSumObjective objective_or(const ExperimentConfig& c, FiniteSumObjective fallback) {
  return c.objective ? objective_from_json(*c.objective) : std::move(fallback);
}

Vec start_or(const ExperimentConfig& c, const FiniteSumObjective& obj, Vec fallback) {
  Vec w0 = c.w0 ? *c.w0 : std::move(fallback);
  if (w0.size() != obj.d()) throw ConfigError("w0 has the wrong dimension for the objective");
  if (!all_finite(w0)) throw ConfigError("w0 must be finite");
  return w0;
}

void require_kind(const ExperimentConfig& c, std::initializer_list<ExperimentKind> kinds) {
  if (std::find(kinds.begin(), kinds.end(), c.experiment) == kinds.end())
    throw ConfigError("config is for experiment " + std::string(to_string(c.experiment)));
}

void require_seeds(const ExperimentConfig& c) {
  if (c.seeds.empty()) throw ConfigError("seed list is empty");
  if (std::set<std::uint64_t>(c.seeds.begin(), c.seeds.end()).size() != c.seeds.size())
    throw ConfigError("seed list has duplicates");
}

void require_distinct(const std::vector<double>& grid, const char* what) {
  if (std::set<double>(grid.begin(), grid.end()).size() != grid.size())
    throw ConfigError(std::string(what) + " grid has duplicates");
}

AdamParams run_params(const ExperimentConfig& c, std::uint64_t seed, const std::string& label) {
  AdamParams p = c.adam;
  p.seed = seed;
  p.run_id = run_id_for(label);
  return p;
}

LowerBoundSetup build_construction(const ExperimentConfig& c) {
  const auto& k = c.construction;
  const double f_bar = k.f_bar ? *k.f_bar : self_consistent_f_bar(k.L0, k.L1, k.M);
  return make_lowerbound(k.L0, k.L1, k.T, k.M, f_bar);
}

/// Smallest log|x_{k+1}| - log|x_k| over recorded consecutive finite iterates.
struct Growth {
  double min_log_ratio = std::numeric_limits<double>::infinity();
  std::size_t observed = 0;
};

Growth log_growth(const Trajectory& traj) {
  std::vector<double> xs;
  for (std::size_t s = 0; s < traj.steps(); ++s) xs.push_back(traj.step(s).w[0]);
  if (!traj.final_w().empty()) xs.push_back(traj.final_w()[0]);
  Growth g;
  for (std::size_t s = 0; s + 1 < xs.size(); ++s) {
    const double a = std::abs(xs[s]), b = std::abs(xs[s + 1]);
    if (!std::isfinite(a) || !std::isfinite(b) || a == 0.0 || b == 0.0) continue;
    g.min_log_ratio = std::min(g.min_log_ratio, std::log(b) - std::log(a));
    ++g.observed;
  }
  return g;
}

/// min ||grad f(w_k)|| over recorded iterates with index k < horizon.
double min_grad_before(const Trajectory& traj, std::uint64_t horizon) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& s : traj.epochs())
    if (s.k < horizon) m = std::min(m, s.grad_norm);
  if (traj.terminal() && traj.terminal()->k < horizon) m = std::min(m, traj.terminal()->grad_norm);
  return m;
}

std::vector<std::string> labels_of(const std::vector<RunSummary>& runs) {
  std::vector<std::string> out;
  for (const auto& r : runs)
    if (!r.skipped) out.push_back(r.label);
  return out;
}

ExperimentReport new_report(const ExperimentConfig& c) {
  ExperimentReport r;
  r.experiment = c.experiment;
  r.config = to_json(c);
  return r;
}

}  // namespace

// ---------------------------------------------------------------------------
// experiments

ExperimentReport run_fig3(const ExperimentConfig& config) {
  require_kind(config, {ExperimentKind::Fig3});
  if (config.beta2_grid.empty()) throw ConfigError("fig3: the beta2 set is empty");
  require_distinct(config.beta2_grid, "beta2");
  require_seeds(config);
  const FiniteSumObjective obj = objective_or(config, FiniteSumObjective::zhang_counterexample());
  const Vec w0 = start_or(config, obj, Vec{-2.0});

  std::vector<RunTask> tasks;
  for (double b2 : config.beta2_grid)
    for (std::uint64_t seed : config.seeds)
      tasks.push_back([&, b2, seed] {
        RunSummary r;
        r.label = "beta2=" + num_label(b2) + "_seed=" + std::to_string(seed);
        AdamParams p = run_params(config, seed, r.label);
        p.beta2 = b2;
        Trajectory traj = adam_run(obj, w0, p);
        fill_common(r, traj);
        r.params = {{"beta1", p.beta1}, {"beta2", b2}, {"eta1", p.eta1}, {"seed", seed}};
        if (p.lemma_checks) add_lemmas(r, traj, obj, p);
        if (config.probe.enabled) add_probes(r, obj, traj, config.probe);
        attach(r, std::move(traj), true);
        return r;
      });

  ExperimentReport rep = new_report(config);
  rep.runs = execute_sweep(std::move(tasks), config.workers, config.exec, config.sweep_shuffle);

  for (const auto& r : rep.runs) rep.plots.push_back(grad_series(r, *r.trajectory));
  if (!config.keep_trajectories)
    for (auto& r : rep.runs) r.trajectory.reset();

  std::vector<double> b2s = config.beta2_grid;
  std::sort(b2s.begin(), b2s.end());
  auto label_of = [](double b2, std::uint64_t seed) {
    return "beta2=" + num_label(b2) + "_seed=" + std::to_string(seed);
  };

  Assertion positive{"tail_grad_positive", true, "", labels_of(rep.runs)};
  for (const auto& r : rep.runs)
    if (!(r.terminal_grad > 0.0)) {
      positive.passed = false;
      positive.detail += r.label + " tail mean " + format_double(r.terminal_grad) + "; ";
    }
  if (positive.passed) positive.detail = "every run stabilizes above zero";

  Assertion nonconv{"nonconvergence_at_smallest_beta2", true, "", {}};
  Assertion order{"tail_grad_decreases_with_beta2", true, "", labels_of(rep.runs)};
  for (std::uint64_t seed : config.seeds) {
    const RunSummary* lo = rep.find(label_of(b2s.front(), seed));
    nonconv.runs.push_back(lo->label);
    if (!(lo->terminal_grad > 1e-4)) {
      nonconv.passed = false;
      nonconv.detail += lo->label + " tail mean " + format_double(lo->terminal_grad) + " <= 1e-4; ";
    }
    std::vector<std::string> chain;
    for (std::size_t b = 0; b < b2s.size(); ++b) {
      const RunSummary* cur = rep.find(label_of(b2s[b], seed));
      chain.push_back(format_double(cur->terminal_grad));
      if (b > 0 && !(cur->terminal_grad < rep.find(label_of(b2s[b - 1], seed))->terminal_grad)) order.passed = false;
    }
    order.detail += "seed " + std::to_string(seed) + ": " + join(chain, " > ") + "; ";
  }
  if (nonconv.passed) nonconv.detail = "tail mean above 1e-4 at beta2 = " + num_label(b2s.front()) + " for every seed";
  rep.assertions = {positive, nonconv, order};
  return rep;
}

ExperimentReport run_thm2(const ExperimentConfig& config) {
  require_kind(config, {ExperimentKind::Thm2Divergence, ExperimentKind::Thm2Slow});
  if (config.eta_multipliers.empty()) throw ConfigError("thm2: the eta1 grid is empty");
  require_distinct(config.eta_multipliers, "eta multiplier");
  for (double m : config.eta_multipliers)
    if (!(m > 0.0) || !std::isfinite(m)) throw ConfigError("thm2: eta multipliers must be positive");
  const bool diverge = config.experiment == ExperimentKind::Thm2Divergence;

  const LowerBoundSetup setup = build_construction(config);
  const Thm2Construction& con = setup.construction;
  const auto horizon = con.slow_horizon;
  const std::size_t steps =
      diverge ? static_cast<std::size_t>(config.construction.T) : static_cast<std::size_t>(horizon);
  if (steps == 0) throw ConfigError("thm2: zero steps to run");

  std::vector<RunTask> tasks;
  for (double mult : config.eta_multipliers)
    tasks.push_back([&, mult] {
      RunSummary r;
      r.label = "eta=" + num_label(mult) + "x";
      const double eta1 = mult * con.eta_star;
      Trajectory traj = gd_run(setup.objective, setup.w0, eta1, steps);
      fill_common(r, traj);
      r.params = {{"eta_multiplier", mult}, {"eta1", json_number(eta1)}};
      if (diverge) {
        const Growth g = log_growth(traj);
        r.metrics["min_log_growth"] = json_number(g.min_log_ratio);
        r.metrics["steps_observed"] = g.observed;
      } else {
        r.metrics["min_grad_before_horizon"] = json_number(min_grad_before(traj, horizon));
      }
      attach(r, std::move(traj), config.keep_trajectories);
      return r;
    });

  ExperimentReport rep = new_report(config);
  rep.extras["construction"] = to_json(con);
  rep.extras["w0"] = Json::array({json_number(setup.w0[0]), json_number(setup.w0[1])});
  rep.runs = execute_sweep(std::move(tasks), config.workers, config.exec, config.sweep_shuffle);

  const double threshold = kHalfLn2 - 1e-9;
  Json table = Json::array();
  if (diverge) {
    Assertion growth{"sqrt2_growth_until_guard", true, "", labels_of(rep.runs)};
    Assertion observed{"at_least_10_growth_steps", true, "", labels_of(rep.runs)};
    for (const auto& r : rep.runs) {
      const double g = number_from_json(r.metrics.at("min_log_growth"), "min_log_growth");
      const auto obs = r.metrics.at("steps_observed").get<std::size_t>();
      const bool ok = !r.status.completed() && g >= threshold && obs > 0;
      growth.passed = growth.passed && ok;
      observed.passed = observed.passed && obs >= 10;
      growth.detail += r.label + ": " + std::string(to_string(r.status.kind)) + ", min log ratio " +
                       format_double(g) + "; ";
      observed.detail += r.label + ": " + std::to_string(obs) + " steps; ";
      table.push_back(Json{{"label", r.label},
                           {"status", std::string(to_string(r.status.kind))},
                           {"min_log_growth", json_number(g)},
                           {"steps_observed", obs},
                           {"verdict", ok ? "diverges" : "no sqrt2 growth"}});
    }
    rep.assertions = {growth, observed};
  } else {
    Assertion horizon_big{"slow_horizon_at_least_100", horizon >= 100,
                          "slow_horizon = " + std::to_string(horizon), {}};
    Assertion floor{"gradient_floor_before_horizon", true, "", labels_of(rep.runs)};
    for (const auto& r : rep.runs) {
      const double m = number_from_json(r.metrics.at("min_grad_before_horizon"), "min_grad");
      const bool ok = m >= con.epsilon;
      floor.passed = floor.passed && ok;
      floor.detail += r.label + ": min " + format_double(m) + " vs epsilon " + format_double(con.epsilon) + " (" +
                      std::string(to_string(r.status.kind)) + "); ";
      table.push_back(Json{{"label", r.label},
                           {"status", std::string(to_string(r.status.kind))},
                           {"min_grad_before_horizon", json_number(m)},
                           {"verdict", ok ? "floor holds" : "floor broken"}});
    }
    rep.assertions = {horizon_big, floor};
  }
  rep.extras["grid"] = table;
  return rep;
}

ExperimentReport run_comparison(const ExperimentConfig& config) {
  require_kind(config, {ExperimentKind::AdamVsGd});
  if (config.eta_multipliers.empty()) throw ConfigError("compare: the GD eta1 grid is empty");
  if (config.beta2_grid.empty()) throw ConfigError("compare: the beta2 set is empty");
  require_distinct(config.eta_multipliers, "eta multiplier");
  require_distinct(config.beta2_grid, "beta2");
  require_seeds(config);

  const LowerBoundSetup setup = build_construction(config);
  const Thm2Construction& con = setup.construction;
  const FiniteSumObjective& obj = setup.objective;
  const auto horizon = con.slow_horizon;
  const double gamma = gamma_threshold(1.0, obj.n(), obj.d(), config.adam.beta1);

  std::vector<RunTask> tasks;
  for (double b2 : config.beta2_grid)
    for (std::uint64_t seed : config.seeds)
      tasks.push_back([&, b2, seed] {
        RunSummary r;
        r.label = "adam_beta2=" + num_label(b2) + "_seed=" + std::to_string(seed);
        r.optimizer = std::string(to_string(OptimizerKind::RRAdam));
        AdamParams p = run_params(config, seed, r.label);
        p.beta2 = b2;
        r.params = {{"beta1", p.beta1}, {"beta2", b2}, {"eta1", p.eta1}, {"seed", seed}};
        if (!(b2 > gamma)) {
          r.skipped = true;
          r.skip_reason = "beta2 " + num_label(b2) + " below gamma " + format_double(gamma);
          return r;
        }
        Trajectory traj = adam_run(obj, setup.w0, p);
        fill_common(r, traj);
        std::optional<std::size_t> crossing;
        for (const auto& s : traj.epochs())
          if (s.grad_norm < con.epsilon) {
            crossing = s.k;
            break;
          }
        if (!crossing && traj.terminal() && traj.terminal()->grad_norm < con.epsilon) crossing = traj.terminal()->k;
        r.metrics["first_crossing_epoch"] = crossing ? Json(*crossing) : Json(nullptr);
        r.progress_metric = progress_metric(traj, 0.0, 1.0, p.xi);
        attach(r, std::move(traj), config.keep_trajectories);
        return r;
      });
  for (double mult : config.eta_multipliers)
    tasks.push_back([&, mult] {
      RunSummary r;
      r.label = "gd_eta=" + num_label(mult) + "x";
      const double eta1 = mult * con.eta_star;
      Trajectory traj = gd_run(obj, setup.w0, eta1, static_cast<std::size_t>(std::max<std::uint64_t>(horizon, 1)));
      fill_common(r, traj);
      r.params = {{"eta_multiplier", mult}, {"eta1", json_number(eta1)}};
      r.metrics["min_grad_before_horizon"] = json_number(min_grad_before(traj, horizon));
      attach(r, std::move(traj), config.keep_trajectories);
      return r;
    });

  ExperimentReport rep = new_report(config);
  rep.extras["construction"] = to_json(con);
  rep.extras["gamma"] = gamma;
  rep.runs = execute_sweep(std::move(tasks), config.workers, config.exec, config.sweep_shuffle);

  Assertion gd{"gd_diverges_or_stalls", true, "", {}};
  Assertion part1{"gd_at_or_above_eta_star_diverges", true, "", {}};
  Assertion adam{"adam_crosses_epsilon_within_budget", true, "", {}};
  Json table = Json::array();
  for (const auto& r : rep.runs) {
    if (r.optimizer != "GradientDescent") continue;
    const double mult = r.params.at("eta_multiplier").get<double>();
    const double m = number_from_json(r.metrics.at("min_grad_before_horizon"), "min_grad");
    const bool diverged = !r.status.completed();
    const bool ok = diverged || m >= con.epsilon;
    gd.runs.push_back(r.label);
    gd.passed = gd.passed && ok;
    if (mult >= 1.0) {
      part1.runs.push_back(r.label);
      part1.passed = part1.passed && diverged;
    }
    table.push_back(Json{{"label", r.label},
                         {"status", std::string(to_string(r.status.kind))},
                         {"min_grad_before_horizon", json_number(m)},
                         {"verdict", diverged ? "diverged" : (m >= con.epsilon ? "stalled above epsilon" : "fast")}});
  }
  gd.detail = std::to_string(gd.runs.size()) + " GD runs, horizon " + std::to_string(horizon);
  part1.detail = std::to_string(part1.runs.size()) + " GD runs at eta1 >= eta*";
  for (const auto& r : rep.runs) {
    if (r.optimizer != "RRAdam") continue;
    if (r.skipped) {
      adam.detail += r.label + " skipped: " + r.skip_reason + "; ";
      continue;
    }
    adam.runs.push_back(r.label);
    const Json& c = r.metrics.at("first_crossing_epoch");
    const bool ok = !c.is_null() && c.get<std::size_t>() <= config.adam_budget;
    adam.passed = adam.passed && ok;
    adam.detail += r.label + ": " + (c.is_null() ? std::string("no crossing") : "epoch " + c.dump()) + "; ";
  }
  if (adam.runs.empty()) adam.passed = false;
  rep.extras["gd_grid"] = table;
  rep.assertions = {gd, part1, adam};
  return rep;
}

ExperimentReport run_lemma_suite(const ExperimentConfig& config) {
  require_kind(config, {ExperimentKind::LemmaSuite});
  require_seeds(config);
  const std::vector<double> b1s = config.beta1_grid.empty() ? std::vector{config.adam.beta1} : config.beta1_grid;
  const std::vector<double> b2s = config.beta2_grid.empty() ? std::vector{config.adam.beta2} : config.beta2_grid;
  require_distinct(b1s, "beta1");
  require_distinct(b2s, "beta2");
  const FiniteSumObjective obj = objective_or(config, FiniteSumObjective::zhang_counterexample());
  const Vec w0 = start_or(config, obj, Vec(obj.d(), -2.0));

  std::vector<RunTask> tasks;
  for (double b1 : b1s)
    for (double b2 : b2s)
      for (std::uint64_t seed : config.seeds)
        tasks.push_back([&, b1, b2, seed] {
          RunSummary r;
          r.label = "beta1=" + num_label(b1) + "_beta2=" + num_label(b2) + "_seed=" + std::to_string(seed);
          r.optimizer = std::string(to_string(OptimizerKind::RRAdam));
          AdamParams p = run_params(config, seed, r.label);
          p.beta1 = b1;
          p.beta2 = b2;
          p.init_mode = InitMode::PaperTheory;
          p.lemma_checks = true;
          r.params = {{"beta1", b1}, {"beta2", b2}, {"eta1", p.eta1}, {"seed", seed}};
          if (!(b1 * b1 < b2)) {
            r.skipped = true;
            r.skip_reason = "beta1^2 >= beta2: outside the lemma domain";
            return r;
          }
          Trajectory traj = adam_run(obj, w0, p);
          fill_common(r, traj);
          add_lemmas(r, traj, obj, p);
          attach(r, std::move(traj), config.keep_trajectories);
          return r;
        });

  ExperimentReport rep = new_report(config);
  rep.runs = execute_sweep(std::move(tasks), config.workers, config.exec, config.sweep_shuffle);

  Assertion zero{"zero_lemma_violations", true, "", labels_of(rep.runs)};
  std::map<std::string, double> max_ratio;
  std::size_t violations = 0, checks = 0, skipped = 0;
  for (const auto& r : rep.runs) {
    const std::string point = "beta1=" + num_label(r.params.at("beta1").get<double>()) +
                              "_beta2=" + num_label(r.params.at("beta2").get<double>());
    if (r.skipped) {
      ++skipped;
      continue;
    }
    if (!r.status.completed()) zero.passed = false;
    violations += r.bounded_update->violation_count + r.u_gap->violation_count;
    checks += r.bounded_update->checks + r.u_gap->checks;
    const double ratio = number_from_json(r.metrics.at("max_c1_ratio"), "max_c1_ratio");
    max_ratio[point] = std::max(max_ratio.count(point) ? max_ratio[point] : 0.0, ratio);
  }
  zero.passed = zero.passed && violations == 0;
  zero.detail = std::to_string(violations) + " violations in " + std::to_string(checks) + " checks; " +
                std::to_string(skipped) + " runs skipped";
  Json per_point = Json::object();
  for (const auto& [k, v] : max_ratio) per_point[k] = v;
  rep.extras["max_c1_ratio"] = per_point;
  rep.assertions = {zero};
  return rep;
}

ExperimentReport run_custom(const ExperimentConfig& config) {
  require_kind(config, {ExperimentKind::Custom});
  if (!config.objective) throw ConfigError("custom: an objective is required");
  require_seeds(config);
  const FiniteSumObjective obj = objective_from_json(*config.objective);
  const Vec w0 = start_or(config, obj, Vec(obj.d(), 0.0));
  const bool adam = config.optimizer == CustomOptimizer::RRAdam;
  const std::vector<double> b1s = config.beta1_grid.empty() ? std::vector{config.adam.beta1} : config.beta1_grid;
  const std::vector<double> b2s = config.beta2_grid.empty() ? std::vector{config.adam.beta2} : config.beta2_grid;
  const std::vector<double> etas = config.eta1_grid.empty() ? std::vector{config.adam.eta1} : config.eta1_grid;
  require_distinct(b1s, "beta1");
  require_distinct(b2s, "beta2");
  require_distinct(etas, "eta1");
  if (config.adam.epochs == 0 && !adam) throw ConfigError("custom: GD needs a positive horizon");

  auto finish = [&](RunSummary& r, Trajectory traj) {
    fill_common(r, traj);
    if (config.probe.enabled) add_probes(r, obj, traj, config.probe);
    attach(r, std::move(traj), config.keep_trajectories);
  };

  std::vector<RunTask> tasks;
  if (adam) {
    for (double b1 : b1s)
      for (double b2 : b2s)
        for (double eta : etas)
          for (std::uint64_t seed : config.seeds)
            tasks.push_back([&, b1, b2, eta, seed] {
              RunSummary r;
              r.label = "beta1=" + num_label(b1) + "_beta2=" + num_label(b2) + "_eta1=" + num_label(eta) +
                        "_seed=" + std::to_string(seed);
              r.optimizer = std::string(to_string(OptimizerKind::RRAdam));
              AdamParams p = run_params(config, seed, r.label);
              p.beta1 = b1;
              p.beta2 = b2;
              p.eta1 = eta;
              r.params = {{"beta1", b1}, {"beta2", b2}, {"eta1", eta}, {"seed", seed}};
              if (p.lemma_checks && !(b1 * b1 < b2)) {
                r.skipped = true;
                r.skip_reason = "beta1^2 >= beta2: outside the lemma domain";
                return r;
              }
              Trajectory traj = adam_run(obj, w0, p);
              if (p.lemma_checks) add_lemmas(r, traj, obj, p);
              const auto D = obj.known_D0_D1();
              const auto L = obj.known_L0_L1();
              if (D && D->second > 0.0) r.progress_metric = progress_metric(traj, D->first, D->second, p.xi);
              if (D && L && obj.known_min() && p.schedule == Schedule::Diminishing && !traj.epochs().empty()) {
                ProblemConstants pc{L->first, L->second, D->first, D->second, obj.n(), obj.d(),
                                    obj.value(w0) - *obj.known_min()};
                try {
                  r.bound = check_theorem1(traj, pc, p);
                } catch (const Error& e) {
                  r.metrics["bound_unavailable"] = std::string(e.what());
                }
              }
              finish(r, std::move(traj));
              return r;
            });
  } else {
    for (double eta : etas)
      tasks.push_back([&, eta] {
        RunSummary r;
        r.label = "eta1=" + num_label(eta);
        r.params = {{"eta1", eta}};
        Trajectory traj = config.optimizer == CustomOptimizer::GradientDescent
                              ? gd_run(obj, w0, eta, config.adam.epochs)
                              : clipped_gd_run(obj, w0, eta, config.clip_threshold, config.adam.epochs);
        if (config.optimizer == CustomOptimizer::ClippedGradientDescent) r.params["clip_threshold"] = config.clip_threshold;
        finish(r, std::move(traj));
        return r;
      });
  }

  ExperimentReport rep = new_report(config);
  rep.extras["objective"] = objective_to_json(obj);
  rep.runs = execute_sweep(std::move(tasks), config.workers, config.exec, config.sweep_shuffle);

  Assertion done{"all_runs_completed", true, "", labels_of(rep.runs)};
  for (const auto& r : rep.runs) {
    if (r.skipped) continue;
    if (!r.status.completed()) {
      done.passed = false;
      done.detail += r.label + ": " + std::string(to_string(r.status.kind)) + "; ";
    }
    if (r.bounded_update && !r.bounded_update->passed()) done.passed = false;
    if (r.u_gap && !r.u_gap->passed()) done.passed = false;
    if (r.bound && r.bound->verdict == BoundVerdict::Violated) done.passed = false;
  }
  if (done.detail.empty()) done.detail = done.passed ? "all runs completed" : "a lemma or bound check failed";
  rep.assertions = {done};
  for (const auto& r : rep.runs)
    if (r.smoothness && r.trajectory) {
      PlotSeries p{"smoothness_" + r.label, "grad_norm", "smoothness", {}};
      for (std::size_t s = 0; s < r.smoothness->size(); ++s)
        if (const auto& e = (*r.smoothness)[s]) p.points.emplace_back(norm2(obj.full_grad(r.trajectory->step(s).w)), e->estimate);
      rep.plots.push_back(std::move(p));
    }
  for (const auto& r : rep.runs)
    if (r.trajectory) rep.plots.push_back(grad_series(r, *r.trajectory));
  return rep;
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  switch (config.experiment) {
    case ExperimentKind::Fig3: return run_fig3(config);
    case ExperimentKind::Thm2Divergence:
    case ExperimentKind::Thm2Slow: return run_thm2(config);
    case ExperimentKind::AdamVsGd: return run_comparison(config);
    case ExperimentKind::LemmaSuite: return run_lemma_suite(config);
    case ExperimentKind::Custom: return run_custom(config);
  }
  throw ConfigError("unknown experiment");
}

// ---------------------------------------------------------------------------
// emission

namespace {

std::string cell(const std::optional<double>& x) { return x ? format_double(*x) : ""; }

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) out += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return out + "\"";
}

std::string timestamp_utc() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string summary_csv(const RunSummary& r) {
  std::ostringstream out;
  out << "key,value\n";
  const Json j = to_json(r);
  for (const auto& [k, v] : j.items()) out << csv_escape(k) << ',' << csv_escape(v.is_string() ? v.get<std::string>() : v.dump()) << '\n';
  return out.str();
}

}  // namespace

std::string runs_csv(const ExperimentReport& rep) {
  std::ostringstream out;
  out << "label,optimizer,skipped,status,status_step,epochs_run,terminal_grad,progress_metric,"
         "bounded_update_passed,u_gap_passed,bound_verdict\n";
  auto flag = [](const std::optional<LemmaReport>& l) -> std::string {
    return l ? (l->passed() ? "true" : "false") : "";
  };
  for (const auto& r : rep.runs) {
    out << csv_escape(r.label) << ',' << r.optimizer << ',' << (r.skipped ? "true" : "false") << ','
        << to_string(r.status.kind) << ',' << r.status.step << ',' << r.epochs_run << ','
        << format_double(r.terminal_grad) << ',' << cell(r.progress_metric) << ',' << flag(r.bounded_update) << ','
        << flag(r.u_gap) << ',' << (r.bound ? std::string(to_string(r.bound->verdict)) : "") << '\n';
  }
  return out.str();
}

std::string plot_csv(const PlotSeries& p) {
  std::ostringstream out;
  out << p.x_label << ',' << p.y_label << '\n';
  for (const auto& [x, y] : p.points) out << format_double(x) << ',' << format_double(y) << '\n';
  return out.str();
}

void emit(const ExperimentReport& rep, Format format, const std::filesystem::path& out) {
  const std::filesystem::path root = out / std::string(subcommand_name(rep.experiment));
  for (const auto& r : rep.runs) {
    const auto dir = root / r.label;
    if (format == Format::JSON)
      write_file(dir / "summary.json", dump_json(to_json(r)));
    else
      write_file(dir / "summary.csv", summary_csv(r));
    if (r.trajectory) {
      std::ostringstream csv;
      write_trajectory_csv(csv, *r.trajectory, r.smoothness.get());
      write_file(dir / "trajectory.csv", csv.str());
      write_file(dir / "trajectory.json", dump_json(trajectory_sidecar(*r.trajectory)));
    }
  }
  for (const auto& p : rep.plots) write_file(root / "plots" / (p.name + ".csv"), plot_csv(p));

  if (format == Format::JSON) {
    write_file(root / "report.json", dump_json(to_json(rep)));
  } else {
    write_file(root / "report.csv", runs_csv(rep));
    std::ostringstream a;
    a << "name,passed,detail\n";
    for (const auto& x : rep.assertions)
      a << csv_escape(x.name) << ',' << (x.passed ? "true" : "false") << ',' << csv_escape(x.detail) << '\n';
    write_file(root / "assertions.csv", a.str());
  }
  write_file(root / "run_info.json",
             dump_json(Json{{"timestamp", timestamp_utc()}, {"version", std::string(kVersion)}}));
}

}  // namespace rradam
