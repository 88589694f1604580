#include "rradam/io.hpp"

#include <cmath>
#include <fstream>
#include <limits>

namespace rradam {

Json json_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

double number_from_json(const Json& j, const std::string& what) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw ConfigError(what + ": expected a number");
}

namespace {

Json vec_json(std::span<const double> v) {
  Json a = Json::array();
  for (double x : v) a.push_back(json_number(x));
  return a;
}

Vec vec_from_json(const Json& j, const std::string& what) {
  if (!j.is_array()) throw ConfigError(what + ": expected an array");
  Vec out;
  for (const auto& x : j) out.push_back(number_from_json(x, what));
  return out;
}

std::size_t count_from_json(const Json& j, const std::string& what) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<long long>() >= 0))
    throw ConfigError(what + ": expected a nonnegative integer");
  return j.get<std::size_t>();
}

double field(const Json& obj, const char* key, double fallback) {
  return obj.contains(key) ? number_from_json(obj.at(key), key) : fallback;
}

}  // namespace

Json objective_to_json(const FiniteSumObjective& obj) {
  Json j;
  j["kind"] = std::string(to_string(obj.kind()));
  j["n"] = obj.n();
  j["d"] = obj.d();
  j["scale"] = obj.scale();
  Json params = Json::object();
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, LowerBoundParams>) {
          params["L0"] = p.L0;
          params["L1"] = p.L1;
          params["epsilon"] = p.epsilon;
        } else if constexpr (std::is_same_v<P, QuadraticSumParams>) {
          params["curvatures"] = vec_json(p.curvatures);
          Json centers = Json::array();
          for (const auto& c : p.centers) centers.push_back(vec_json(c));
          params["centers"] = centers;
        } else if constexpr (std::is_same_v<P, CustomComponents>) {
          throw ConfigError("Custom objectives carry callbacks and cannot be serialized");
        }
      },
      obj.params());
  j["parameters"] = params;
  return j;
}

FiniteSumObjective objective_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("objective: expected an object");
  if (!j.contains("kind") || !j.at("kind").is_string()) throw ConfigError("objective: missing kind");
  LandscapeKind kind;
  try {
    kind = landscape_kind_from_string(j.at("kind").get<std::string>());
  } catch (const DomainError& e) {
    throw ConfigError(std::string("objective: ") + e.what());
  }
  const Json params = j.value("parameters", Json::object());
  const double scale = field(j, "scale", 1.0);
  auto check_shape = [&](std::size_t n, std::size_t d) {
    if (j.contains("n") && count_from_json(j.at("n"), "n") != n) throw ConfigError("objective: n does not match kind");
    if (j.contains("d") && count_from_json(j.at("d"), "d") != d) throw ConfigError("objective: d does not match kind");
  };
  try {
    switch (kind) {
      case LandscapeKind::ZhangCounterexample: {
        auto obj = FiniteSumObjective::zhang_counterexample(scale);
        check_shape(obj.n(), obj.d());
        return obj;
      }
      case LandscapeKind::LowerBound: {
        LowerBoundParams p;
        p.L0 = field(params, "L0", p.L0);
        p.L1 = field(params, "L1", p.L1);
        p.epsilon = field(params, "epsilon", p.epsilon);
        const std::size_t n = j.contains("n") ? count_from_json(j.at("n"), "n") : 1;
        auto obj = FiniteSumObjective::lower_bound(p, n, scale);
        check_shape(obj.n(), obj.d());
        return obj;
      }
      case LandscapeKind::QuadraticSum: {
        if (!params.contains("curvatures") || !params.contains("centers"))
          throw ConfigError("QuadraticSum needs parameters.curvatures and parameters.centers");
        Vec curv = vec_from_json(params.at("curvatures"), "curvatures");
        std::vector<Vec> centers;
        if (!params.at("centers").is_array()) throw ConfigError("centers: expected an array");
        for (const auto& c : params.at("centers")) centers.push_back(vec_from_json(c, "centers"));
        auto obj = FiniteSumObjective::quadratic_sum(std::move(curv), std::move(centers), scale);
        check_shape(obj.n(), obj.d());
        return obj;
      }
      case LandscapeKind::Custom:
        break;
    }
  } catch (const DomainError& e) {
    throw ConfigError(std::string("objective: ") + e.what());
  }
  throw ConfigError("Custom objectives cannot be built from JSON");
}

Json to_json(const AdamParams& p) {
  Json j;
  j["beta1"] = p.beta1;
  j["beta2"] = p.beta2;
  j["eta1"] = p.eta1;
  j["xi"] = p.xi;
  j["schedule"] = std::string(to_string(p.schedule));
  j["epochs"] = p.epochs;
  j["init_mode"] = std::string(to_string(p.resolved_init()));
  j["lemma_checks"] = p.lemma_checks;
  j["seed"] = p.seed;
  j["run_id"] = p.run_id;
  j["init_component"] = p.init_component;
  return j;
}

AdamParams adam_params_from_json(const Json& j, const AdamParams& defaults) {
  if (!j.is_object()) throw ConfigError("optimizer: expected an object");
  AdamParams p = defaults;
  p.beta1 = field(j, "beta1", p.beta1);
  p.beta2 = field(j, "beta2", p.beta2);
  p.eta1 = field(j, "eta1", p.eta1);
  p.xi = field(j, "xi", p.xi);
  if (j.contains("schedule")) {
    const auto s = j.at("schedule").get<std::string>();
    if (s == "Diminishing")
      p.schedule = Schedule::Diminishing;
    else if (s == "Constant")
      p.schedule = Schedule::Constant;
    else
      throw ConfigError("schedule must be Diminishing or Constant");
  }
  if (j.contains("epochs")) p.epochs = count_from_json(j.at("epochs"), "epochs");
  if (j.contains("init_mode")) {
    const auto s = j.at("init_mode").get<std::string>();
    if (s == "PaperTheory")
      p.init_mode = InitMode::PaperTheory;
    else if (s == "ZeroState")
      p.init_mode = InitMode::ZeroState;
    else
      throw ConfigError("init_mode must be PaperTheory or ZeroState");
  }
  if (j.contains("lemma_checks")) p.lemma_checks = j.at("lemma_checks").get<bool>();
  if (j.contains("init_component")) p.init_component = count_from_json(j.at("init_component"), "init_component");
  return p;
}

Json to_json(const TheoryConstants& tc) {
  Json j;
  Json c = Json::object();
  for (std::size_t i = 1; i <= tc.C.size(); ++i) c["C" + std::to_string(i)] = json_number(tc.c(i));
  j["C"] = c;
  j["g"] = json_number(tc.g_value);
  j["gamma"] = tc.gamma ? Json(*tc.gamma) : Json(nullptr);
  j["smooth_L0"] = json_number(tc.smooth_L0);
  j["smooth_L1"] = json_number(tc.smooth_L1);
  j["beta1"] = tc.beta1;
  j["beta2"] = tc.beta2;
  j["eta1"] = tc.eta1;
  j["n"] = tc.n;
  j["d"] = tc.d;
  return j;
}

Json to_json(const ConstraintCheck& c) {
  return Json{{"name", c.name}, {"lhs", json_number(c.lhs)}, {"rhs", json_number(c.rhs)}, {"ok", c.ok}};
}

Json to_json(const Thm2Construction& c) {
  Json j;
  j["L0"] = c.L0;
  j["L1"] = c.L1;
  j["T"] = c.T;
  j["M"] = c.M;
  j["f_bar"] = c.f_bar;
  j["epsilon"] = json_number(c.epsilon);
  j["x0"] = json_number(c.x0);
  j["y0"] = json_number(c.y0);
  j["eta_star"] = json_number(c.eta_star);
  j["slow_horizon_exact"] = json_number(c.slow_horizon_exact);
  j["slow_horizon"] = c.slow_horizon;
  j["constraints"] = Json::array({to_json(c.m_lower_bound), to_json(c.m_above_eps), to_json(c.f_bar_ratio)});
  j["constraints_ok"] = c.constraints_ok;
  j["initial_gap"] = json_number(c.initial_gap);
  j["gap_consistent"] = c.gap_consistent;
  j["horizon_below_T"] = c.horizon_below_T;
  return j;
}

Json to_json(const LemmaReport& r) {
  Json v = Json::array();
  for (const auto& x : r.violations)
    v.push_back(Json{{"k", x.k}, {"i", x.i}, {"coord", x.coord}, {"value", json_number(x.value)},
                     {"bound", json_number(x.bound)}});
  return Json{{"checks", r.checks},
              {"violation_count", r.violation_count},
              {"violations", v},
              {"max_ratio", json_number(r.max_ratio)},
              {"max_normalized_momentum", json_number(r.max_normalized_momentum)},
              {"passed", r.passed()}};
}

Json to_json(const BoundReport& r) {
  return Json{{"main_rhs", json_number(r.main_rhs)},
              {"neighborhood_rhs", json_number(r.neighborhood_rhs)},
              {"trajectory_lhs", json_number(r.trajectory_lhs)},
              {"min_grad_norm", json_number(r.min_grad_norm)},
              {"epochs", r.epochs},
              {"verdict", std::string(to_string(r.verdict))}};
}

Json to_json(const L0L1Fit& f) {
  return Json{{"L0_hat", json_number(f.L0_hat)},
              {"L1_hat", json_number(f.L1_hat)},
              {"log_log_slope", json_number(f.log_log_slope)},
              {"log_log_intercept", json_number(f.log_log_intercept)},
              {"r_squared", json_number(f.r_squared)},
              {"flat", f.flat},
              {"used", f.used}};
}

Json to_json(const AffineNoiseFit& f) {
  return Json{{"D0_hat", json_number(f.D0_hat)},
              {"D1_hat", json_number(f.D1_hat)},
              {"max_violation", json_number(f.max_violation)},
              {"sample_count", f.sample_count}};
}

Json to_json(const TerminationStatus& s) {
  return Json{{"kind", std::string(to_string(s.kind))}, {"step", s.step}};
}

std::string_view to_string(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::RRAdam: return "RRAdam";
    case OptimizerKind::GradientDescent: return "GradientDescent";
    case OptimizerKind::ClippedGradientDescent: return "ClippedGradientDescent";
  }
  return "unknown";
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj,
                          const std::vector<std::optional<SmoothnessEstimate>>* smoothness) {
  if (smoothness && smoothness->size() != traj.steps())
    throw DomainError("smoothness column length differs from the step count");
  out << "k,i,tau";
  for (std::size_t l = 0; l < traj.d(); ++l) out << ",w" << l;
  out << ",grad_norm_epoch_start,f_value,update_inf_norm";
  if (smoothness) out << ",smoothness_estimate";
  out << '\n';
  for (std::size_t s = 0; s < traj.steps(); ++s) {
    const StepRecord r = traj.step(s);
    out << r.k << ',' << r.i << ',' << r.tau;
    for (double x : r.w) out << ',' << format_double(x);
    out << ',' << format_double(r.grad_norm_epoch_start) << ',' << format_double(r.f_value) << ','
        << format_double(r.update_inf_norm());
    if (smoothness) {
      out << ',';
      if (const auto& e = (*smoothness)[s]) out << format_double(e->estimate);
    }
    out << '\n';
  }
}

Json trajectory_sidecar(const Trajectory& traj) {
  Json j;
  j["optimizer"] = std::string(to_string(traj.optimizer()));
  j["n"] = traj.n();
  j["d"] = traj.d();
  j["steps"] = traj.steps();
  j["epochs"] = traj.epochs().size();
  j["status"] = to_json(traj.status());
  j["final_w"] = vec_json(traj.final_w());
  j["eta1"] = json_number(traj.eta1());
  j["params"] = traj.adam_params() ? to_json(*traj.adam_params()) : Json(nullptr);
  j["rng"] = std::string(SplitMix64::algorithm_id);
  return j;
}

std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw Error("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot open " + path.string() + " for writing");
  f << content;
  f.close();
  if (!f) throw Error("write failed for " + path.string());
}

}  // namespace rradam
