#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "rradam/harness.hpp"

namespace {

constexpr int kPass = 0;
constexpr int kAssertionFailure = 1;
constexpr int kConfigError = 2;

struct Options {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string format = "json";
};

int run(rradam::ExperimentKind kind, const Options& opt) {
  using namespace rradam;
  ExperimentConfig cfg;
  try {
    if (opt.config.empty()) {
      cfg = default_config(kind);
    } else {
      std::ifstream f(opt.config);
      if (!f) throw ConfigError("cannot read config " + opt.config);
      Json j;
      try {
        j = Json::parse(f);
      } catch (const Json::parse_error& e) {
        throw ConfigError(opt.config + ": " + e.what());
      }
      if (!j.contains("experiment")) j["experiment"] = std::string(subcommand_name(kind));
      cfg = config_from_json(j);
      if (cfg.experiment != kind)
        throw ConfigError("config is for " + std::string(subcommand_name(cfg.experiment)) + ", not " +
                          std::string(subcommand_name(kind)));
    }
    if (opt.seed_set) {
      // keep the size of the seed set, start it at --seed
      const std::size_t count = std::max<std::size_t>(1, cfg.seeds.size());
      cfg.seeds.clear();
      for (std::size_t s = 0; s < count; ++s) cfg.seeds.push_back(opt.seed + s);
    }
    if (!opt.out.empty()) cfg.output_dir = opt.out;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }

  ExperimentReport rep;
  try {
    rep = run_experiment(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const ConstraintViolation& e) {
    std::cerr << "construction rejected: " << e.what() << " (lhs " << format_double(e.lhs()) << ", rhs "
              << format_double(e.rhs()) << ")\n";
    return kConfigError;
  } catch (const DomainError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }

  emit(rep, opt.format == "csv" ? Format::CSV : Format::JSON, cfg.output_dir);
  for (const auto& a : rep.assertions)
    std::cout << (a.passed ? "PASS " : "FAIL ") << a.name << ": " << a.detail << '\n';
  std::cout << "output: " << (cfg.output_dir / std::string(subcommand_name(kind))).string() << '\n';
  return rep.passed() ? kPass : kAssertionFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Randomly reshuffled Adam: reproductions, lower-bound constructions and diagnostics"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(rradam::kVersion));

  Options opt;
  struct Sub {
    const char* name;
    const char* help;
    rradam::ExperimentKind kind;
  };
  const Sub subs[] = {
      {"fig3", "RR-Adam on the Zhang counterexample across beta2", rradam::ExperimentKind::Fig3},
      {"thm2-diverge", "GD with eta1 >= eta* on the lower-bound landscape", rradam::ExperimentKind::Thm2Divergence},
      {"thm2-slow", "GD with eta1 < eta* on the lower-bound landscape", rradam::ExperimentKind::Thm2Slow},
      {"compare", "RR-Adam against a GD step-size grid", rradam::ExperimentKind::AdamVsGd},
      {"lemmas", "runtime checks of the bounded-update and u-gap lemmas", rradam::ExperimentKind::LemmaSuite},
      {"custom", "user-defined objective and optimizer grid", rradam::ExperimentKind::Custom},
  };
  rradam::ExperimentKind chosen = rradam::ExperimentKind::Fig3;
  for (const auto& s : subs) {
    auto* cmd = app.add_subcommand(s.name, s.help);
    cmd->add_option("--config", opt.config, "JSON experiment config")->check(CLI::ExistingFile);
    cmd->add_option("--out", opt.out, "output directory");
    cmd->add_option_function<std::uint64_t>(
        "--seed", [&](const std::uint64_t& v) { opt.seed = v; opt.seed_set = true; }, "first seed of the seed set");
    cmd->add_option("--format", opt.format, "summary format")->check(CLI::IsMember({"csv", "json"}));
    cmd->callback([&chosen, kind = s.kind] { chosen = kind; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }
  try {
    return run(chosen, opt);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  }
}
