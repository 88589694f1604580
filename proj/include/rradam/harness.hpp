#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rradam/io.hpp"

namespace rradam {

inline constexpr std::string_view kVersion = "1.0.0";

enum class ExperimentKind { Fig3, Thm2Divergence, Thm2Slow, AdamVsGd, LemmaSuite, Custom };

std::string_view to_string(ExperimentKind kind);
/// Accepts the enum names and the CLI subcommand names.
ExperimentKind experiment_kind_from_string(std::string_view name);
/// Directory and subcommand name: fig3, thm2-diverge, thm2-slow, compare, lemmas, custom.
std::string_view subcommand_name(ExperimentKind kind);

struct ConstructionConfig {
  double L0 = 1.0;
  double L1 = 1.0;
  double T = 1e4;
  double M = 100.0;
  /// Unset: f(w0) - min f of the landscape itself, M/L1 - L0/(2 L1^2).
  std::optional<double> f_bar;
};

struct ProbeConfig {
  bool enabled = false;
  double alpha = 0.1;
  std::size_t stride = 1;
};

enum class CustomOptimizer { RRAdam, GradientDescent, ClippedGradientDescent };

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::Fig3;
  /// Objective document; unset selects the experiment's landscape.
  std::optional<Json> objective;
  /// Starting point; unset selects the experiment's default.
  std::optional<Vec> w0;
  /// Base optimizer parameters; grid values override beta1 / beta2 / eta1.
  AdamParams adam;
  std::vector<double> beta1_grid;
  std::vector<double> beta2_grid;
  /// Multiples of eta* (lower-bound GD modes, GD arm of the comparison).
  std::vector<double> eta_multipliers;
  /// Plain eta1 values (custom experiment).
  std::vector<double> eta1_grid;
  std::vector<std::uint64_t> seeds;
  ConstructionConfig construction;
  ProbeConfig probe;
  /// Epoch budget within which Adam must push ||grad f|| below epsilon (comparison).
  std::size_t adam_budget = 10000;
  CustomOptimizer optimizer = CustomOptimizer::RRAdam;
  double clip_threshold = 1.0;
  /// 0 = as many workers as OpenMP offers.
  std::size_t workers = 0;
  Exec exec = Exec::OpenMP;
  /// Nonzero: execute the sweep in an order shuffled with this seed. Reports do not change.
  std::uint64_t sweep_shuffle = 0;
  /// Keep per-run trajectories for trajectory.csv output.
  bool keep_trajectories = true;
  std::filesystem::path output_dir = "results";
};

/// Defaults of each named experiment.
ExperimentConfig default_config(ExperimentKind kind);
/// Fields present in `j` override default_config(experiment). Throws ConfigError.
ExperimentConfig config_from_json(const Json& j);
Json to_json(const ExperimentConfig& c);

struct RunSummary {
  /// Deterministic identity built from the grid point and seed; also the output directory.
  std::string label;
  std::string optimizer;
  std::map<std::string, Json> params;
  bool skipped = false;
  std::string skip_reason;
  TerminationStatus status;
  std::size_t epochs_run = 0;
  /// Mean of ||grad f(w_{k,0})|| over the last 10% of epochs.
  double terminal_grad = 0.0;
  std::optional<double> progress_metric;
  std::optional<LemmaReport> bounded_update;
  std::optional<LemmaReport> u_gap;
  std::optional<BoundReport> bound;
  /// Experiment-specific scalars, e.g. growth ratios or crossing epochs.
  std::map<std::string, Json> metrics;

  std::shared_ptr<const Trajectory> trajectory;
  std::shared_ptr<const std::vector<std::optional<SmoothnessEstimate>>> smoothness;
};

Json to_json(const RunSummary& r);

struct Assertion {
  std::string name;
  bool passed = false;
  std::string detail;
  /// Labels of the runs the assertion draws on.
  std::vector<std::string> runs;
};

struct PlotSeries {
  std::string name;
  std::string x_label;
  std::string y_label;
  std::vector<std::pair<double, double>> points;
};

struct ExperimentReport {
  ExperimentKind experiment = ExperimentKind::Fig3;
  Json config;
  /// Sorted by label.
  std::vector<RunSummary> runs;
  std::vector<Assertion> assertions;
  std::vector<PlotSeries> plots;
  /// Experiment-level records (theory constants, construction, grid tables).
  std::map<std::string, Json> extras;

  bool passed() const noexcept;
  const RunSummary* find(std::string_view label) const;
};

/// Report body without timestamps or trajectories.
Json to_json(const ExperimentReport& r);

/// Mean over the last ceil(10%) of epoch snapshots; NaN without snapshots.
double terminal_tail_mean(const Trajectory& traj);

/// FNV-1a of the label: the run-id of the run's random stream.
std::uint64_t run_id_for(std::string_view label);

using RunTask = std::function<RunSummary()>;

/// Runs every task and returns the summaries sorted by label. Each run owns
/// its buffers; the merge happens after all runs finish.
std::vector<RunSummary> execute_sweep(std::vector<RunTask> tasks, std::size_t workers, Exec exec,
                                      std::uint64_t shuffle_seed = 0);

ExperimentReport run_fig3(const ExperimentConfig& config);
ExperimentReport run_thm2(const ExperimentConfig& config);
ExperimentReport run_comparison(const ExperimentConfig& config);
ExperimentReport run_lemma_suite(const ExperimentConfig& config);
ExperimentReport run_custom(const ExperimentConfig& config);
/// Dispatches on config.experiment.
ExperimentReport run_experiment(const ExperimentConfig& config);

enum class Format { CSV, JSON };

/// Writes <out>/<experiment>/report.{json|csv}, per-run directories with
/// trajectory.csv, trajectory.json and summary.json, plot CSVs under plots/,
/// and a timestamped run_info.json. Everything but run_info.json is a pure
/// function of the report.
void emit(const ExperimentReport& report, Format format, const std::filesystem::path& out);

/// Sweep-level CSV: one row per run, fixed columns.
std::string runs_csv(const ExperimentReport& r);
std::string plot_csv(const PlotSeries& p);

}  // namespace rradam
