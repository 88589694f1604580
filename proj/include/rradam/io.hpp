#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rradam/construction.hpp"
#include "rradam/landscapes.hpp"
#include "rradam/optimizers.hpp"
#include "rradam/probes.hpp"
#include "rradam/theory.hpp"

namespace rradam {

using Json = nlohmann::json;

/// Finite doubles as numbers; infinities and NaN as the strings "inf", "-inf", "nan".
Json json_number(double x);
/// Inverse of json_number. Throws ConfigError on anything else.
double number_from_json(const Json& j, const std::string& what);

/// {"kind", "n", "d", "scale", "parameters"}. Custom objectives are not serializable.
Json objective_to_json(const FiniteSumObjective& obj);
FiniteSumObjective objective_from_json(const Json& j);

Json to_json(const AdamParams& p);
/// Missing fields keep the values of `defaults`.
AdamParams adam_params_from_json(const Json& j, const AdamParams& defaults = {});

Json to_json(const TheoryConstants& tc);
Json to_json(const Thm2Construction& c);
Json to_json(const ConstraintCheck& c);
Json to_json(const LemmaReport& r);
Json to_json(const BoundReport& r);
Json to_json(const L0L1Fit& f);
Json to_json(const AffineNoiseFit& f);
Json to_json(const TerminationStatus& s);

std::string_view to_string(OptimizerKind kind);

/// Header k,i,tau,w0..w{d-1},grad_norm_epoch_start,f_value,update_inf_norm and,
/// when `smoothness` is given, a trailing smoothness_estimate column (empty
/// cell where the segment was not probed).
void write_trajectory_csv(std::ostream& out, const Trajectory& traj,
                          const std::vector<std::optional<SmoothnessEstimate>>* smoothness = nullptr);

/// Optimizer, status, final iterate and parameters of a run.
Json trajectory_sidecar(const Trajectory& traj);

/// Pretty-printed, sorted keys, trailing newline.
std::string dump_json(const Json& j);

/// Writes `content` to `path`, creating parent directories. Throws Error naming the path.
void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace rradam
