#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "fluxlim/kinetic.hpp"
#include "fluxlim/macro.hpp"
#include "fluxlim/upscale.hpp"

namespace fluxlim {

enum class RunMode { Macro, Kinetic, Sweep, CoeffTable, Check };

struct InitialCondition {
  enum class Type { Gaussian, Indicator, Constant } type = Type::Gaussian;
  double center = 0.0, width = 0.5, mass = 1.0;  // gaussian
  double a = -0.5, b = 0.5, height = 1.0;        // indicator
  double value = 0.0;                            // constant

  Eigen::ArrayXd build(const SpatialGrid& grid) const;
  Eigen::ArrayXXd build2(const SpatialGrid& grid) const;
};

struct OutputSpec {
  std::string dir = "out";
  int snapshot_every = 200;
  std::vector<std::string> formats = {"csv", "jsonl"};

  bool wants(const std::string& fmt) const {
    for (const auto& f : formats)
      if (f == fmt) return true;
    return false;
  }
};

/// Full declarative description of one run.  Parsed from JSON; presets are
/// built-in instances.
struct ExperimentConfig {
  std::string name = "experiment";
  RunMode mode = RunMode::Macro;
  SpatialGrid grid;
  InitialCondition ic;
  std::optional<InitialCondition> signal_ic;
  std::vector<double> amplitude_factors = {1.0};
  double final_time = 1.0;
  double dt_max = 0.1;
  double front_theta = 1e-3;

  ModelSpec model;  // macro mode

  // kinetic mode
  std::optional<VelocityMeasure> vspace;
  std::optional<TurningOperatorSpec> turning;
  ScalingSpec scaling;
  std::optional<AccelSpec> accel;
  double kinetic_cfl = 0.4;
  bool dump_kinetic = false;

  // sweep mode
  std::optional<SweepPlan> sweep;
  std::optional<double> correction_eps;  // run the first-order correction check
  bool correction_only = false;          // skip the eps sweep itself

  // check mode
  std::optional<VelocityMeasure> measure;
  bool psi_phi_check = false;

  OutputSpec output;

  void validate() const;
};

/// Parsers for the external JSON schemas.  Unknown tags throw
/// std::invalid_argument naming the offending key.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);
VelocityMeasure measure_from_json(const nlohmann::json& j);
VelocityMeasure load_measure(const std::string& path);

/// Built-in presets, in their canonical order.
std::vector<std::string> preset_names();
ExperimentConfig preset(const std::string& name);

/// Summary of one completed run, also written to summary.json.
struct RunSummary {
  std::string name;
  double max_step_mass_drift = 0.0;
  double min_c_seen = 0.0;
  long steps = 0;
  std::vector<double> front_speeds;       // per amplitude factor (macro mode)
  std::vector<double> front_speeds_left;  // per amplitude factor
  std::optional<SweepReport> sweep_report;
  std::optional<CorrectionReport> correction_report;
  double check_max_error = 0.0;  // check mode: worst closed-form deviation
  bool checks_passed = true;
};

/// Executes a validated config, writing every artifact (and manifest.json)
/// under the output directory.  Throws std::invalid_argument for config
/// problems (before any file is created) and SolverError for solver failures.
RunSummary run_experiment(const ExperimentConfig& config,
                          const std::string& out_override = "");

}  // namespace fluxlim
