#include "fluxlim/experiment.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "fluxlim/io.hpp"

namespace fluxlim {

using nlohmann::json;

Eigen::ArrayXd InitialCondition::build(const SpatialGrid& grid) const {
  Eigen::ArrayXd x = grid.x_centers();
  Eigen::ArrayXd c(grid.nx);
  switch (type) {
    case Type::Gaussian: {
      c = (-(x - center).square() / (2.0 * width * width)).exp();
      const double m = c.sum() * grid.dx();
      c *= mass / m;
      break;
    }
    case Type::Indicator:
      for (int i = 0; i < grid.nx; ++i) c[i] = (x[i] >= a && x[i] <= b) ? height : 0.0;
      break;
    case Type::Constant:
      c.setConstant(value);
      break;
  }
  return c;
}

Eigen::ArrayXXd InitialCondition::build2(const SpatialGrid& grid) const {
  Eigen::ArrayXXd c(grid.nx, grid.ny);
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      const double x = grid.x_center(i), y = grid.y_center(j);
      switch (type) {
        case Type::Gaussian:
          c(i, j) = std::exp(-((x - center) * (x - center) + y * y) /
                             (2.0 * width * width));
          break;
        case Type::Indicator:
          c(i, j) = (x >= a && x <= b && y >= a && y <= b) ? height : 0.0;
          break;
        case Type::Constant:
          c(i, j) = value;
          break;
      }
    }
  }
  if (type == Type::Gaussian) {
    const double m = c.sum() * grid.cell_volume();
    c *= mass / m;
  }
  return c;
}

// ---------------------------------------------------------------------------
// JSON parsing
// ---------------------------------------------------------------------------

namespace {

void require_keys(const json& j, const std::string& section,
                  const std::set<std::string>& allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key()))
      throw std::invalid_argument("unknown key '" + it.key() + "' in " + section);
  }
}

InitialCondition ic_from_json(const json& j, const std::string& section) {
  require_keys(j, section,
               {"type", "center", "width", "mass", "a", "b", "height", "value"});
  InitialCondition ic;
  const std::string type = j.at("type").get<std::string>();
  if (type == "gaussian") {
    ic.type = InitialCondition::Type::Gaussian;
    ic.center = j.value("center", 0.0);
    ic.width = j.value("width", 0.5);
    ic.mass = j.value("mass", 1.0);
    if (ic.width <= 0.0) throw std::invalid_argument(section + ": width must be > 0");
  } else if (type == "indicator") {
    ic.type = InitialCondition::Type::Indicator;
    ic.a = j.value("a", -0.5);
    ic.b = j.value("b", 0.5);
    ic.height = j.value("height", 1.0);
    if (ic.b <= ic.a) throw std::invalid_argument(section + ": needs a < b");
    if (ic.height < 0.0) throw std::invalid_argument(section + ": height must be >= 0");
  } else if (type == "constant") {
    ic.type = InitialCondition::Type::Constant;
    ic.value = j.value("value", 0.0);
  } else {
    throw std::invalid_argument("unknown value '" + type + "' for key 'type' in " + section);
  }
  return ic;
}

FluxSpec flux_from_json(const json& j, const std::string& section) {
  require_keys(j, section, {"family", "params", "measure", "psi_C"});
  FluxSpec spec;
  spec.family = flux_family_from_string(j.at("family").get<std::string>());
  if (j.contains("params")) {
    for (auto it = j.at("params").begin(); it != j.at("params").end(); ++it)
      spec.params[it.key()] = it.value().get<double>();
  }
  if (j.contains("measure")) spec.measure = measure_from_json(j.at("measure"));
  if (spec.family == FluxFamily::PhiFromPsi) {
    const double C = j.value("psi_C", 2.0);
    spec.response = ResponseFunction{[C](double b) { return psi_example(b, C); },
                                     "built-in response rate"};
    if (!spec.measure)
      spec.measure = make_lebesgue({1, VelocitySetSpec::Shape::Interval, 64});
  }
  return spec;
}

SpatialGrid grid_from_json(const json& j) {
  require_keys(j, "grid",
               {"dimension", "xmin", "xmax", "ymin", "ymax", "cells", "cells_y",
                "boundary"});
  SpatialGrid g;
  g.dimension = j.value("dimension", 1);
  g.xmin = j.value("xmin", -4.0);
  g.xmax = j.value("xmax", 4.0);
  g.nx = j.value("cells", 512);
  if (g.dimension == 2) {
    g.ymin = j.value("ymin", g.xmin);
    g.ymax = j.value("ymax", g.xmax);
    g.ny = j.value("cells_y", g.nx);
  }
  const std::string bc = j.value("boundary", std::string("no-flux"));
  if (bc == "no-flux") g.boundary = Boundary::NoFlux;
  else if (bc == "periodic") g.boundary = Boundary::Periodic;
  else throw std::invalid_argument("unknown value '" + bc + "' for key 'boundary' in grid");
  g.validate();
  return g;
}

SweepPlan sweep_from_json(const json& j, const SpatialGrid& grid) {
  require_keys(j, "sweep",
               {"pairing", "eps", "final_time", "velocity_resolution", "mu", "lambda",
                "a", "F", "D_c", "C", "chi", "psi_C", "signal_amplitude", "signal_width",
                "ic_width", "ic_mass", "ic_center", "cfl_number",
                "kernel_substep_target"});
  SweepPlan plan;
  plan.pairing = pairing_from_string(j.at("pairing").get<std::string>());
  plan.grid = grid;
  if (j.contains("eps")) plan.eps_list = j.at("eps").get<std::vector<double>>();
  plan.final_time = j.value("final_time", 0.5);
  plan.velocity_resolution = j.value("velocity_resolution", 32);
  if (j.contains("mu")) plan.mu = measure_from_json(j.at("mu"));
  plan.lambda = j.value("lambda", 1.0);
  plan.a = j.value("a", 1.0);
  plan.F = j.value("F", 1.0);
  plan.D_c = j.value("D_c", 0.5);
  plan.C = j.value("C", 0.5);
  plan.chi = j.value("chi", 0.25);
  plan.psi_C = j.value("psi_C", 2.0);
  plan.signal_amplitude = j.value("signal_amplitude", 2.0);
  plan.signal_width = j.value("signal_width", 1.0);
  plan.ic_width = j.value("ic_width", 0.5);
  plan.ic_mass = j.value("ic_mass", 1.0);
  plan.ic_center = j.value("ic_center", 0.0);
  plan.cfl_number = j.value("cfl_number", 0.4);
  plan.kernel_substep_target = j.value("kernel_substep_target", 0.05);
  return plan;
}

}  // namespace

VelocityMeasure measure_from_json(const json& j) {
  require_keys(j, "measure", {"kind", "atoms", "resolution"});
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "discrete") {
    std::vector<std::pair<double, double>> atoms;
    for (const auto& pair : j.at("atoms"))
      atoms.emplace_back(pair.at(0).get<double>(), pair.at(1).get<double>());
    return make_discrete(atoms);
  }
  if (kind == "lebesgue") {
    VelocitySetSpec spec;
    spec.resolution = j.value("resolution", 32);
    return make_lebesgue(spec);
  }
  throw std::invalid_argument("unknown value '" + kind + "' for key 'kind' in measure");
}

VelocityMeasure load_measure(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read measure file: " + path);
  json j;
  in >> j;
  return measure_from_json(j);
}

ExperimentConfig config_from_json(const json& j) {
  require_keys(j, "config",
               {"name", "mode", "grid", "initial", "signal_initial",
                "amplitude_factors", "final_time", "dt_max", "front_theta",
                "diffusion_flux", "taxis_flux", "signal", "reaction", "vspace",
                "turning", "scaling", "accel", "kinetic_cfl", "dump_kinetic", "sweep",
                "correction_eps", "correction_only", "measure", "psi_phi_check",
                "output"});
  ExperimentConfig cfg;
  cfg.name = j.value("name", std::string("experiment"));

  const std::string mode = j.at("mode").get<std::string>();
  if (mode == "macro") cfg.mode = RunMode::Macro;
  else if (mode == "kinetic") cfg.mode = RunMode::Kinetic;
  else if (mode == "sweep") cfg.mode = RunMode::Sweep;
  else if (mode == "coeff-table") cfg.mode = RunMode::CoeffTable;
  else if (mode == "check") cfg.mode = RunMode::Check;
  else throw std::invalid_argument("unknown value '" + mode + "' for key 'mode'");

  if (j.contains("grid")) cfg.grid = grid_from_json(j.at("grid"));
  if (j.contains("initial")) cfg.ic = ic_from_json(j.at("initial"), "initial");
  if (j.contains("signal_initial"))
    cfg.signal_ic = ic_from_json(j.at("signal_initial"), "signal_initial");
  if (j.contains("amplitude_factors"))
    cfg.amplitude_factors = j.at("amplitude_factors").get<std::vector<double>>();
  cfg.final_time = j.value("final_time", 1.0);
  cfg.dt_max = j.value("dt_max", 0.1);
  cfg.front_theta = j.value("front_theta", 1e-3);

  if (j.contains("diffusion_flux"))
    cfg.model.diffusion = flux_from_json(j.at("diffusion_flux"), "diffusion_flux");
  if (j.contains("taxis_flux"))
    cfg.model.taxis = flux_from_json(j.at("taxis_flux"), "taxis_flux");
  if (j.contains("signal")) {
    const json& s = j.at("signal");
    require_keys(s, "signal", {"D_v", "alpha", "beta", "evolve"});
    SignalSpec sig;
    sig.D_v = s.value("D_v", 1.0);
    sig.alpha = s.value("alpha", 0.0);
    sig.beta = s.value("beta", 0.0);
    sig.evolve = s.value("evolve", true);
    if (sig.D_v < 0.0 || sig.alpha < 0.0)
      throw std::invalid_argument("signal: D_v and alpha must be >= 0");
    cfg.model.signal = sig;
  }

  if (j.contains("vspace")) cfg.vspace = measure_from_json(j.at("vspace"));
  if (j.contains("turning")) {
    const json& t = j.at("turning");
    require_keys(t, "turning", {"kind", "lambda", "mu", "psi_C", "D_c", "C", "chi"});
    TurningOperatorSpec spec;
    const std::string kind = t.at("kind").get<std::string>();
    if (kind == "relax-to-mu") spec.kind = TurningKind::RelaxToMu;
    else if (kind == "relax-uniform") spec.kind = TurningKind::RelaxUniform;
    else if (kind == "kernel-past-motion") spec.kind = TurningKind::KernelPastMotion;
    else if (kind == "kernel-anterior-posterior")
      spec.kind = TurningKind::KernelAnteriorPosterior;
    else
      throw std::invalid_argument("unknown value '" + kind + "' for key 'kind' in turning");
    spec.lambda = t.value("lambda", 1.0);
    if (spec.lambda < 0.0) throw std::invalid_argument("turning: lambda must be >= 0");
    if (t.contains("mu")) spec.mu = measure_from_json(t.at("mu"));
    if (spec.kind == TurningKind::KernelPastMotion) {
      const double C = t.value("psi_C", 2.0);
      spec.psi = ResponseFunction{[C](double b) { return psi_example(b, C); },
                                  "built-in response rate"};
    }
    spec.D_c = t.value("D_c", 1.0);
    spec.C = t.value("C", 1.0);
    spec.chi = t.value("chi", 0.0);
    cfg.turning = spec;
  }
  if (j.contains("scaling")) {
    const json& s = j.at("scaling");
    require_keys(s, "scaling", {"kind", "eps", "kernel_rescale"});
    const std::string kind = s.value("kind", std::string("none"));
    if (kind == "none") cfg.scaling.kind = ScalingKind::None;
    else if (kind == "parabolic") cfg.scaling.kind = ScalingKind::Parabolic;
    else if (kind == "hyperbolic") cfg.scaling.kind = ScalingKind::Hyperbolic;
    else throw std::invalid_argument("unknown value '" + kind + "' for key 'kind' in scaling");
    cfg.scaling.eps = s.value("eps", 1.0);
    cfg.scaling.kernel_rescale = s.value("kernel_rescale", true);
    cfg.scaling.validate();
  }
  if (j.contains("accel")) {
    const json& a = j.at("accel");
    require_keys(a, "accel", {"a", "F", "target", "C"});
    AccelSpec spec;
    spec.a = a.value("a", 1.0);
    spec.F = a.value("F", 1.0);
    spec.C = a.value("C", 1.0);
    const std::string target = a.value("target", std::string("signal"));
    if (target == "signal") spec.target = AccelSpec::Target::SignalVstar;
    else if (target == "log-density") spec.target = AccelSpec::Target::LogDensityPsi;
    else throw std::invalid_argument("unknown value '" + target + "' for key 'target' in accel");
    if (spec.a <= 0.0) throw std::invalid_argument("accel: a must be > 0");
    if (std::abs(spec.F) > 1.0 + 1e-12)
      throw std::invalid_argument("accel: |F| must be <= 1");
    cfg.accel = spec;
  }
  cfg.kinetic_cfl = j.value("kinetic_cfl", 0.4);
  cfg.dump_kinetic = j.value("dump_kinetic", false);

  if (j.contains("sweep")) cfg.sweep = sweep_from_json(j.at("sweep"), cfg.grid);
  if (j.contains("correction_eps")) cfg.correction_eps = j.at("correction_eps").get<double>();
  cfg.correction_only = j.value("correction_only", false);

  if (j.contains("measure")) cfg.measure = measure_from_json(j.at("measure"));
  cfg.psi_phi_check = j.value("psi_phi_check", false);

  if (j.contains("output")) {
    const json& o = j.at("output");
    require_keys(o, "output", {"dir", "snapshot_every", "formats"});
    cfg.output.dir = o.value("dir", std::string("out"));
    cfg.output.snapshot_every = o.value("snapshot_every", 200);
    if (o.contains("formats"))
      cfg.output.formats = o.at("formats").get<std::vector<std::string>>();
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& err) {
    throw std::invalid_argument("config is not valid JSON: " + std::string(err.what()));
  }
  return config_from_json(j);
}

void ExperimentConfig::validate() const {
  grid.validate();
  if (final_time <= 0.0) throw std::invalid_argument("final_time must be > 0");
  if (dt_max <= 0.0) throw std::invalid_argument("dt_max must be > 0");
  switch (mode) {
    case RunMode::Macro: {
      model.validate();
      Eigen::ArrayXd c0 = ic.build(grid);
      if (grid.dimension == 1 && c0.sum() * grid.dx() <= 0.0)
        throw std::invalid_argument("macro mode: initial mass must be > 0");
      for (double f : amplitude_factors)
        if (f <= 0.0) throw std::invalid_argument("amplitude factors must be > 0");
      break;
    }
    case RunMode::Kinetic:
      if (!vspace || !turning)
        throw std::invalid_argument("kinetic mode: vspace and turning required");
      if (grid.dimension != 1)
        throw std::invalid_argument("kinetic mode: 1D grids only");
      scaling.validate();
      break;
    case RunMode::Sweep:
      if (!sweep) throw std::invalid_argument("sweep mode: sweep block required");
      sweep->validate();
      if (correction_only && !correction_eps)
        throw std::invalid_argument("correction_only requires correction_eps");
      break;
    case RunMode::CoeffTable:
      break;
    case RunMode::Check:
      if (!measure && !psi_phi_check)
        throw std::invalid_argument("check mode: measure required");
      break;
  }
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

std::vector<std::string> preset_names() {
  return {"rh-front",      "pm-contrast",     "ks-classic",  "ksfs-tanh",
          "new-fullfl",    "sweep-relax-mu",  "sweep-pastmotion", "sweep-accel",
          "hyp-drift",     "fsg-tanh",        "coeff-table", "psi-phi-check"};
}

ExperimentConfig preset(const std::string& name) {
  ExperimentConfig cfg;
  cfg.name = name;
  cfg.output.dir = "out/" + name;

  auto front_grid = [] {
    SpatialGrid g;
    g.nx = 512;
    g.xmin = -4.0;
    g.xmax = 4.0;
    return g;
  };
  auto indicator_ic = [] {
    InitialCondition ic;
    ic.type = InitialCondition::Type::Indicator;
    ic.a = -0.5;
    ic.b = 0.5;
    ic.height = 1.0;
    return ic;
  };
  auto flux = [](FluxFamily fam, std::map<std::string, double> params) {
    FluxSpec f;
    f.family = fam;
    f.params = std::move(params);
    return f;
  };
  auto sweep_base = [&](PairingKind pairing) {
    SweepPlan plan;
    plan.pairing = pairing;
    plan.grid = front_grid();
    return plan;
  };

  if (name == "rh-front") {
    cfg.mode = RunMode::Macro;
    cfg.grid = front_grid();
    cfg.ic = indicator_ic();
    cfg.final_time = 1.5;
    cfg.amplitude_factors = {1.0, 2.0};
    cfg.model.diffusion = flux(FluxFamily::Relativistic, {{"D_c", 1.0}, {"C", 1.0}});
    cfg.output.snapshot_every = 200;
  } else if (name == "pm-contrast") {
    cfg.mode = RunMode::Macro;
    cfg.grid = front_grid();
    cfg.ic = indicator_ic();
    cfg.final_time = 1.5;
    cfg.amplitude_factors = {1.0, 2.0};
    cfg.model.diffusion = flux(FluxFamily::PorousMedium, {{"D_c", 1.0}, {"m", 2.0}});
    cfg.output.snapshot_every = 100;
  } else if (name == "ks-classic") {
    cfg.mode = RunMode::Macro;
    cfg.grid = front_grid();
    cfg.ic.type = InitialCondition::Type::Gaussian;
    cfg.ic.width = 0.5;
    cfg.ic.mass = 2.0;
    cfg.final_time = 0.5;
    cfg.model.diffusion = flux(FluxFamily::LinearDiffusion, {{"D_c", 1.0}});
    cfg.model.taxis = flux(FluxFamily::LinearTaxis, {{"chi", 1.0}});
    cfg.model.signal = SignalSpec{1.0, 1.0, 1.0, true};
    InitialCondition s0;
    s0.type = InitialCondition::Type::Constant;
    s0.value = 0.0;
    cfg.signal_ic = s0;
    cfg.output.snapshot_every = 400;
  } else if (name == "ksfs-tanh") {
    cfg = preset("ks-classic");
    cfg.name = name;
    cfg.output.dir = "out/" + name;
    cfg.model.taxis = flux(FluxFamily::TanhTaxis, {{"chi", 1.0}, {"C", 1.0}});
  } else if (name == "new-fullfl") {
    cfg.mode = RunMode::Macro;
    cfg.grid = front_grid();
    cfg.ic = indicator_ic();
    cfg.final_time = 1.5;
    cfg.model.diffusion = flux(FluxFamily::Relativistic, {{"D_c", 1.0}, {"C", 1.0}});
    cfg.model.taxis = flux(FluxFamily::PsiSaturated, {{"chi", 0.5}, {"C", 1.0}});
    cfg.model.signal = SignalSpec{1.0, 1.0, 1.0, true};
    InitialCondition s0;
    s0.type = InitialCondition::Type::Constant;
    s0.value = 0.0;
    cfg.signal_ic = s0;
    cfg.output.snapshot_every = 200;
  } else if (name == "sweep-relax-mu") {
    cfg.mode = RunMode::Sweep;
    cfg.grid = front_grid();
    cfg.sweep = sweep_base(PairingKind::RelaxToMuDiffusion);
    cfg.sweep->lambda = 1.0;
    cfg.sweep->cfl_number = 1.0;  // two atoms at +-1: unit CFL is the exact shift
  } else if (name == "sweep-pastmotion") {
    cfg.mode = RunMode::Sweep;
    cfg.grid = front_grid();
    cfg.sweep = sweep_base(PairingKind::PastMotionFSC);
    cfg.sweep->lambda = 0.5;
  } else if (name == "sweep-accel") {
    cfg.mode = RunMode::Sweep;
    cfg.grid = front_grid();
    cfg.sweep = sweep_base(PairingKind::AccelDif2);
    cfg.sweep->lambda = 1.0;
    cfg.sweep->a = 1.0;
  } else if (name == "hyp-drift") {
    cfg.mode = RunMode::Sweep;
    cfg.grid = front_grid();
    cfg.sweep = sweep_base(PairingKind::AccelHyp);
  } else if (name == "fsg-tanh") {
    cfg.mode = RunMode::Sweep;
    cfg.grid = front_grid();
    cfg.sweep = sweep_base(PairingKind::RelaxToMuDiffusion);
    cfg.sweep->cfl_number = 1.0;
    cfg.correction_eps = 0.1;
    cfg.correction_only = true;
  } else if (name == "coeff-table") {
    cfg.mode = RunMode::CoeffTable;
  } else if (name == "psi-phi-check") {
    cfg.mode = RunMode::Check;
    cfg.psi_phi_check = true;
    cfg.measure = make_lebesgue({1, VelocitySetSpec::Shape::Interval, 128});
  } else {
    throw std::invalid_argument("unknown preset: " + name);
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// Run dispatch
// ---------------------------------------------------------------------------

namespace {

json diag_line(double t, double mass, double min_c, double max_c,
               const std::optional<FrontInterval>& front) {
  json j;
  j["t"] = t;
  j["mass"] = mass;
  j["min_c"] = min_c;
  j["max_c"] = max_c;
  if (front) {
    j["front_left"] = front->left;
    j["front_right"] = front->right;
  } else {
    j["front_left"] = nullptr;
    j["front_right"] = nullptr;
  }
  return j;
}

void write_macro_outputs(OutputWriter& writer, const std::string& tag,
                         const Trajectory& traj, const SpatialGrid& grid,
                         const OutputSpec& out, double theta_abs, bool has_signal) {
  if (out.wants("csv")) {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    if (grid.dimension == 1) {
      header = has_signal ? std::vector<std::string>{"t", "x", "c", "S"}
                          : std::vector<std::string>{"t", "x", "c"};
      for (const auto& snap : traj.snapshots) {
        for (int i = 0; i < grid.nx; ++i) {
          std::vector<std::string> row{format_double(snap.t),
                                       format_double(grid.x_center(i)),
                                       format_double(snap.c(i, 0))};
          if (has_signal) row.push_back(format_double(snap.S(i, 0)));
          rows.push_back(std::move(row));
        }
      }
    } else {
      header = has_signal ? std::vector<std::string>{"t", "x", "y", "c", "S"}
                          : std::vector<std::string>{"t", "x", "y", "c"};
      for (const auto& snap : traj.snapshots) {
        for (int j = 0; j < grid.ny; ++j) {
          for (int i = 0; i < grid.nx; ++i) {
            std::vector<std::string> row{
                format_double(snap.t), format_double(grid.x_center(i)),
                format_double(grid.y_center(j)), format_double(snap.c(i, j))};
            if (has_signal) row.push_back(format_double(snap.S(i, j)));
            rows.push_back(std::move(row));
          }
        }
      }
    }
    writer.write_csv("snapshots" + tag + ".csv", header, rows);
  }
  if (out.wants("jsonl") && grid.dimension == 1) {
    std::string lines;
    for (const auto& snap : traj.snapshots) {
      Eigen::ArrayXd col = snap.c.col(0);
      auto front = front_position(col, grid, theta_abs);
      lines += diag_line(snap.t, total_mass(col, grid), col.minCoeff(), col.maxCoeff(),
                         front)
                   .dump() +
               "\n";
    }
    writer.write_text("diagnostics" + tag + ".jsonl", lines);
  }
  if (out.wants("svg") && grid.dimension == 1) {
    std::vector<OutputWriter::Series> series;
    const std::size_t stride = std::max<std::size_t>(1, traj.snapshots.size() / 6);
    for (std::size_t k = 0; k < traj.snapshots.size(); k += stride) {
      OutputWriter::Series s;
      s.label = "t=" + format_double(traj.snapshots[k].t);
      for (int i = 0; i < grid.nx; ++i) {
        s.x.push_back(grid.x_center(i));
        s.y.push_back(traj.snapshots[k].c(i, 0));
      }
      series.push_back(std::move(s));
    }
    writer.write_svg_lines("snapshots" + tag + ".svg", "density snapshots", series);
  }
}

RunSummary run_macro(const ExperimentConfig& cfg, OutputWriter& writer) {
  RunSummary summary;
  summary.name = cfg.name;
  json factors_json = json::array();

  for (double factor : cfg.amplitude_factors) {
    MacroState st;
    st.t = 0.0;
    if (cfg.grid.dimension == 1) {
      st.c.resize(cfg.grid.nx, 1);
      st.c.col(0) = cfg.ic.build(cfg.grid) * factor;
    } else {
      st.c = cfg.ic.build2(cfg.grid) * factor;
    }
    if (cfg.model.signal) {
      if (cfg.grid.dimension == 1) {
        st.S.resize(cfg.grid.nx, 1);
        st.S.col(0) = cfg.signal_ic ? cfg.signal_ic->build(cfg.grid)
                                    : Eigen::ArrayXd::Zero(cfg.grid.nx);
      } else {
        st.S = cfg.signal_ic ? cfg.signal_ic->build2(cfg.grid)
                             : Eigen::ArrayXXd::Zero(cfg.grid.nx, cfg.grid.ny);
      }
    }
    SolveOptions opt;
    opt.final_time = cfg.final_time;
    opt.snapshot_every = cfg.output.snapshot_every;
    opt.dt_max = cfg.dt_max;
    opt.front_theta = cfg.front_theta;
    Trajectory traj = solve(st, cfg.model, cfg.grid, opt);

    const std::string tag =
        cfg.amplitude_factors.size() > 1 ? "_x" + format_double(factor) : "";
    write_macro_outputs(writer, tag, traj, cfg.grid, cfg.output,
                        cfg.front_theta * traj.c0_max, st.has_signal());

    summary.max_step_mass_drift =
        std::max(summary.max_step_mass_drift, traj.max_step_mass_drift);
    summary.min_c_seen = std::min(summary.min_c_seen, traj.min_c_seen);
    summary.steps += traj.steps;

    json f;
    f["amplitude_factor"] = factor;
    f["steps"] = traj.steps;
    f["max_step_mass_drift"] = traj.max_step_mass_drift;
    f["min_c"] = traj.min_c_seen;
    if (cfg.grid.dimension == 1 && traj.fronts.size() >= 5) {
      const double vr = front_speed(traj.fronts);
      const double vl = front_speed_left(traj.fronts);
      summary.front_speeds.push_back(vr);
      summary.front_speeds_left.push_back(vl);
      f["front_speed_right"] = vr;
      f["front_speed_left"] = vl;
    }
    factors_json.push_back(f);
  }

  json summary_json;
  summary_json["name"] = cfg.name;
  summary_json["runs"] = factors_json;
  writer.write_json("summary.json", summary_json);
  return summary;
}

RunSummary run_kinetic(const ExperimentConfig& cfg, OutputWriter& writer) {
  RunSummary summary;
  summary.name = cfg.name;
  KineticRunConfig kin;
  kin.grid = cfg.grid;
  kin.vspace = *cfg.vspace;
  kin.turning = *cfg.turning;
  kin.scaling = cfg.scaling;
  kin.accel = cfg.accel;
  kin.final_time = cfg.final_time;
  kin.cfl_number = cfg.kinetic_cfl;
  kin.snapshot_every = cfg.output.snapshot_every;
  if (cfg.signal_ic) kin.S = cfg.signal_ic->build(cfg.grid);

  Eigen::ArrayXd c0 = cfg.ic.build(cfg.grid);
  KineticTrajectory traj = kinetic_solve(kin, c0);
  summary.max_step_mass_drift = traj.max_step_mass_drift;
  summary.min_c_seen = traj.min_f_seen;
  summary.steps = traj.steps;

  if (cfg.output.wants("csv")) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& [t, cbar] : traj.cbar_snapshots) {
      for (int i = 0; i < cfg.grid.nx; ++i)
        rows.push_back({format_double(t), format_double(cfg.grid.x_center(i)),
                        format_double(cbar[i])});
    }
    writer.write_csv("moments.csv", {"t", "x", "c"}, rows);
  }
  if (cfg.output.wants("jsonl")) {
    std::string lines;
    for (const auto& [t, cbar] : traj.cbar_snapshots) {
      lines += diag_line(t, cbar.sum() * cfg.grid.dx(), cbar.minCoeff(),
                         cbar.maxCoeff(), std::nullopt)
                   .dump() +
               "\n";
    }
    writer.write_text("diagnostics.jsonl", lines);
  }
  json s;
  s["name"] = cfg.name;
  s["steps"] = traj.steps;
  s["max_step_mass_drift"] = traj.max_step_mass_drift;
  s["min_density"] = traj.min_f_seen;
  writer.write_json("summary.json", s);
  return summary;
}

RunSummary run_sweep_mode(const ExperimentConfig& cfg, OutputWriter& writer) {
  RunSummary summary;
  summary.name = cfg.name;
  if (!cfg.correction_only) {
    SweepReport report = run_sweep(*cfg.sweep);
    summary.sweep_report = report;
    writer.write_json("report.json", to_json(report));
    for (const auto& leg : report.legs) {
      if (!leg.ok) continue;
      summary.max_step_mass_drift = std::max(summary.max_step_mass_drift, leg.mass_drift);
      summary.min_c_seen = std::min(summary.min_c_seen, leg.min_f);
      summary.steps += leg.kinetic_steps;
    }
    summary.max_step_mass_drift =
        std::max(summary.max_step_mass_drift, report.macro_mass_drift);
    summary.min_c_seen = std::min(summary.min_c_seen, report.macro_min_c);
    if (cfg.output.wants("svg")) {
      OutputWriter::Series s;
      s.label = to_string(report.pairing);
      for (const auto& leg : report.legs) {
        if (!leg.ok) continue;
        s.x.push_back(leg.eps);
        s.y.push_back(leg.error_l1);
      }
      writer.write_svg_lines("errors.svg", "L1 error against eps (log-log)", {s}, true);
    }
  }
  if (cfg.correction_eps) {
    CorrectionReport corr = first_order_correction_check(*cfg.sweep, *cfg.correction_eps);
    summary.correction_report = corr;
    writer.write_json("correction.json", to_json(corr));
  }
  return summary;
}

RunSummary run_coeff_table(const ExperimentConfig& cfg, OutputWriter& writer) {
  RunSummary summary;
  summary.name = cfg.name;
  const VelocityMeasure two_atoms = make_discrete({{-1.0, 0.5}, {1.0, 0.5}});
  const VelocityMeasure lebesgue = make_lebesgue({1, VelocitySetSpec::Shape::Interval, 32});

  struct Row {
    std::string label;
    VelocityMeasure mu;
    double lambda;
    std::optional<double> a;
  };
  const std::vector<Row> cases = {
      {"two-atoms lambda=2", two_atoms, 2.0, std::nullopt},
      {"lebesgue-32 lambda=1", lebesgue, 1.0, std::nullopt},
      {"accel a=1 lambda=1", lebesgue, 1.0, 1.0},
  };

  std::vector<std::vector<std::string>> rows;
  json jout = json::array();
  for (const auto& cs : cases) {
    MacroCoefficients mc = macro_coefficients(cs.mu, cs.lambda, cs.a);
    rows.push_back({cs.label, format_double(mc.D_relax), format_double(mc.D_uniform),
                    mc.accel_diffusion ? format_double(*mc.accel_diffusion) : "",
                    mc.accel_drift ? format_double(*mc.accel_drift) : ""});
    json jc;
    jc["case"] = cs.label;
    jc["D_relax"] = mc.D_relax;
    jc["D_uniform"] = mc.D_uniform;
    if (mc.accel_diffusion) {
      jc["accel_diffusion"] = *mc.accel_diffusion;
      jc["accel_drift"] = *mc.accel_drift;
    }
    jout.push_back(jc);
  }
  writer.write_csv("coeff_table.csv",
                   {"case", "D_relax", "D_uniform", "accel_diffusion", "accel_drift"},
                   rows);
  writer.write_json("coefficients.json", jout);
  return summary;
}

bool is_two_unit_atoms(const VelocityMeasure& mu) {
  return mu.kind == MeasureKind::DiscreteAtoms && mu.size() == 2 &&
         std::abs(mu.nodes[0] + 1.0) < 1e-14 && std::abs(mu.nodes[1] - 1.0) < 1e-14 &&
         std::abs(mu.weights[0] - 0.5) < 1e-14 && std::abs(mu.weights[1] - 0.5) < 1e-14;
}

RunSummary run_check(const ExperimentConfig& cfg, OutputWriter& writer) {
  RunSummary summary;
  summary.name = cfg.name;
  json checks;

  if (cfg.measure) {
    const VelocityMeasure& mu = *cfg.measure;
    checks["weights_sum"] = mu.weights.sum();
    checks["symmetric"] = mu.symmetric;

    // G table over [-50, 50], with the closed form where one is known
    const bool tanh_case = is_two_unit_atoms(mu);
    const bool coth_case = mu.kind == MeasureKind::ContinuousQuadrature;
    std::vector<std::vector<std::string>> rows;
    double max_err = 0.0;
    const int npts = 401;
    for (int k = 0; k < npts; ++k) {
      const double beta = -50.0 + 100.0 * k / (npts - 1);
      const double g = g_of(mu, beta);
      std::vector<std::string> row{format_double(beta), format_double(g)};
      if (tanh_case) {
        const double ref = std::tanh(beta);
        row.push_back(format_double(ref));
        max_err = std::max(max_err, std::abs(g - ref));
      } else if (coth_case) {
        const double ref = beta == 0.0 ? 0.0 : 1.0 / std::tanh(beta) - 1.0 / beta;
        row.push_back(format_double(ref));
        max_err = std::max(max_err, std::abs(g - ref));
      }
      rows.push_back(std::move(row));
    }
    std::vector<std::string> header{"beta", "g"};
    if (tanh_case) header.push_back("tanh");
    else if (coth_case) header.push_back("coth_minus_inv");
    writer.write_csv("g_table.csv", header, rows);
    summary.check_max_error = max_err;
    checks["g_closed_form_max_err"] = max_err;

    Eigen::ArrayXd betas = Eigen::ArrayXd::LinSpaced(201, -50.0, 50.0);
    CheckReport props = check_g_properties(mu, betas);
    json jprops = json::array();
    for (const auto& item : props.items)
      jprops.push_back({{"name", item.name}, {"pass", item.pass}, {"value", item.value}});
    checks["g_properties"] = jprops;
    checks["g_properties_passed"] = props.passed();
    summary.checks_passed = summary.checks_passed && props.passed();

    CheckReport mom = moment_condition_test(
        [&mu](double b) { return g_of(mu, b); }, {2, 4});
    json jmom = json::array();
    for (const auto& item : mom.items)
      jmom.push_back({{"name", item.name}, {"pass", item.pass}, {"value", item.value}});
    checks["moment_condition"] = jmom;
    summary.checks_passed = summary.checks_passed && mom.passed();
  }

  if (cfg.psi_phi_check) {
    const VelocityMeasure mu =
        cfg.measure ? *cfg.measure
                    : make_lebesgue({1, VelocitySetSpec::Shape::Interval, 128});
    ResponseFunction psi{[](double b) { return psi_example(b, 2.0); },
                         "built-in response rate, C = 2"};
    auto target = [](double b) { return b / std::sqrt(1.0 + b * b); };
    Eigen::ArrayXd fit_grid = Eigen::ArrayXd::LinSpaced(101, 0.0, 10.0);
    const double lambda = calibrate_lambda(psi, mu, fit_grid, target);

    std::vector<std::vector<std::string>> rows;
    for (int k = 0; k <= 200; ++k) {
      const double beta = -10.0 + 0.1 * k;
      rows.push_back({format_double(beta),
                      format_double(phi_from_psi(psi, lambda, mu, beta)),
                      format_double(target(beta))});
    }
    writer.write_csv("phi_table.csv", {"beta", "phi", "target"}, rows);

    double max_err = 0.0;
    json errs;
    for (double beta : {0.1, 1.0, 10.0}) {
      const double err = std::abs(phi_from_psi(psi, lambda, mu, beta) - target(beta));
      errs[format_double(beta)] = err;
      max_err = std::max(max_err, err);
    }
    checks["phi_psi"] = {{"lambda", lambda},
                         {"errors", errs},
                         {"max_error", max_err},
                         {"pass", max_err <= 1e-6}};
    summary.check_max_error = std::max(summary.check_max_error, max_err);
    summary.checks_passed = summary.checks_passed && (max_err <= 1e-6);
  }

  writer.write_json("checks.json", checks);
  return summary;
}

}  // namespace

RunSummary run_experiment(const ExperimentConfig& cfg, const std::string& out_override) {
  cfg.validate();  // throws before any output exists
  OutputWriter writer(out_override.empty() ? cfg.output.dir : out_override);
  RunSummary summary;
  switch (cfg.mode) {
    case RunMode::Macro: summary = run_macro(cfg, writer); break;
    case RunMode::Kinetic: summary = run_kinetic(cfg, writer); break;
    case RunMode::Sweep: summary = run_sweep_mode(cfg, writer); break;
    case RunMode::CoeffTable: summary = run_coeff_table(cfg, writer); break;
    case RunMode::Check: summary = run_check(cfg, writer); break;
  }
  writer.write_manifest();
  return summary;
}

}  // namespace fluxlim
