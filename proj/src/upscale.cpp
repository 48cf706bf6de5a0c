#include "fluxlim/upscale.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

namespace fluxlim {

std::string to_string(PairingKind kind) {
  switch (kind) {
    case PairingKind::RelaxToMuDiffusion: return "relax-to-mu";
    case PairingKind::PastMotionFSC: return "past-motion";
    case PairingKind::AnteriorPosteriorNewc: return "anterior-posterior";
    case PairingKind::AccelDif2: return "accel-parabolic";
    case PairingKind::AccelHyp: return "accel-hyperbolic";
  }
  return "?";
}

PairingKind pairing_from_string(const std::string& tag) {
  if (tag == "relax-to-mu") return PairingKind::RelaxToMuDiffusion;
  if (tag == "past-motion") return PairingKind::PastMotionFSC;
  if (tag == "anterior-posterior") return PairingKind::AnteriorPosteriorNewc;
  if (tag == "accel-parabolic") return PairingKind::AccelDif2;
  if (tag == "accel-hyperbolic") return PairingKind::AccelHyp;
  throw std::invalid_argument("unknown pairing tag: " + tag);
}

MacroCoefficients macro_coefficients(const VelocityMeasure& mu, double lambda,
                                     std::optional<double> a, int n) {
  if (lambda <= 0.0) throw std::invalid_argument("macro_coefficients: lambda must be > 0");
  MacroCoefficients out;
  out.D_relax = moment(mu, 2) / lambda;
  // (1/(lambda |V|)) int_{-1}^{1} v^2 dv = (1/(2 lambda)) (2/3)
  out.D_uniform = 1.0 / (3.0 * lambda);
  if (a) {
    const double av = *a;
    out.accel_diffusion =
        lambda / ((2.0 * av + lambda) * (av + lambda)) * n / (n + 2.0);
    out.accel_drift = av / (av + lambda);
  }
  return out;
}

double dif2_taxis_flux(double c, double grad_S, double a, double lambda, double F) {
  return a / (a + lambda) * c * F * grad_S;
}

double dif3_taxis_flux(double c, double grad_S, double a, double lambda, double F,
                       double eps) {
  return a / (a + lambda) * c * F * grad_S / (1.0 + eps * std::abs(grad_S));
}

void SweepPlan::validate() const {
  if (eps_list.size() < 3)
    throw std::invalid_argument("SweepPlan: need at least 3 eps values");
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    if (eps_list[i] <= 0.0 || eps_list[i] > 1.0)
      throw std::invalid_argument("SweepPlan: eps values must lie in (0,1]");
    if (i > 0 && eps_list[i] >= eps_list[i - 1])
      throw std::invalid_argument("SweepPlan: eps values must be strictly decreasing");
  }
  grid.validate();
  if (grid.dimension != 1)
    throw std::invalid_argument("SweepPlan: sweeps are 1D");
}

Eigen::ArrayXd gaussian_profile(const SpatialGrid& grid, double center, double width,
                                double mass) {
  Eigen::ArrayXd x = grid.x_centers();
  Eigen::ArrayXd c = (-(x - center).square() / (2.0 * width * width)).exp();
  const double m = c.sum() * grid.dx();
  return c * (mass / m);
}

Eigen::ArrayXd sweep_signal_field(const SweepPlan& plan) {
  Eigen::ArrayXd x = plan.grid.x_centers();
  return plan.signal_amplitude *
         (-(x.square()) / (2.0 * plan.signal_width * plan.signal_width)).exp();
}

namespace {

struct PairingSetup {
  KineticRunConfig kinetic;
  ModelSpec macro;
  Eigen::ArrayXd S;  // empty when unused
  MacroCoefficients coeffs;
};

PairingSetup build_pairing(const SweepPlan& plan, double eps) {
  PairingSetup setup;
  setup.kinetic.grid = plan.grid;
  setup.kinetic.final_time = plan.final_time;
  setup.kinetic.cfl_number = plan.cfl_number;
  setup.kinetic.kernel_substep_target = plan.kernel_substep_target;

  const VelocityMeasure lebesgue = make_lebesgue({1, VelocitySetSpec::Shape::Interval,
                                                  plan.velocity_resolution});

  switch (plan.pairing) {
    case PairingKind::RelaxToMuDiffusion: {
      VelocityMeasure mu = plan.mu ? *plan.mu
                                   : make_discrete({{-1.0, 0.5}, {1.0, 0.5}});
      setup.kinetic.vspace = mu;
      setup.kinetic.turning.kind = TurningKind::RelaxToMu;
      setup.kinetic.turning.lambda = plan.lambda;
      setup.kinetic.turning.mu = mu;
      setup.kinetic.scaling = {ScalingKind::Parabolic, eps, false};
      setup.coeffs = macro_coefficients(mu, plan.lambda);
      FluxSpec diff;
      diff.family = FluxFamily::LinearDiffusion;
      diff.params["D_c"] = setup.coeffs.D_relax;
      setup.macro.diffusion = diff;
      break;
    }
    case PairingKind::PastMotionFSC: {
      setup.kinetic.vspace = lebesgue;
      setup.kinetic.turning.kind = TurningKind::KernelPastMotion;
      setup.kinetic.turning.lambda = plan.lambda;
      const double psi_C = plan.psi_C;
      setup.kinetic.turning.psi =
          ResponseFunction{[psi_C](double b) { return psi_example(b, psi_C); },
                           "response rate with saturated-drift image"};
      setup.kinetic.scaling = {ScalingKind::Parabolic, eps, true};
      setup.S = sweep_signal_field(plan);
      setup.kinetic.S = setup.S;
      setup.coeffs = macro_coefficients(lebesgue, plan.lambda);
      FluxSpec diff;
      diff.family = FluxFamily::LinearDiffusion;
      diff.params["D_c"] = setup.coeffs.D_uniform;
      setup.macro.diffusion = diff;
      FluxSpec tax;
      tax.family = FluxFamily::PhiFromPsi;
      tax.params["lambda"] = plan.lambda;
      tax.measure = lebesgue;
      tax.response = setup.kinetic.turning.psi;
      setup.macro.taxis = tax;
      setup.macro.signal = SignalSpec{0.0, 0.0, 0.0, false};
      break;
    }
    case PairingKind::AnteriorPosteriorNewc: {
      setup.kinetic.vspace = lebesgue;
      setup.kinetic.turning.kind = TurningKind::KernelAnteriorPosterior;
      setup.kinetic.turning.lambda = 0.0;
      setup.kinetic.turning.D_c = plan.D_c;
      setup.kinetic.turning.C = plan.C;
      setup.kinetic.turning.chi = plan.chi;
      setup.kinetic.scaling = {ScalingKind::Hyperbolic, eps, true};
      setup.S = sweep_signal_field(plan);
      setup.kinetic.S = setup.S;
      setup.coeffs = macro_coefficients(lebesgue, std::max(plan.lambda, 1e-12));
      FluxSpec diff;
      diff.family = FluxFamily::Relativistic;
      diff.params["D_c"] = plan.D_c;
      diff.params["C"] = plan.C;
      setup.macro.diffusion = diff;
      FluxSpec tax;
      tax.family = FluxFamily::PsiSaturated;
      tax.params["chi"] = plan.chi;
      tax.params["C"] = 1.0;
      setup.macro.taxis = tax;
      setup.macro.signal = SignalSpec{0.0, 0.0, 0.0, false};
      break;
    }
    case PairingKind::AccelDif2:
    case PairingKind::AccelHyp: {
      const bool hyperbolic = plan.pairing == PairingKind::AccelHyp;
      setup.kinetic.vspace = make_uniform_cells(plan.velocity_resolution);
      setup.kinetic.turning.kind = TurningKind::RelaxUniform;
      setup.kinetic.turning.lambda = plan.lambda;
      setup.kinetic.scaling = {hyperbolic ? ScalingKind::Hyperbolic
                                          : ScalingKind::Parabolic,
                               eps, hyperbolic};
      AccelSpec accel;
      accel.a = plan.a;
      accel.F = plan.F;
      setup.kinetic.accel = accel;
      setup.S = sweep_signal_field(plan);
      setup.kinetic.S = setup.S;
      setup.coeffs = macro_coefficients(setup.kinetic.vspace, plan.lambda, plan.a, 1);
      if (!hyperbolic) {
        FluxSpec diff;
        diff.family = FluxFamily::LinearDiffusion;
        diff.params["D_c"] = *setup.coeffs.accel_diffusion;
        setup.macro.diffusion = diff;
      }
      FluxSpec tax;
      tax.family = FluxFamily::VstarSaturated;
      tax.params["chi"] = *setup.coeffs.accel_drift;
      tax.params["F"] = plan.F;
      tax.params["eps_sat"] = hyperbolic ? 1.0 : 0.0;  // dif2 drift is linear
      setup.macro.taxis = tax;
      setup.macro.signal = SignalSpec{0.0, 0.0, 0.0, false};
      break;
    }
  }
  return setup;
}

Eigen::ArrayXd solve_macro_reference(const PairingSetup& setup, const SweepPlan& plan,
                                     double* mass_drift, double* min_c) {
  MacroState st;
  st.t = 0.0;
  st.c.resize(plan.grid.nx, 1);
  st.c.col(0) = gaussian_profile(plan.grid, plan.ic_center, plan.ic_width, plan.ic_mass);
  if (setup.S.size() > 0) {
    st.S.resize(plan.grid.nx, 1);
    st.S.col(0) = setup.S;
  }
  SolveOptions opt;
  opt.final_time = plan.final_time;
  Trajectory traj = solve(st, setup.macro, plan.grid, opt);
  if (mass_drift) *mass_drift = traj.max_step_mass_drift;
  if (min_c) *min_c = traj.min_c_seen;
  return traj.snapshots.back().c.col(0);
}

}  // namespace

SweepReport run_sweep(const SweepPlan& plan) {
  plan.validate();
  SweepReport report;
  report.pairing = plan.pairing;

  Eigen::ArrayXd c0 =
      gaussian_profile(plan.grid, plan.ic_center, plan.ic_width, plan.ic_mass);

  // the macro reference does not depend on eps; build it once
  PairingSetup setup0 = build_pairing(plan, plan.eps_list.front());
  report.coefficients = setup0.coeffs;
  Eigen::ArrayXd c_macro =
      solve_macro_reference(setup0, plan, &report.macro_mass_drift, &report.macro_min_c);

  for (double eps : plan.eps_list) {
    SweepLeg leg;
    leg.eps = eps;
    try {
      PairingSetup setup = build_pairing(plan, eps);
      KineticTrajectory traj = kinetic_solve(setup.kinetic, c0);
      leg.error_l1 = ((traj.final_cbar - c_macro).abs().sum()) * plan.grid.dx();
      leg.kinetic_steps = traj.steps;
      leg.mass_drift = traj.max_step_mass_drift;
      leg.min_f = traj.min_f_seen;
      report.min_kernel_value = std::min(report.min_kernel_value, traj.min_kernel_value);
      if (plan.pairing == PairingKind::AccelHyp) {
        // mean velocity should approach a/(a+lambda) vstar where mass sits
        const double drift_factor = plan.a / (plan.a + plan.lambda);
        Eigen::ArrayXd g = gradient(setup.S, plan.grid);
        const double floor = 1e-3 * traj.final_cbar.maxCoeff();
        double gap = 0.0;
        for (int i = 0; i < plan.grid.nx; ++i) {
          if (traj.final_cbar[i] <= floor) continue;
          gap = std::max(gap, std::abs(traj.final_mean_velocity[i] -
                                       drift_factor * vstar(g[i], plan.F)));
        }
        leg.mean_velocity_gap = gap;
      }
      leg.ok = true;
    } catch (const std::exception& err) {
      leg.ok = false;
      leg.failure = err.what();
    }
    report.legs.push_back(leg);
  }

  std::vector<double> le, lp;
  report.monotone = true;
  double prev = std::numeric_limits<double>::infinity();
  int ok_count = 0;
  for (const auto& leg : report.legs) {
    if (!leg.ok) continue;
    ++ok_count;
    if (leg.error_l1 >= prev) report.monotone = false;
    prev = leg.error_l1;
    le.push_back(std::log(std::max(leg.error_l1, 1e-300)));
    lp.push_back(std::log(leg.eps));
  }
  if (ok_count < 3) throw SolverError("run_sweep: fewer than 3 successful legs");

  // least-squares slope of log e against log eps
  const std::size_t n = lp.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += lp[i];
    sy += le[i];
    sxx += lp[i] * lp[i];
    sxy += lp[i] * le[i];
  }
  report.fitted_order = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return report;
}

CorrectionReport first_order_correction_check(const SweepPlan& plan, double eps) {
  if (plan.pairing != PairingKind::RelaxToMuDiffusion &&
      plan.pairing != PairingKind::AccelDif2)
    throw std::invalid_argument(
        "first_order_correction_check: relax-to-mu or accel-parabolic pairings only");
  CorrectionReport out;
  out.pairing = plan.pairing;
  out.eps = eps;

  Eigen::ArrayXd c0 =
      gaussian_profile(plan.grid, plan.ic_center, plan.ic_width, plan.ic_mass);
  PairingSetup setup = build_pairing(plan, eps);
  KineticTrajectory kin = kinetic_solve(setup.kinetic, c0);

  Eigen::ArrayXd c_zero = solve_macro_reference(setup, plan, nullptr, nullptr);
  out.zero_order_error = ((kin.final_cbar - c_zero).abs().sum()) * plan.grid.dx();

  // corrected macro model
  PairingSetup corrected = setup;
  if (plan.pairing == PairingKind::RelaxToMuDiffusion) {
    FluxSpec diff;
    diff.family = FluxFamily::FsgDiffusion;
    diff.params["eps"] = eps;
    diff.params["lambda"] = plan.lambda;
    diff.measure = setup.kinetic.vspace;
    corrected.macro.diffusion = diff;
  } else {
    FluxSpec tax = *setup.macro.taxis;
    tax.params["eps_sat"] = eps;  // saturated first-order drift
    corrected.macro.taxis = tax;
  }
  Eigen::ArrayXd c_corr = solve_macro_reference(corrected, plan, nullptr, nullptr);
  out.corrected_error = ((kin.final_cbar - c_corr).abs().sum()) * plan.grid.dx();
  return out;
}

nlohmann::json to_json(const SweepReport& report) {
  nlohmann::json j;
  j["pairing"] = to_string(report.pairing);
  j["eps"] = nlohmann::json::array();
  j["errors"] = nlohmann::json::array();
  for (const auto& leg : report.legs) {
    j["eps"].push_back(leg.eps);
    j["errors"].push_back(leg.ok ? leg.error_l1 : -1.0);
    if (!leg.ok) j["failures"].push_back(leg.failure);
  }
  j["order"] = report.fitted_order;
  j["monotone"] = report.monotone;
  nlohmann::json c;
  c["D_relax"] = report.coefficients.D_relax;
  c["D_uniform"] = report.coefficients.D_uniform;
  if (report.coefficients.accel_diffusion) {
    c["accel_diffusion"] = *report.coefficients.accel_diffusion;
    c["accel_drift"] = *report.coefficients.accel_drift;
  }
  j["coefficients"] = c;
  if (report.pairing == PairingKind::AccelHyp) {
    j["mean_velocity_gap"] = nlohmann::json::array();
    for (const auto& leg : report.legs) j["mean_velocity_gap"].push_back(leg.mean_velocity_gap);
  }
  if (report.pairing == PairingKind::AnteriorPosteriorNewc)
    j["min_kernel_value"] = report.min_kernel_value;
  return j;
}

nlohmann::json to_json(const CorrectionReport& report) {
  nlohmann::json j;
  j["pairing"] = to_string(report.pairing);
  j["eps"] = report.eps;
  j["zero_order_error"] = report.zero_order_error;
  j["corrected_error"] = report.corrected_error;
  return j;
}

}  // namespace fluxlim
