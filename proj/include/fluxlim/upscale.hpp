#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

#include "fluxlim/kinetic.hpp"
#include "fluxlim/macro.hpp"
#include "fluxlim/measure.hpp"

#include <nlohmann/json_fwd.hpp>

namespace fluxlim {

/// Kinetic model / macroscopic limit pairings from the catalog.
enum class PairingKind {
  RelaxToMuDiffusion,      // parabolic relax-to-mu -> linear diffusion
  PastMotionFSC,           // rescaled past-motion kernel -> diffusion-taxis
  AnteriorPosteriorNewc,   // hyperbolic signed kernel -> fully limited flux
  AccelDif2,               // parabolic acceleration model -> drift-diffusion
  AccelHyp,                // hyperbolic rescaled v* -> pure saturated drift
};

std::string to_string(PairingKind kind);
PairingKind pairing_from_string(const std::string& tag);

/// Closed-form macroscopic coefficients from mesoscopic ingredients.
struct MacroCoefficients {
  double D_relax = 0.0;    // (1/lambda) int v^2 dmu
  double D_uniform = 0.0;  // (1/(lambda |V|)) int v^2 dv on [-1,1]
  std::optional<double> accel_diffusion;  // lambda/((2a+lambda)(a+lambda)) n/(n+2)
  std::optional<double> accel_drift;      // a/(a+lambda)
};

MacroCoefficients macro_coefficients(const VelocityMeasure& mu, double lambda,
                                     std::optional<double> a = std::nullopt, int n = 1);

/// Drift-diffusion taxis fluxes of the acceleration limits; the corrected
/// form carries the first-order saturation denominator and reduces to the
/// zero-order one at eps = 0.
double dif2_taxis_flux(double c, double grad_S, double a, double lambda, double F);
double dif3_taxis_flux(double c, double grad_S, double a, double lambda, double F,
                       double eps);

struct SweepPlan {
  PairingKind pairing = PairingKind::RelaxToMuDiffusion;
  std::vector<double> eps_list = {0.4, 0.2, 0.1, 0.05};
  double final_time = 0.5;
  SpatialGrid grid;  // defaults to [-4,4] x 512, no-flux
  int velocity_resolution = 32;
  std::optional<VelocityMeasure> mu;  // relax-to-mu target (default two atoms)

  double lambda = 1.0;
  double a = 1.0;       // acceleration rate
  double F = 1.0;       // anisotropy factor
  double D_c = 0.5;     // anterior-posterior drift builder
  double C = 0.5;
  double chi = 0.25;
  double psi_C = 2.0;   // response-rate offset for the past-motion kernel

  double signal_amplitude = 2.0, signal_width = 1.0;
  double ic_width = 0.5, ic_mass = 1.0, ic_center = 0.0;
  double cfl_number = 0.4;
  double kernel_substep_target = 0.05;

  void validate() const;
};

struct SweepLeg {
  double eps = 0.0;
  bool ok = false;
  double error_l1 = 0.0;
  long kinetic_steps = 0;
  double mass_drift = 0.0;
  double min_f = 0.0;
  double mean_velocity_gap = 0.0;  // hyp pairing diagnostic
  std::string failure;
};

struct SweepReport {
  PairingKind pairing;
  std::vector<SweepLeg> legs;
  double fitted_order = 0.0;
  bool monotone = false;
  MacroCoefficients coefficients;
  double macro_mass_drift = 0.0;
  double macro_min_c = 0.0;
  double min_kernel_value = 0.0;
};

nlohmann::json to_json(const SweepReport& report);

/// Runs the kinetic model at every eps against the macroscopic limit solved
/// on the same grid; reports L1 errors at final_time, the fitted order of
/// log-error against log-eps, and a monotonicity flag.  Legs whose solver
/// fails are marked and skipped; at least three must survive for the fit.
SweepReport run_sweep(const SweepPlan& plan);

struct CorrectionReport {
  PairingKind pairing;
  double eps = 0.0;
  double zero_order_error = 0.0;
  double corrected_error = 0.0;
};

nlohmann::json to_json(const CorrectionReport& report);

/// Solves the first-order-corrected macro equation (the exponential-closure
/// flux for the relax pairing, the saturated-drift form for the acceleration
/// pairing) at the same eps as the kinetic run and compares both errors.
CorrectionReport first_order_correction_check(const SweepPlan& plan, double eps);

/// Shared helpers for building matched initial data and prescribed signals.
Eigen::ArrayXd gaussian_profile(const SpatialGrid& grid, double center, double width,
                                double mass);
Eigen::ArrayXd sweep_signal_field(const SweepPlan& plan);

}  // namespace fluxlim
