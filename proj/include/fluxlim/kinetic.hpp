#pragma once

#include <Eigen/Dense>

#include <optional>

#include "fluxlim/fluxes.hpp"
#include "fluxlim/grid.hpp"
#include "fluxlim/macro.hpp"
#include "fluxlim/measure.hpp"

namespace fluxlim {

enum class TurningKind {
  RelaxToMu,                // lambda (cbar mu - c)
  RelaxUniform,             // lambda (cbar/|V| - c)
  KernelPastMotion,         // gain/loss with rate Psi along the prior path
  KernelAnteriorPosterior,  // (drift - v') . v h(v) kernel
};

struct TurningOperatorSpec {
  TurningKind kind = TurningKind::RelaxUniform;
  double lambda = 1.0;                  // relax kinds
  std::optional<VelocityMeasure> mu;    // relax-to-mu target (same nodes as vspace)
  std::optional<ResponseFunction> psi;  // past-motion response
  // anterior-posterior: weight h and the drift-builder parameters
  std::function<double(double)> h;      // default: uniform 1/|V|
  double D_c = 1.0, C = 1.0, chi = 0.0;
};

enum class ScalingKind { None, Parabolic, Hyperbolic };

struct ScalingSpec {
  ScalingKind kind = ScalingKind::None;
  double eps = 1.0;
  bool kernel_rescale = true;  // eps*Psi(./eps) and the 1/eps-gradient drift

  int kappa() const { return kind == ScalingKind::Parabolic ? 2 : 1; }
  double transport_factor() const {  // speed multiplier eps v / eps^kappa
    return kind == ScalingKind::None ? 1.0 : std::pow(eps, 1 - kappa());
  }
  double stiffness() const {  // 1/eps^kappa on the turning term
    return kind == ScalingKind::None ? 1.0 : std::pow(eps, -kappa());
  }
  void validate() const {
    if (eps <= 0.0 || eps > 1.0)
      throw std::invalid_argument("ScalingSpec: eps must lie in (0, 1]");
  }
};

/// Acceleration-transport term -a d/dv((v - v*) c): realignment toward the
/// preferred velocity v* built from the signal gradient (or from -grad ln
/// cbar through psi, which recovers the relativistic heat limit).
struct AccelSpec {
  double a = 1.0;
  double F = 1.0;  // 1D anisotropy factor, |F| <= 1
  enum class Target { SignalVstar, LogDensityPsi } target = Target::SignalVstar;
  double C = 1.0;  // psi cap for the LogDensityPsi variant
};

/// Mesoscopic density on a 1D space grid x 1D velocity quadrature.
/// f(i, k) approximates the density at cell i, node k, with respect to the
/// vspace quadrature: integrals are sums against qweights().
struct KineticState {
  double t = 0.0;
  Eigen::MatrixXd f;  // nx x nv
  SpatialGrid grid;
  VelocityMeasure vspace;
  ScalingSpec scaling;

  /// Integration weights against dv (continuous) or atom counts (discrete).
  Eigen::ArrayXd qweights() const {
    if (vspace.kind == MeasureKind::DiscreteAtoms)
      return Eigen::ArrayXd::Ones(vspace.size());
    return vspace.weights * vspace.set_volume;
  }
  double total_mass() const { return (f * qweights().matrix()).sum() * grid.dx(); }
};

/// Per-cell macroscopic inputs consumed by the kernel turning kinds.
struct TurningContext {
  Eigen::ArrayXd psi_arg_base;  // scalar part of the Psi argument per cell
  Eigen::ArrayXd grad_S;        // dS/dx per cell
  Eigen::ArrayXd drift;         // anterior-posterior preferred drift per cell
};

/// Unscaled turning operator value L(c) as a rate array (nx x nv).  The
/// v-integral of each row vanishes to roundoff for every kind.  Kernel kinds
/// whose h fails the moment conditions (unit mass, zero mean, isotropic
/// second moment within 1e-8) are rejected.
Eigen::MatrixXd apply_turning(const KineticState& state, const TurningOperatorSpec& spec,
                              const TurningContext& ctx = {});

/// Order 0: cbar per cell.  Order 1: mean velocity V = m1/(eps^{kappa-1} cbar)
/// under the active scaling, 0 where cbar <= 1e-14.
Eigen::ArrayXd density_moment(const KineticState& state, int order);

/// Default step size: cfl * min(dx / max transport speed, dv / max v-drift
/// speed), further capped by the explicit-kernel stability bound when a
/// kernel turning kind is active.  Relaxation kinds are advanced by their
/// exact exponential and impose no bound.
double kinetic_cfl_dt(const KineticState& state, const TurningOperatorSpec& turning,
                      const std::optional<AccelSpec>& accel,
                      const Eigen::ArrayXd& S, double cfl = 0.4);

/// One split step: (1) TVD-limited upwind x-transport at speed eps^{1-kappa} v,
/// (2) conservative TVD upwind v-transport with drift -a(v - v*)/eps^kappa and
/// zero flux at |v| = 1, (3) turning at stiffness 1/eps^kappa (exact
/// exponential for relaxation kinds; conservative explicit subcycles for
/// kernel kinds).  Total mass is conserved to roundoff.
void kinetic_step(KineticState& state, const TurningOperatorSpec& turning,
                  const std::optional<AccelSpec>& accel, const Eigen::ArrayXd& S,
                  double dt, double kernel_substep_target = 0.1);

struct KineticRunConfig {
  SpatialGrid grid;
  VelocityMeasure vspace;
  TurningOperatorSpec turning;
  ScalingSpec scaling;
  std::optional<AccelSpec> accel;
  Eigen::ArrayXd S;  // prescribed static signal (empty = none)
  double final_time = 0.5;
  double cfl_number = 0.4;
  double kernel_substep_target = 0.1;
  int snapshot_every = 0;
};

struct KineticTrajectory {
  std::vector<std::pair<double, Eigen::ArrayXd>> cbar_snapshots;
  Eigen::ArrayXd final_cbar;
  Eigen::ArrayXd final_mean_velocity;
  double max_step_mass_drift = 0.0;
  double min_f_seen = 0.0;
  double min_kernel_value = 0.0;  // most negative anterior-posterior kernel value
  long steps = 0;
};

/// March a local-equilibrium initial state c0(x) mu(v) to final_time.
KineticTrajectory kinetic_solve(const KineticRunConfig& config,
                                const Eigen::ArrayXd& c0);

}  // namespace fluxlim
