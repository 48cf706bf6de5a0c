#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include "fluxlim/diag.hpp"
#include "fluxlim/fluxes.hpp"
#include "fluxlim/grid.hpp"

namespace fluxlim {

struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Signal equation dS/dt = D_v Lap S - alpha S + beta c, or a frozen field.
struct SignalSpec {
  double D_v = 1.0;
  double alpha = 0.0;
  double beta = 0.0;
  bool evolve = true;
};

/// Macroscopic fields at one instant.  Stored as (nx x ny) arrays; 1D runs
/// use ny = 1 and column 0.
struct MacroState {
  double t = 0.0;
  Eigen::ArrayXXd c;
  Eigen::ArrayXXd S;  // size 0 when no signal

  bool has_signal() const { return S.size() > 0; }
};

struct ModelSpec {
  std::optional<FluxSpec> diffusion;
  std::optional<FluxSpec> taxis;
  std::optional<SignalSpec> signal;
  std::function<double(double, double)> reaction_c;  // f_c(c, S)

  void validate() const {
    if (!diffusion && !taxis)
      throw std::invalid_argument("ModelSpec: need diffusion or taxis");
    if (taxis && !signal)
      throw std::invalid_argument("ModelSpec: taxis reads grad S, signal required");
    if (diffusion) diffusion->validate();
    if (taxis) taxis->validate();
  }
};

/// Prefactored semi-implicit solve of (I + dt(alpha - D_v Lap)) S = rhs.
/// 1D uses the Thomas algorithm (cyclic variant for periodic grids); 2D a
/// sparse Cholesky of the 5-point operator.
class SignalSolver {
 public:
  SignalSolver(const SpatialGrid& grid, const SignalSpec& spec, double dt);
  Eigen::ArrayXXd solve(const Eigen::ArrayXXd& rhs) const;
  double dt() const { return dt_; }

 private:
  SpatialGrid grid_;
  SignalSpec spec_;
  double dt_ = 0.0;
  std::shared_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> ldlt_;
};

struct StepStats {
  double mass_before = 0.0;
  double mass_after = 0.0;
  double min_c = 0.0;
  double max_c = 0.0;
};

/// CFL bound 0.4 * min(dx^2/(2 d D_eff_max), dx/(2 v_max)), with family speed
/// caps for the saturating fluxes and current-state maxima otherwise.  A
/// model with no active transport returns dt_max.
double cfl_dt(const MacroState& state, const ModelSpec& model,
              const SpatialGrid& grid, double dt_max = 0.1);

/// One conservative forward-Euler update: face fluxes from two-point face
/// gradients with donor-cell (uphill) face density for the nonlinear
/// diffusion families and donor upwinding for the taxis drift; the signal is
/// advanced semi-implicitly.  Mass of c is conserved to roundoff when
/// f_c = 0.  Throws SolverError on a CFL violation or negative density
/// beyond -1e-10.
StepStats step(MacroState& state, const ModelSpec& model, const SpatialGrid& grid,
               double dt, const SignalSolver* signal_solver = nullptr);

struct SolveOptions {
  double final_time = 1.0;
  int snapshot_every = 0;  // steps between stored snapshots; 0 = ends only
  double dt_max = 0.1;
  double front_theta = 1e-3;  // front threshold relative to max(c0)
};

struct Trajectory {
  std::vector<MacroState> snapshots;
  FrontSeries fronts;            // 1D runs
  double max_step_mass_drift = 0.0;  // max per-step |dm|/m
  double min_c_seen = 0.0;
  double c0_max = 0.0;
  long steps = 0;
};

/// Fixed-step march to final_time at the CFL dt, recording snapshots, front
/// series and conservation diagnostics.
Trajectory solve(const MacroState& initial, const ModelSpec& model,
                 const SpatialGrid& grid, const SolveOptions& options);

/// Taxis velocity of `spec` for a face gradient of S (1D).
double taxis_velocity(const FluxSpec& spec, double grad_S);

/// Diffusion face term (the expression inside the divergence) for a donor
/// density and face gradient (1D).
double diffusion_face_term(const FluxSpec& spec, double c_donor, double grad_c);

}  // namespace fluxlim
