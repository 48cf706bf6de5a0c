#include "fluxlim/kinetic.hpp"

#include <cmath>

namespace fluxlim {

namespace {

inline double minmod(double a, double b) {
  if (a * b <= 0.0) return 0.0;
  return std::abs(a) < std::abs(b) ? a : b;
}

// TVD (Lax-Wendroff-limited) upwind transport in x for every velocity column.
// F_face = u f_up + 0.5 |u| (1 - |u| dt/dx) slope_up; exact shift at nu = 1.
void transport_x(Eigen::MatrixXd& f, const Eigen::ArrayXd& speeds,
                 const SpatialGrid& grid, double dt) {
  const int nx = static_cast<int>(f.rows()), nv = static_cast<int>(f.cols());
  const double dx = grid.dx();
  const bool periodic = grid.boundary == Boundary::Periodic;
  Eigen::VectorXd F(nx + 1), col(nx);
  for (int k = 0; k < nv; ++k) {
    const double u = speeds[k];
    if (u == 0.0) continue;
    const double nu = std::abs(u) * dt / dx;
    col = f.col(k);
    auto fval = [&](int i) {
      if (periodic) return col[(i % nx + nx) % nx];
      return col[std::clamp(i, 0, nx - 1)];
    };
    auto slope = [&](int i) {
      if (!periodic && (i <= 0 || i >= nx - 1)) {
        // one-sided differences collapse the limiter at the wall
        if (i < 0 || i > nx - 1) return 0.0;
        return minmod(fval(i) - fval(i - 1), fval(i + 1) - fval(i));
      }
      return minmod(fval(i) - fval(i - 1), fval(i + 1) - fval(i));
    };
    F.setZero();
    const int lo = periodic ? 0 : 1, hi = periodic ? nx : nx;
    for (int face = lo; face < hi; ++face) {
      const int il = face - 1, ir = face;
      double flux;
      if (u > 0.0)
        flux = u * fval(il) + 0.5 * u * (1.0 - nu) * slope(il);
      else
        flux = u * fval(ir) - 0.5 * (-u) * (1.0 - nu) * slope(ir);
      F[face] = flux;
    }
    if (periodic) F[nx] = F[0];
    for (int i = 0; i < nx; ++i) f(i, k) = col[i] - dt / dx * (F[i + 1] - F[i]);
  }
}

// Conservative TVD upwind drift in v toward vstar, zero flux at |v| = 1.
// Requires a uniform midpoint vspace.
void transport_v(Eigen::MatrixXd& f, const Eigen::ArrayXd& vstar_cells, double a,
                 double stiffness, const VelocityMeasure& vspace, double dt) {
  const int nx = static_cast<int>(f.rows()), nv = static_cast<int>(f.cols());
  const double dv = 2.0 / nv;
  Eigen::ArrayXd faces(nv + 1);
  for (int k = 0; k <= nv; ++k) faces[k] = -1.0 + k * dv;

  Eigen::VectorXd F(nv + 1);
  for (int i = 0; i < nx; ++i) {
    const double vs = vstar_cells[i];
    F.setZero();
    for (int face = 1; face < nv; ++face) {
      const double w = -a * (faces[face] - vs) * stiffness;
      if (w == 0.0) continue;
      const double nu = std::abs(w) * dt / dv;
      const int il = face - 1, ir = face;
      auto sl = [&](int k) {
        const double dl = k > 0 ? f(i, k) - f(i, k - 1) : 0.0;
        const double dr = k + 1 < nv ? f(i, k + 1) - f(i, k) : 0.0;
        return minmod(dl, dr);
      };
      if (w > 0.0)
        F[face] = w * f(i, il) + 0.5 * w * (1.0 - nu) * sl(il);
      else
        F[face] = w * f(i, ir) - 0.5 * (-w) * (1.0 - nu) * sl(ir);
    }
    for (int k = 0; k < nv; ++k) f(i, k) -= dt / dv * (F[k + 1] - F[k]);
  }
}

void validate_h_moments(const std::function<double(double)>& h,
                        const KineticState& state, double& beta_out) {
  const Eigen::ArrayXd q = state.qweights();
  const Eigen::ArrayXd& v = state.vspace.nodes;
  Eigen::ArrayXd hv(v.size());
  for (int k = 0; k < v.size(); ++k) hv[k] = h(v[k]);
  const double m0 = (q * hv).sum();
  const double m1 = (q * v * hv).sum();
  const double m2 = (q * v * v * hv).sum();
  if (std::abs(m0 - 1.0) > 1e-8 || std::abs(m1) > 1e-8 || m2 <= 1e-8)
    throw std::invalid_argument(
        "anterior-posterior kernel: h must have unit mass, zero mean and a "
        "positive second moment on the velocity quadrature");
  beta_out = m2;
}

}  // namespace

namespace {

// Relaxation part L0 of the operator (the full operator for relax kinds).
Eigen::MatrixXd relax_rate(const KineticState& state, const TurningOperatorSpec& spec) {
  const int nv = static_cast<int>(state.f.cols());
  const Eigen::ArrayXd q = state.qweights();
  Eigen::ArrayXd cbar = (state.f * q.matrix()).array();
  Eigen::MatrixXd rate(state.f.rows(), nv);
  Eigen::ArrayXd target_density(nv);
  if (spec.kind == TurningKind::RelaxToMu) {
    const VelocityMeasure& mu = spec.mu ? *spec.mu : state.vspace;
    if (mu.size() != nv)
      throw std::invalid_argument("relax-to-mu: measure does not match the vspace");
    target_density = mu.weights / q;  // d(mu)/d(quadrature)
  } else {
    if (state.vspace.kind == MeasureKind::DiscreteAtoms)
      throw std::invalid_argument("relax-uniform: needs a continuous vspace");
    target_density.setConstant(1.0 / state.vspace.set_volume);
  }
  for (int k = 0; k < nv; ++k)
    rate.col(k) = spec.lambda * (cbar * target_density[k] - state.f.col(k).array());
  return rate;
}

// Integral part L1 of the kernel operator kinds.
Eigen::MatrixXd kernel_rate(const KineticState& state, const TurningOperatorSpec& spec,
                            const TurningContext& ctx) {
  const int nx = static_cast<int>(state.f.rows()), nv = static_cast<int>(state.f.cols());
  const Eigen::ArrayXd q = state.qweights();
  const Eigen::ArrayXd& v = state.vspace.nodes;
  Eigen::MatrixXd rate(nx, nv);

  if (spec.kind == TurningKind::KernelPastMotion) {
    if (!spec.psi) throw std::invalid_argument("past-motion kernel: Psi missing");
    if (ctx.grad_S.size() != nx)
      throw std::invalid_argument("past-motion kernel: grad S context missing");
    const double vol = state.vspace.set_volume;
    Eigen::ArrayXd base = ctx.psi_arg_base.size() == nx ? ctx.psi_arg_base
                                                        : Eigen::ArrayXd::Zero(nx);
    Eigen::MatrixXd P(nx, nv);
    for (int k = 0; k < nv; ++k)
      for (int i = 0; i < nx; ++i)
        P(i, k) = spec.psi->psi(base[i] + v[k] * ctx.grad_S[i]);
    // gain_i = sum_k q_k Psi_{ik} f_{ik}; loss_{ik} = |V| Psi_{ik} f_{ik}
    Eigen::ArrayXd gain = ((P.array() * state.f.array()).matrix() * q.matrix()).array();
    for (int k = 0; k < nv; ++k)
      rate.col(k) = gain - vol * P.col(k).array() * state.f.col(k).array();
    return rate;
  }

  if (ctx.drift.size() != nx)
    throw std::invalid_argument("anterior-posterior kernel: drift context missing");
  std::function<double(double)> h = spec.h;
  if (!h) {
    const double vol = state.vspace.set_volume;
    h = [vol](double) { return 1.0 / vol; };
  }
  double beta = 0.0;
  validate_h_moments(h, state, beta);
  Eigen::ArrayXd cbar = (state.f * q.matrix()).array();
  Eigen::ArrayXd m1 = (state.f * (q * v).matrix()).array();
  Eigen::ArrayXd hv(nv);
  for (int k = 0; k < nv; ++k) hv[k] = h(v[k]);
  for (int k = 0; k < nv; ++k)
    rate.col(k) = hv[k] * v[k] * (ctx.drift * cbar - m1);
  return rate;
}

}  // namespace

Eigen::MatrixXd apply_turning(const KineticState& state, const TurningOperatorSpec& spec,
                              const TurningContext& ctx) {
  // Kernel kinds combine the uniform relaxation L0 (rate lambda, possibly 0)
  // with the integral part L1, as in the scaled turning-operator models.
  switch (spec.kind) {
    case TurningKind::RelaxToMu:
    case TurningKind::RelaxUniform:
      return relax_rate(state, spec);
    case TurningKind::KernelPastMotion:
    case TurningKind::KernelAnteriorPosterior: {
      Eigen::MatrixXd rate = kernel_rate(state, spec, ctx);
      if (spec.lambda > 0.0) {
        TurningOperatorSpec l0 = spec;
        l0.kind = TurningKind::RelaxUniform;
        rate += relax_rate(state, l0);
      }
      return rate;
    }
  }
  throw std::logic_error("apply_turning: unreachable");
}

Eigen::ArrayXd density_moment(const KineticState& state, int order) {
  const Eigen::ArrayXd q = state.qweights();
  Eigen::ArrayXd cbar = (state.f * q.matrix()).array();
  if (order == 0) return cbar;
  if (order != 1) throw std::invalid_argument("density_moment: order must be 0 or 1");
  Eigen::ArrayXd m1 = (state.f * (q * state.vspace.nodes).matrix()).array();
  const double factor =
      std::pow(state.scaling.eps, state.scaling.kind == ScalingKind::None
                                      ? 0
                                      : 1 - state.scaling.kappa());
  Eigen::ArrayXd V(m1.size());
  for (int i = 0; i < m1.size(); ++i)
    V[i] = cbar[i] > 1e-14 ? factor * m1[i] / cbar[i] : 0.0;
  return V;
}

namespace {

// Preferred velocity per cell for the acceleration term.
Eigen::ArrayXd accel_vstar(const KineticState& state, const AccelSpec& accel,
                           const Eigen::ArrayXd& S) {
  const int nx = state.grid.nx;
  const ScalingSpec& sc = state.scaling;
  // Micro-scale gradients are eps times macro ones; the rescaled variant
  // cancels that factor.
  const double gscale = (sc.kind == ScalingKind::None || sc.kernel_rescale) ? 1.0 : sc.eps;
  Eigen::ArrayXd out(nx);
  if (accel.target == AccelSpec::Target::SignalVstar) {
    if (S.size() != nx)
      throw std::invalid_argument("accel: prescribed signal field required");
    Eigen::ArrayXd g = gradient(S, state.grid) * gscale;
    for (int i = 0; i < nx; ++i) out[i] = vstar(g[i], accel.F);
  } else {
    Eigen::ArrayXd cbar = density_moment(state, 0);
    Eigen::ArrayXd lnc(nx);
    for (int i = 0; i < nx; ++i) lnc[i] = std::log(std::max(cbar[i], 1e-300));
    Eigen::ArrayXd g = gradient(lnc, state.grid) * gscale;
    for (int i = 0; i < nx; ++i)
      out[i] = cbar[i] > 1e-12 ? accel.F * psi_saturate(-g[i], accel.C) : 0.0;
  }
  return out;
}

double kernel_scale_exponent(const TurningOperatorSpec& turning, const ScalingSpec& sc) {
  // Stiffness multiplier on the turning rate.
  if (sc.kind == ScalingKind::None) return 1.0;
  if (turning.kind == TurningKind::KernelPastMotion && sc.kernel_rescale)
    return std::pow(sc.eps, -(sc.kappa() - 1));  // eps Psi(./eps) keeps one eps
  return sc.stiffness();
}

}  // namespace

double kinetic_cfl_dt(const KineticState& state, const TurningOperatorSpec& turning,
                      const std::optional<AccelSpec>& accel,
                      const Eigen::ArrayXd& S, double cfl) {
  const ScalingSpec& sc = state.scaling;
  const double dx = state.grid.dx();
  const double vmax = state.vspace.nodes.abs().maxCoeff() * sc.transport_factor();
  double dt = vmax > 0.0 ? cfl * dx / vmax : 0.1;

  if (accel) {
    const double dv = 2.0 / state.vspace.size();
    Eigen::ArrayXd vs = accel_vstar(state, *accel, S);
    const double wmax = accel->a * (1.0 + vs.abs().maxCoeff()) * sc.stiffness();
    dt = std::min(dt, cfl * dv / wmax);
  }
  if (turning.kind == TurningKind::KernelPastMotion && turning.psi) {
    // explicit kernel loss rate: |V| Psi_max, scaled
    Eigen::ArrayXd g = S.size() == state.grid.nx
                           ? gradient(S, state.grid)
                           : Eigen::ArrayXd::Zero(state.grid.nx);
    double psimax = 0.0;
    const double gmax = g.abs().maxCoeff();
    for (double s : {-gmax, -0.5 * gmax, 0.0, 0.5 * gmax, gmax})
      psimax = std::max(psimax, std::abs(turning.psi->psi(s)));
    const double rate =
        state.vspace.set_volume * psimax * kernel_scale_exponent(turning, sc);
    if (rate > 0.0) dt = std::min(dt, 0.5 / rate);
  }
  return dt;
}

void kinetic_step(KineticState& state, const TurningOperatorSpec& turning,
                  const std::optional<AccelSpec>& accel, const Eigen::ArrayXd& S,
                  double dt, double kernel_substep_target) {
  const ScalingSpec& sc = state.scaling;
  sc.validate();
  const int nx = state.grid.nx;
  const double dx = state.grid.dx();

  // (1) transport in x
  Eigen::ArrayXd speeds = state.vspace.nodes * sc.transport_factor();
  const double numax = speeds.abs().maxCoeff() * dt / dx;
  if (numax > 1.0 + 1e-9) throw SolverError("kinetic_step: x-transport CFL violated");
  transport_x(state.f, speeds, state.grid, dt);

  // (2) transport in v
  if (accel) {
    if (state.vspace.kind == MeasureKind::DiscreteAtoms)
      throw std::invalid_argument("kinetic_step: acceleration needs a uniform-cell vspace");
    Eigen::ArrayXd vs = accel_vstar(state, *accel, S);
    const double dv = 2.0 / state.vspace.size();
    const double wmax = accel->a * (1.0 + vs.abs().maxCoeff()) * sc.stiffness();
    if (wmax * dt / dv > 1.0 + 1e-9)
      throw SolverError("kinetic_step: v-transport CFL violated");
    transport_v(state.f, vs, accel->a, sc.stiffness(), state.vspace, dt);
  }

  // (3) turning.  The uniform/measure relaxation part advances by its exact
  // exponential (cbar is invariant, so mass is conserved exactly and the
  // update is unconditionally stable); kernel parts advance by conservative
  // explicit subcycles at their own scaling.
  const bool has_relax = turning.kind == TurningKind::RelaxToMu ||
                         turning.kind == TurningKind::RelaxUniform ||
                         turning.lambda > 0.0;
  if (has_relax) {
    const Eigen::ArrayXd q = state.qweights();
    Eigen::ArrayXd cbar = (state.f * q.matrix()).array();
    const double decay = std::exp(-turning.lambda * dt * sc.stiffness());
    Eigen::ArrayXd target_density(state.vspace.size());
    if (turning.kind == TurningKind::RelaxToMu) {
      const VelocityMeasure& mu = turning.mu ? *turning.mu : state.vspace;
      if (mu.size() != state.vspace.size())
        throw std::invalid_argument("relax-to-mu: measure does not match the vspace");
      target_density = mu.weights / q;
    } else {
      if (state.vspace.kind == MeasureKind::DiscreteAtoms)
        throw std::invalid_argument("relax-uniform: needs a continuous vspace");
      target_density.setConstant(1.0 / state.vspace.set_volume);
    }
    for (int k = 0; k < state.vspace.size(); ++k) {
      Eigen::ArrayXd eq = cbar * target_density[k];
      state.f.col(k) = (eq + (state.f.col(k).array() - eq) * decay).matrix();
    }
  }

  if (turning.kind == TurningKind::KernelPastMotion ||
      turning.kind == TurningKind::KernelAnteriorPosterior) {
    TurningContext ctx;
    if (S.size() == nx) ctx.grad_S = gradient(S, state.grid);
    else ctx.grad_S = Eigen::ArrayXd::Zero(nx);
    const double scale = kernel_scale_exponent(turning, sc);
    double rate_guess = scale * state.vspace.set_volume;
    if (turning.kind == TurningKind::KernelPastMotion && turning.psi) {
      double psimax = 1.0;
      const double gmax = ctx.grad_S.abs().maxCoeff();
      for (double s : {-gmax, 0.0, gmax})
        psimax = std::max(psimax, std::abs(turning.psi->psi(s)));
      rate_guess *= psimax;
    }
    const int nsub =
        std::max(1, static_cast<int>(std::ceil(rate_guess * dt / kernel_substep_target)));
    const double h = dt / nsub;
    TurningOperatorSpec kernel_only = turning;
    kernel_only.lambda = 0.0;  // the relax part already advanced exactly
    for (int s = 0; s < nsub; ++s) {
      if (turning.kind == TurningKind::KernelAnteriorPosterior) {
        // quasi-static drift from the current moments
        Eigen::ArrayXd cbar = density_moment(state, 0);
        Eigen::ArrayXd grad_cbar = gradient(cbar, state.grid);
        Eigen::ArrayXd out(nx);
        const double gscale = sc.kernel_rescale || sc.kind == ScalingKind::None
                                  ? 1.0
                                  : sc.eps;
        for (int i = 0; i < nx; ++i) {
          const double gc = grad_cbar[i] * gscale;
          const double gS = ctx.grad_S[i] * gscale;
          const double r = turning.D_c / turning.C;
          const double den = std::sqrt(cbar[i] * cbar[i] + r * r * gc * gc);
          const double diff_part = den > 0.0 ? turning.D_c * gc / den : 0.0;
          const double tax_part = turning.chi * gS / std::sqrt(1.0 + gS * gS);
          out[i] = tax_part - diff_part;  // drift of the fully-limited limit
        }
        ctx.drift = out;
      }
      Eigen::MatrixXd rate = kernel_rate(state, kernel_only, ctx);
      state.f += h * scale * rate;
    }
  }

  state.t += dt;
  const double fmin = state.f.minCoeff();
  const double fscale = std::max(1.0, state.f.maxCoeff());
  if (fmin < -1e-10 * fscale)
    throw SolverError("kinetic_step: negative density beyond tolerance");
}

KineticTrajectory kinetic_solve(const KineticRunConfig& config, const Eigen::ArrayXd& c0) {
  KineticState state;
  state.grid = config.grid;
  state.vspace = config.vspace;
  state.scaling = config.scaling;
  state.t = 0.0;
  const int nx = config.grid.nx, nv = config.vspace.size();
  if (c0.size() != nx) throw std::invalid_argument("kinetic_solve: IC does not match grid");

  // local equilibrium c0(x) mu(v): density wrt the quadrature is c0 * p/q
  const Eigen::ArrayXd q = config.vspace.kind == MeasureKind::DiscreteAtoms
                               ? Eigen::ArrayXd::Ones(nv)
                               : (config.vspace.weights * config.vspace.set_volume).eval();
  state.f.resize(nx, nv);
  for (int k = 0; k < nv; ++k)
    state.f.col(k) = (c0 * (config.vspace.weights[k] / q[k])).matrix();

  KineticTrajectory traj;
  traj.min_f_seen = state.f.minCoeff();
  traj.cbar_snapshots.emplace_back(0.0, density_moment(state, 0));

  long step_count = 0;
  double mass_prev = state.total_mass();
  while (state.t < config.final_time * (1.0 - 1e-12)) {
    double dt = kinetic_cfl_dt(state, config.turning, config.accel, config.S,
                               config.cfl_number);
    dt = std::min(dt, config.final_time - state.t);
    kinetic_step(state, config.turning, config.accel, config.S, dt,
                 config.kernel_substep_target);
    ++step_count;
    const double mass = state.total_mass();
    traj.max_step_mass_drift =
        std::max(traj.max_step_mass_drift,
                 std::abs(mass - mass_prev) / std::max(std::abs(mass_prev), 1e-300));
    mass_prev = mass;
    traj.min_f_seen = std::min(traj.min_f_seen, state.f.minCoeff());
    if (config.snapshot_every > 0 && step_count % config.snapshot_every == 0)
      traj.cbar_snapshots.emplace_back(state.t, density_moment(state, 0));
  }
  traj.final_cbar = density_moment(state, 0);
  traj.final_mean_velocity = density_moment(state, 1);
  traj.cbar_snapshots.emplace_back(state.t, traj.final_cbar);
  traj.steps = step_count;

  if (config.turning.kind == TurningKind::KernelAnteriorPosterior) {
    // record the most negative kernel value (the kernel is signed)
    Eigen::ArrayXd cbar = density_moment(state, 0);
    Eigen::ArrayXd gc = gradient(cbar, config.grid);
    Eigen::ArrayXd gS = config.S.size() == nx ? gradient(config.S, config.grid)
                                              : Eigen::ArrayXd::Zero(nx);
    double worst = 0.0;
    std::function<double(double)> h = config.turning.h;
    if (!h) {
      const double vol = config.vspace.set_volume;
      h = [vol](double) { return 1.0 / vol; };
    }
    for (int i = 0; i < nx; i += std::max(1, nx / 64)) {
      const double r = config.turning.D_c / config.turning.C;
      const double den = std::sqrt(cbar[i] * cbar[i] + r * r * gc[i] * gc[i]);
      const double drift = config.turning.chi * gS[i] / std::sqrt(1.0 + gS[i] * gS[i]) -
                           (den > 0.0 ? config.turning.D_c * gc[i] / den : 0.0);
      for (int k = 0; k < nv; ++k) {
        const double v = config.vspace.nodes[k];
        for (int k2 = 0; k2 < nv; ++k2) {
          const double vp = config.vspace.nodes[k2];
          worst = std::min(worst, (drift - vp) * v * h(v));
        }
      }
    }
    traj.min_kernel_value = worst;
  }
  return traj;
}

}  // namespace fluxlim
