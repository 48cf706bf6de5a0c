#include "fluxlim/macro.hpp"

#include <cmath>

namespace fluxlim {

Eigen::ArrayXd gradient(const Eigen::ArrayXd& f, const SpatialGrid& grid) {
  const int n = static_cast<int>(f.size());
  const double dx = grid.dx();
  Eigen::ArrayXd g(n);
  if (grid.boundary == Boundary::Periodic) {
    for (int i = 0; i < n; ++i) {
      const int ip = (i + 1) % n, im = (i - 1 + n) % n;
      g[i] = (f[ip] - f[im]) / (2.0 * dx);
    }
  } else {
    for (int i = 1; i + 1 < n; ++i) g[i] = (f[i + 1] - f[i - 1]) / (2.0 * dx);
    g[0] = (f[1] - f[0]) / dx;
    g[n - 1] = (f[n - 1] - f[n - 2]) / dx;
  }
  return g;
}

std::optional<FrontInterval> front_position(const Eigen::ArrayXd& field,
                                            const SpatialGrid& grid,
                                            double threshold_abs) {
  int lo = -1, hi = -1;
  for (int i = 0; i < field.size(); ++i) {
    if (field[i] > threshold_abs) {
      if (lo < 0) lo = i;
      hi = i;
    }
  }
  if (lo < 0) return std::nullopt;
  return FrontInterval{grid.x_center(lo), grid.x_center(hi)};
}

namespace {

double fit_slope(const std::vector<double>& t, const std::vector<double>& y,
                 double window_fraction) {
  const std::size_t n = t.size();
  const std::size_t start = static_cast<std::size_t>(
      std::floor(n * (1.0 - window_fraction)));
  const std::size_t m = n - start;
  if (m < 5) throw std::invalid_argument("front_speed: fewer than 5 samples in window");
  double st = 0, sy = 0, stt = 0, sty = 0;
  for (std::size_t i = start; i < n; ++i) {
    st += t[i];
    sy += y[i];
    stt += t[i] * t[i];
    sty += t[i] * y[i];
  }
  const double denom = m * stt - st * st;
  if (denom == 0.0) throw std::invalid_argument("front_speed: degenerate time grid");
  return (m * sty - st * sy) / denom;
}

}  // namespace

double front_speed(const FrontSeries& series, double window_fraction) {
  return fit_slope(series.times, series.right, window_fraction);
}

double front_speed_left(const FrontSeries& series, double window_fraction) {
  return fit_slope(series.times, series.left, window_fraction);
}

double front_steepness(const Eigen::ArrayXd& field, const SpatialGrid& grid,
                       double threshold_abs, int halo) {
  auto fr = front_position(field, grid, threshold_abs);
  if (!fr) return 0.0;
  const double dx = grid.dx();
  const int n = static_cast<int>(field.size());
  const int il = static_cast<int>((fr->left - grid.xmin) / dx);
  const int ir = static_cast<int>((fr->right - grid.xmin) / dx);
  double steep = 0.0;
  auto scan = [&](int center) {
    for (int i = std::max(0, center - halo); i < std::min(n - 1, center + halo); ++i)
      steep = std::max(steep, std::abs(field[i + 1] - field[i]) / dx);
  };
  scan(il);
  scan(ir);
  return steep;
}

// ---------------------------------------------------------------------------
// Signal solve
// ---------------------------------------------------------------------------

SignalSolver::SignalSolver(const SpatialGrid& grid, const SignalSpec& spec, double dt)
    : grid_(grid), spec_(spec), dt_(dt) {
  if (!spec.evolve) return;
  const int nx = grid.nx, ny = grid.dimension == 2 ? grid.ny : 1;
  const int n = nx * ny;
  const double rx = dt * spec.D_v / (grid.dx() * grid.dx());
  const double ry = grid.dimension == 2 ? dt * spec.D_v / (grid.dy() * grid.dy()) : 0.0;
  const bool periodic = grid.boundary == Boundary::Periodic;

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(5 * n));
  auto idx = [&](int i, int j) { return i + nx * j; };
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      double diag = 1.0 + dt * spec.alpha;
      auto couple = [&](int ii, int jj, double r) {
        diag += r;
        trips.emplace_back(idx(i, j), idx(ii, jj), -r);
      };
      if (i + 1 < nx) couple(i + 1, j, rx);
      else if (periodic) couple(0, j, rx);
      if (i > 0) couple(i - 1, j, rx);
      else if (periodic) couple(nx - 1, j, rx);
      if (grid.dimension == 2) {
        if (j + 1 < ny) couple(i, j + 1, ry);
        else if (periodic) couple(i, 0, ry);
        if (j > 0) couple(i, j - 1, ry);
        else if (periodic) couple(i, ny - 1, ry);
      }
      trips.emplace_back(idx(i, j), idx(i, j), diag);
    }
  }
  Eigen::SparseMatrix<double> A(n, n);
  A.setFromTriplets(trips.begin(), trips.end());
  ldlt_ = std::make_shared<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>();
  ldlt_->compute(A);
  if (ldlt_->info() != Eigen::Success)
    throw SolverError("SignalSolver: factorization failed");
}

Eigen::ArrayXXd SignalSolver::solve(const Eigen::ArrayXXd& rhs) const {
  if (!spec_.evolve) return rhs;
  Eigen::VectorXd b = rhs.reshaped().matrix();
  Eigen::VectorXd x = ldlt_->solve(b);
  Eigen::ArrayXXd out(rhs.rows(), rhs.cols());
  out.reshaped() = x.array();
  return out;
}

// ---------------------------------------------------------------------------
// Face terms
// ---------------------------------------------------------------------------

double diffusion_face_term(const FluxSpec& spec, double c_donor, double grad_c) {
  switch (spec.family) {
    case FluxFamily::LinearDiffusion:
      return spec.param("D_c") * grad_c;
    case FluxFamily::PorousMedium:
      return spec.param("D_c") * std::pow(std::max(c_donor, 0.0), spec.param("m")) * grad_c;
    case FluxFamily::DegenerateSingular:
      return degenerate_singular_coeff(std::max(c_donor, 0.0), spec.param("D_c"),
                                       spec.param("a"), spec.param("b"),
                                       spec.param("c_max")) *
             grad_c;
    case FluxFamily::Relativistic:
      return rh_flux(std::max(c_donor, 0.0), grad_c, spec.param("D_c"), spec.param("C"));
    case FluxFamily::FsgDiffusion: {
      const double eps = spec.param("eps"), lambda = spec.param("lambda");
      if (c_donor <= 1e-300) return 0.0;
      const double beta = (eps / lambda) * grad_c / c_donor;
      return (c_donor / eps) * g_of(*spec.measure, beta);
    }
    default:
      throw std::invalid_argument("diffusion_face_term: not a diffusion family");
  }
}

double taxis_velocity(const FluxSpec& spec, double grad_S) {
  switch (spec.family) {
    case FluxFamily::PsiSaturated:
      return spec.param("chi") * psi_saturate(grad_S, spec.param("C"));
    case FluxFamily::TanhTaxis:
      return tanh_taxis(grad_S, spec.param("chi"), spec.param("C"));
    case FluxFamily::LinearTaxis:
      return spec.param("chi") * grad_S;
    case FluxFamily::PhiFromPsi:
      return phi_from_psi(*spec.response, spec.param("lambda"), *spec.measure, grad_S);
    case FluxFamily::VstarSaturated: {
      // generalized saturation scale: eps_sat = 1 is the realignment form,
      // eps_sat = 0 the linearized zero-order drift
      const double s = spec.param_or("eps_sat", 1.0);
      const double f = spec.param_or("F", 1.0);
      if (std::abs(f) > 1.0 + 1e-12)
        throw std::invalid_argument("taxis_velocity: |F| must be <= 1");
      return spec.param_or("chi", 1.0) * f * grad_S / (1.0 + s * std::abs(grad_S));
    }
    default:
      throw std::invalid_argument("taxis_velocity: not a taxis family");
  }
}

namespace {

// Donor density for the diffusion argument: the uphill cell.
inline double donor_by_gradient(double cl, double cr, double grad) {
  return grad >= 0.0 ? cr : cl;
}

// Diffusion "speed cap" contribution for the hyperbolic CFL branch, and the
// effective diffusion coefficient for the parabolic branch.
struct TransportScales {
  double D_eff = 0.0;
  double v_max = 0.0;
};

TransportScales diffusion_scales(const FluxSpec& spec, const Eigen::ArrayXXd& c) {
  TransportScales s;
  switch (spec.family) {
    case FluxFamily::LinearDiffusion:
      s.D_eff = spec.param("D_c");
      break;
    case FluxFamily::PorousMedium:
      s.D_eff = spec.param("D_c") * std::pow(std::max(c.maxCoeff(), 0.0), spec.param("m"));
      break;
    case FluxFamily::DegenerateSingular: {
      const double cmax_param = spec.param("c_max");
      const double cmax = c.maxCoeff();
      if (cmax >= 0.999 * cmax_param)
        throw SolverError("degenerate-singular: density at the singular barrier");
      s.D_eff = degenerate_singular_coeff(cmax, spec.param("D_c"), spec.param("a"),
                                          spec.param("b"), cmax_param);
      break;
    }
    case FluxFamily::Relativistic:
      s.D_eff = spec.param("D_c");
      s.v_max = spec.param("C");
      break;
    case FluxFamily::FsgDiffusion: {
      const double eps = spec.param("eps"), lambda = spec.param("lambda");
      s.D_eff = moment(*spec.measure, 2) / lambda;
      s.v_max = 1.0 / eps;
      break;
    }
    default:
      break;
  }
  return s;
}

double taxis_speed_cap(const FluxSpec& spec, const Eigen::ArrayXXd& S,
                       const SpatialGrid& grid) {
  switch (spec.family) {
    case FluxFamily::PsiSaturated:
      return spec.param("chi") * spec.param("C");
    case FluxFamily::TanhTaxis:
      return spec.param("chi") * spec.param("C");
    case FluxFamily::VstarSaturated: {
      const double s = spec.param_or("eps_sat", 1.0);
      if (s > 1e-12)
        return spec.param_or("chi", 1.0) * std::abs(spec.param_or("F", 1.0)) / s;
      // unsaturated variant: fall through to state sampling
      double vmax = 0.0;
      if (S.size() > 0) {
        const int ny = static_cast<int>(S.cols());
        for (int j = 0; j < ny; ++j) {
          Eigen::ArrayXd col = S.col(j);
          Eigen::ArrayXd g = gradient(col, grid);
          for (int i = 0; i < g.size(); ++i)
            vmax = std::max(vmax, std::abs(taxis_velocity(spec, g[i])));
        }
      }
      return vmax;
    }
    case FluxFamily::LinearTaxis:
    case FluxFamily::PhiFromPsi: {
      // Not saturating (or bounded but cheap to sample): use the current state.
      double vmax = 0.0;
      if (S.size() > 0) {
        const int ny = static_cast<int>(S.cols());
        for (int j = 0; j < ny; ++j) {
          Eigen::ArrayXd col = S.col(j);
          Eigen::ArrayXd g = gradient(col, grid);
          for (int i = 0; i < g.size(); ++i)
            vmax = std::max(vmax, std::abs(taxis_velocity(spec, g[i])));
        }
      }
      return vmax;
    }
    default:
      return 0.0;
  }
}

}  // namespace

double cfl_dt(const MacroState& state, const ModelSpec& model,
              const SpatialGrid& grid, double dt_max) {
  double D_eff = 0.0, v_max = 0.0;
  if (model.diffusion) {
    auto s = diffusion_scales(*model.diffusion, state.c);
    D_eff = std::max(D_eff, s.D_eff);
    v_max += s.v_max;
  }
  if (model.taxis) v_max += taxis_speed_cap(*model.taxis, state.S, grid);

  const double h = std::min(grid.dx(), grid.dimension == 2 ? grid.dy() : grid.dx());
  double dt = dt_max;
  if (D_eff > 0.0) dt = std::min(dt, 0.4 * h * h / (2.0 * grid.dimension * D_eff));
  if (v_max > 0.0) dt = std::min(dt, 0.4 * h / (2.0 * v_max));
  return dt;
}

namespace {

void accumulate_faces_1d(const Eigen::ArrayXd& c, const Eigen::ArrayXd* S,
                         const ModelSpec& model, const SpatialGrid& grid,
                         Eigen::ArrayXd& F) {
  const int n = static_cast<int>(c.size());
  const double dx = grid.dx();
  const bool periodic = grid.boundary == Boundary::Periodic;
  F.setZero(n + 1);

  Eigen::ArrayXd gradS;
  if (model.taxis && S) gradS = *S;

  auto face = [&](int k, int il, int ir) {
    double f = 0.0;
    if (model.diffusion) {
      const double grad = (c[ir] - c[il]) / dx;
      const double cd = donor_by_gradient(c[il], c[ir], grad);
      f += diffusion_face_term(*model.diffusion, cd, grad);
    }
    if (model.taxis && S) {
      const double gS = ((*S)[ir] - (*S)[il]) / dx;
      const double vel = taxis_velocity(*model.taxis, gS);
      const double cup = vel > 0.0 ? c[il] : c[ir];
      f -= cup * vel;
    }
    F[k] = f;
  };

  for (int i = 0; i + 1 < n; ++i) face(i + 1, i, i + 1);
  if (periodic) {
    face(0, n - 1, 0);
    F[n] = F[0];
  }
  // no-flux: boundary faces stay zero
}

// 2D face sweep along one axis.  `axis` = 0 for x faces, 1 for y faces.
void accumulate_faces_2d(const Eigen::ArrayXXd& c, const Eigen::ArrayXXd* S,
                         const ModelSpec& model, const SpatialGrid& grid, int axis,
                         Eigen::ArrayXXd& F) {
  const int nx = static_cast<int>(c.rows()), ny = static_cast<int>(c.cols());
  const double h = axis == 0 ? grid.dx() : grid.dy();
  const double ht = axis == 0 ? grid.dy() : grid.dx();
  const bool periodic = grid.boundary == Boundary::Periodic;
  F.setZero(axis == 0 ? nx + 1 : nx, axis == 0 ? ny : ny + 1);

  auto wrap = [&](int i, int nmax) { return (i % nmax + nmax) % nmax; };
  auto value = [&](const Eigen::ArrayXXd& A, int i, int j) {
    return A(wrap(i, nx), wrap(j, ny));
  };
  // Tangential gradient at the face, averaged across the four neighbors.
  auto tangential = [&](const Eigen::ArrayXXd& A, int i, int j, int di, int dj) {
    // face between (i,j) and (i+di,j+dj); tangent direction is the other axis
    int ti = dj, tj = di;
    auto at = [&](int ii, int jj) {
      if (!periodic) {
        ii = std::clamp(ii, 0, nx - 1);
        jj = std::clamp(jj, 0, ny - 1);
        return A(ii, jj);
      }
      return value(A, ii, jj);
    };
    const double g1 = (at(i + ti, j + tj) - at(i - ti, j - tj)) / (2.0 * ht);
    const double g2 =
        (at(i + di + ti, j + dj + tj) - at(i + di - ti, j + dj - tj)) / (2.0 * ht);
    return 0.5 * (g1 + g2);
  };

  const int di = axis == 0 ? 1 : 0, dj = axis == 0 ? 0 : 1;
  const int nfi = axis == 0 ? nx + 1 : nx, nfj = axis == 0 ? ny : ny + 1;

  for (int fj = 0; fj < nfj; ++fj) {
    for (int fi = 0; fi < nfi; ++fi) {
      // face between cell L = (fi-di, fj-dj) and cell R = (fi, fj) along axis
      int li = fi - di, lj = fj - dj, ri = fi, rj = fj;
      const bool at_boundary =
          (axis == 0 && (fi == 0 || fi == nx)) || (axis == 1 && (fj == 0 || fj == ny));
      if (at_boundary) {
        if (!periodic) continue;  // zero flux
        li = wrap(li, nx);
        lj = wrap(lj, ny);
        ri = wrap(ri, nx);
        rj = wrap(rj, ny);
      }
      double f = 0.0;
      if (model.diffusion) {
        const double gn = (c(ri, rj) - c(li, lj)) / h;
        const double cd = donor_by_gradient(c(li, lj), c(ri, rj), gn);
        const auto fam = model.diffusion->family;
        if (fam == FluxFamily::Relativistic) {
          // |grad c| needs the tangential component too
          const double gt = tangential(c, li, lj, di, dj);
          const double D_c = model.diffusion->param("D_c");
          const double C = model.diffusion->param("C");
          Eigen::Vector2d g(gn, gt);
          Eigen::Vector2d flux = rh_flux(std::max(cd, 0.0), g, D_c, C);
          f += flux[0];
        } else {
          f += diffusion_face_term(*model.diffusion, cd, gn);
        }
      }
      if (model.taxis && S) {
        const double gn = ((*S)(ri, rj) - (*S)(li, lj)) / h;
        double vel;
        const auto fam = model.taxis->family;
        if (fam == FluxFamily::PsiSaturated || fam == FluxFamily::VstarSaturated) {
          // vector saturation: normal component of the saturated vector
          const double gt = tangential(*S, li, lj, di, dj);
          Eigen::Vector2d g(gn, gt);
          if (fam == FluxFamily::PsiSaturated) {
            Eigen::Vector2d v =
                model.taxis->param("chi") * psi_saturate(g, model.taxis->param("C"));
            vel = v[0];
          } else {
            Eigen::Matrix2d Fm = model.taxis->anisotropy
                                     ? *model.taxis->anisotropy
                                     : Eigen::Matrix2d::Identity() *
                                           model.taxis->param_or("F", 1.0);
            Eigen::Vector2d v = model.taxis->param_or("chi", 1.0) * vstar(g, Fm);
            vel = v[0];
          }
        } else {
          vel = taxis_velocity(*model.taxis, gn);
        }
        const double cup = vel > 0.0 ? c(li, lj) : c(ri, rj);
        f -= cup * vel;
      }
      F(fi, fj) = f;
    }
  }
}

}  // namespace

StepStats step(MacroState& state, const ModelSpec& model, const SpatialGrid& grid,
               double dt, const SignalSolver* signal_solver) {
  model.validate();
  const double dt_bound = cfl_dt(state, model, grid, std::numeric_limits<double>::max());
  if (dt > dt_bound * (1.0 + 1e-9))
    throw SolverError("step: dt violates the CFL bound");

  StepStats stats;
  stats.mass_before = state.c.sum() * grid.cell_volume();

  const int nx = static_cast<int>(state.c.rows());
  const int ny = static_cast<int>(state.c.cols());

  if (grid.dimension == 1) {
    Eigen::ArrayXd c = state.c.col(0);
    Eigen::ArrayXd Scol;
    const Eigen::ArrayXd* Sp = nullptr;
    if (state.has_signal()) {
      Scol = state.S.col(0);
      Sp = &Scol;
    }
    Eigen::ArrayXd F;
    accumulate_faces_1d(c, Sp, model, grid, F);
    const double r = dt / grid.dx();
    for (int i = 0; i < nx; ++i) state.c(i, 0) = c[i] + r * (F[i + 1] - F[i]);
  } else {
    Eigen::ArrayXXd Fx, Fy;
    const Eigen::ArrayXXd* Sp = state.has_signal() ? &state.S : nullptr;
    accumulate_faces_2d(state.c, Sp, model, grid, 0, Fx);
    accumulate_faces_2d(state.c, Sp, model, grid, 1, Fy);
    const double rx = dt / grid.dx(), ry = dt / grid.dy();
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i)
        state.c(i, j) += rx * (Fx(i + 1, j) - Fx(i, j)) + ry * (Fy(i, j + 1) - Fy(i, j));
  }

  if (model.reaction_c) {
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i)
        state.c(i, j) += dt * model.reaction_c(state.c(i, j),
                                               state.has_signal() ? state.S(i, j) : 0.0);
  }

  if (state.has_signal() && model.signal && model.signal->evolve) {
    Eigen::ArrayXXd rhs = state.S + dt * model.signal->beta * state.c;
    if (signal_solver && signal_solver->dt() == dt) {
      state.S = signal_solver->solve(rhs);
    } else {
      SignalSolver local(grid, *model.signal, dt);
      state.S = local.solve(rhs);
    }
  }

  state.t += dt;
  stats.mass_after = state.c.sum() * grid.cell_volume();
  stats.min_c = state.c.minCoeff();
  stats.max_c = state.c.maxCoeff();
  const double scale = std::max(1.0, stats.max_c);
  if (stats.min_c < -1e-10 * scale)
    throw SolverError("step: negative density beyond tolerance");
  return stats;
}

Trajectory solve(const MacroState& initial, const ModelSpec& model,
                 const SpatialGrid& grid, const SolveOptions& options) {
  model.validate();
  grid.validate();
  if ((initial.c < -1e-13).any())
    throw std::invalid_argument("solve: initial density must be nonnegative");
  if (initial.c.rows() != grid.nx ||
      initial.c.cols() != (grid.dimension == 2 ? grid.ny : 1))
    throw std::invalid_argument("solve: initial state does not match the grid");

  Trajectory traj;
  MacroState state = initial;
  traj.c0_max = state.c.maxCoeff();
  traj.min_c_seen = state.c.minCoeff();
  const double theta_abs = options.front_theta * traj.c0_max;

  auto record = [&](const MacroState& st) {
    traj.snapshots.push_back(st);
    if (grid.dimension == 1) {
      Eigen::ArrayXd col = st.c.col(0);
      auto fr = front_position(col, grid, theta_abs);
      if (fr && (traj.fronts.times.empty() || st.t > traj.fronts.times.back())) {
        traj.fronts.append(st.t, *fr, front_steepness(col, grid, theta_abs));
      }
    }
  };
  record(state);

  std::unique_ptr<SignalSolver> sig;
  double sig_dt = -1.0;
  long step_count = 0;
  while (state.t < options.final_time * (1.0 - 1e-12)) {
    double dt = cfl_dt(state, model, grid, options.dt_max);
    dt = std::min(dt, options.final_time - state.t);
    if (model.signal && model.signal->evolve && dt != sig_dt) {
      sig = std::make_unique<SignalSolver>(grid, *model.signal, dt);
      sig_dt = dt;
    }
    StepStats st = step(state, model, grid, dt, sig.get());
    ++step_count;
    const double m = std::max(std::abs(st.mass_before), 1e-300);
    traj.max_step_mass_drift =
        std::max(traj.max_step_mass_drift, std::abs(st.mass_after - st.mass_before) / m);
    traj.min_c_seen = std::min(traj.min_c_seen, st.min_c);
    const bool last = state.t >= options.final_time * (1.0 - 1e-12);
    if (last || (options.snapshot_every > 0 && step_count % options.snapshot_every == 0))
      record(state);
  }
  traj.steps = step_count;
  return traj;
}

}  // namespace fluxlim
