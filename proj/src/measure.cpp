#include "fluxlim/measure.hpp"

#include <cmath>

namespace fluxlim {

void gauss_legendre(int n, Eigen::ArrayXd& nodes, Eigen::ArrayXd& weights) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
  nodes.resize(n);
  weights.resize(n);
  // Newton iteration from the Chebyshev-like initial guess; P_n by recurrence.
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      pp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    double w = 2.0 / ((1.0 - x * x) * pp * pp);
    weights[i] = w;
    weights[n - 1 - i] = w;
  }
}

namespace {

bool detect_symmetric_1d(const Eigen::ArrayXd& v, const Eigen::ArrayXd& w) {
  for (int n : {1, 3, 5}) {
    if (std::abs((w * v.pow(n)).sum()) > 1e-10) return false;
  }
  return true;
}

}  // namespace

VelocityMeasure make_lebesgue(const VelocitySetSpec& spec) {
  if (spec.resolution < 2)
    throw std::invalid_argument("make_lebesgue: resolution must be >= 2");
  if (spec.dimension != 1 && spec.dimension != 2)
    throw std::invalid_argument("make_lebesgue: dimension must be 1 or 2");

  VelocityMeasure mu;
  mu.dimension = spec.dimension;
  mu.kind = MeasureKind::ContinuousQuadrature;
  mu.symmetric = true;

  if (spec.dimension == 1) {
    Eigen::ArrayXd x, w;
    gauss_legendre(spec.resolution, x, w);
    mu.nodes = x;
    mu.weights = w / 2.0;  // normalize |V| = 2 away
    mu.set_volume = 2.0;
    return mu;
  }

  // Unit ball: Gauss-Legendre in r weighted by r (mapped to [0,1]),
  // uniform angles (trapezoid on the periodic circle is spectrally exact).
  const int nr = spec.resolution, nt = spec.resolution;
  Eigen::ArrayXd gr, gw;
  gauss_legendre(nr, gr, gw);
  Eigen::ArrayXd r = (gr + 1.0) / 2.0;
  Eigen::ArrayXd wr = gw / 2.0;  // weights for int_0^1 dr
  mu.nodes2.resize(2, nr * nt);
  mu.weights.resize(nr * nt);
  for (int i = 0; i < nr; ++i) {
    for (int j = 0; j < nt; ++j) {
      double th = 2.0 * M_PI * (j + 0.5) / nt;
      int k = i * nt + j;
      mu.nodes2(0, k) = r[i] * std::cos(th);
      mu.nodes2(1, k) = r[i] * std::sin(th);
      // d(mu) = (1/pi) r dr dtheta
      mu.weights[k] = (1.0 / M_PI) * wr[i] * r[i] * (2.0 * M_PI / nt);
    }
  }
  mu.weights /= mu.weights.sum();  // remove residual roundoff
  mu.set_volume = M_PI;
  return mu;
}

VelocityMeasure make_discrete(const std::vector<std::pair<double, double>>& atoms) {
  if (atoms.empty()) throw std::invalid_argument("make_discrete: no atoms");
  VelocityMeasure mu;
  mu.dimension = 1;
  mu.kind = MeasureKind::DiscreteAtoms;
  mu.nodes.resize(static_cast<int>(atoms.size()));
  mu.weights.resize(static_cast<int>(atoms.size()));
  double total = 0.0;
  for (size_t i = 0; i < atoms.size(); ++i) {
    auto [v, w] = atoms[i];
    if (w < 0.0) throw std::invalid_argument("make_discrete: negative weight");
    if (std::abs(v) > 1.0)
      throw std::invalid_argument("make_discrete: atom outside V = [-1,1]");
    mu.nodes[static_cast<int>(i)] = v;
    mu.weights[static_cast<int>(i)] = w;
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw std::invalid_argument("make_discrete: weights must sum to 1");
  mu.set_volume = 2.0;
  mu.symmetric = detect_symmetric_1d(mu.nodes, mu.weights);
  return mu;
}

VelocityMeasure make_uniform_cells(int n) {
  if (n < 2) throw std::invalid_argument("make_uniform_cells: n must be >= 2");
  VelocityMeasure mu;
  mu.dimension = 1;
  mu.kind = MeasureKind::ContinuousQuadrature;
  mu.symmetric = true;
  mu.nodes = Eigen::ArrayXd::LinSpaced(n, -1.0 + 1.0 / n, 1.0 - 1.0 / n);
  mu.weights = Eigen::ArrayXd::Constant(n, 1.0 / n);
  mu.set_volume = 2.0;
  return mu;
}

double moment(const VelocityMeasure& mu, int n) {
  if (n < 0 || n > 12)
    throw std::invalid_argument("moment: order must be in [0, 12]");
  if (n == 0) return mu.weights.sum();
  if (mu.dimension == 1) return (mu.weights * mu.nodes.pow(n)).sum();
  return (mu.weights * mu.nodes2.row(0).transpose().array().pow(n)).sum();
}

Eigen::Matrix2d moment_tensor(const VelocityMeasure& mu) {
  if (mu.dimension != 2)
    throw std::invalid_argument("moment_tensor: 2D measures only");
  Eigen::Matrix2d M = Eigen::Matrix2d::Zero();
  for (int k = 0; k < mu.size(); ++k) {
    M += mu.weights[k] * mu.nodes2.col(k) * mu.nodes2.col(k).transpose();
  }
  return M;
}

double g_of(const VelocityMeasure& mu, double beta) {
  if (mu.dimension != 1) throw std::invalid_argument("g_of: 1D measures only");
  if (!std::isfinite(beta)) throw std::invalid_argument("g_of: beta not finite");
  // Shift the exponent by its max over nodes; the ratio is unchanged and
  // every exponential is <= 1.
  const Eigen::ArrayXd s = beta * mu.nodes;
  const double shift = s.maxCoeff();
  const Eigen::ArrayXd e = (s - shift).exp();
  const double den = (mu.weights * e).sum();
  const double num = (mu.weights * mu.nodes * e).sum();
  return num / den;
}

CheckReport check_g_properties(const VelocityMeasure& mu,
                               const Eigen::ArrayXd& betas,
                               double delta_sat) {
  const int m = static_cast<int>(betas.size());
  if (m < 3) throw std::invalid_argument("check_g_properties: grid too small");
  const double bmax = betas.maxCoeff();
  if (bmax < 50.0 || std::abs(betas.minCoeff() + bmax) > 1e-9)
    throw std::invalid_argument(
        "check_g_properties: grid must be symmetric about 0 and span [-50,50]");

  Eigen::ArrayXd g(m);
  for (int i = 0; i < m; ++i) g[i] = g_of(mu, betas[i]);

  CheckReport rep;

  double odd_err = 0.0;
  for (int i = 0; i < m; ++i) {
    // betas symmetric: mirror index
    odd_err = std::max(odd_err, std::abs(g[i] + g[m - 1 - i]));
  }
  rep.items.push_back({"odd", odd_err <= 1e-10, odd_err,
                       "max |G(b)+G(-b)| over the grid"});

  // Strict increase, except where G has already saturated to +-1 within
  // roundoff (there consecutive doubles tie).
  bool mono = true;
  double min_gap = std::numeric_limits<double>::infinity();
  for (int i = 0; i + 1 < m; ++i) {
    const double gap = g[i + 1] - g[i];
    min_gap = std::min(min_gap, gap);
    if (gap < 0.0) mono = false;
    const bool saturated = std::min(std::abs(g[i]), std::abs(g[i + 1])) > 1.0 - 1e-13;
    if (gap == 0.0 && !saturated) mono = false;
  }
  rep.items.push_back({"strictly-increasing", mono, min_gap,
                       "min consecutive increment on the grid"});

  double max_abs = g.abs().maxCoeff();
  rep.items.push_back({"bounded-by-1", max_abs < 1.0, max_abs, "max |G|"});

  double gsat = g[m - 1];
  rep.items.push_back({"saturation", gsat >= 1.0 - delta_sat, gsat,
                       "G at the largest beta on the grid"});
  return rep;
}

double exp_integral_of(const std::function<double(double)>& g, double beta) {
  if (beta == 0.0) return 1.0;
  static Eigen::ArrayXd gx, gw;
  if (gx.size() == 0) gauss_legendre(16, gx, gw);
  const int npan = std::max(1, static_cast<int>(std::ceil(std::abs(beta) / 1e-2)));
  double total = 0.0;
  for (int p = 0; p < npan; ++p) {
    const double a = beta * p / npan, b = beta * (p + 1) / npan;
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double s = 0.0;
    for (int k = 0; k < 16; ++k) s += gw[k] * g(mid + half * gx[k]);
    total += half * s;
  }
  return std::exp(total);
}

Eigen::VectorXd fd_weights(int order, const Eigen::VectorXi& offsets) {
  const int n = static_cast<int>(offsets.size());
  if (order >= n) throw std::invalid_argument("fd_weights: stencil too small");
  Eigen::MatrixXd A(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c)
      A(r, c) = std::pow(static_cast<double>(offsets[c]), r);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  double fact = 1.0;
  for (int k = 2; k <= order; ++k) fact *= k;
  rhs[order] = fact;
  return A.fullPivLu().solve(rhs);
}

namespace {

// d^m/dbeta^m I(0), 8th-order central stencil with step h plus one
// Richardson step at h/2.
double derivative_at_zero(const std::function<double(double)>& g, int m, double h) {
  const int npts = m + 7 + ((m + 7) % 2 == 0 ? 1 : 0);  // odd point count
  const int half = npts / 2;
  Eigen::VectorXi offs(npts);
  for (int i = 0; i < npts; ++i) offs[i] = i - half;
  const Eigen::VectorXd w = fd_weights(m, offs);
  auto eval = [&](double step) {
    double acc = 0.0;
    for (int i = 0; i < npts; ++i) acc += w[i] * exp_integral_of(g, offs[i] * step);
    return acc / std::pow(step, m);
  };
  const double d1 = eval(h), d2 = eval(h / 2);
  const double k = 256.0;  // 2^8 for the 8th-order leading error term
  return (k * d2 - d1) / (k - 1.0);
}

}  // namespace

CheckReport moment_condition_test(const std::function<double(double)>& g,
                                  const std::vector<int>& orders) {
  CheckReport rep;
  const double tol = 1e-4;
  for (int m : orders) {
    if (m <= 0 || m % 2 != 0 || m > 8)
      throw std::invalid_argument("moment_condition_test: orders must be even, in [2, 8]");
    const double d = derivative_at_zero(g, m, 0.05);
    const bool in_unit = (d > tol) && (d <= 1.0 + tol);
    rep.items.push_back({"derivative-order-" + std::to_string(m), in_unit, d,
                         "d^" + std::to_string(m) + " I(0), must lie in (0, 1]"});
  }
  return rep;
}

}  // namespace fluxlim
