#pragma once

#include <Eigen/Dense>

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fluxlim {

/// Probability measures on a bounded velocity set V, represented by
/// quadrature nodes and weights.  In 1D, V = [-1,1]; in 2D, V is the
/// open unit ball.  Continuous measures use Gauss-Legendre (1D) or a
/// polar tensor rule (2D); discrete measures are atom lists.
enum class MeasureKind { ContinuousQuadrature, DiscreteAtoms };

struct VelocityMeasure {
  int dimension = 1;
  MeasureKind kind = MeasureKind::ContinuousQuadrature;
  Eigen::ArrayXd nodes;        // 1D node positions (size n)
  Eigen::Matrix2Xd nodes2;     // 2D node positions (2 x n), ball case
  Eigen::ArrayXd weights;      // probability weights, sum to 1
  bool symmetric = false;      // odd moments vanish (detected at build)
  double set_volume = 2.0;     // |V|: 2 in 1D, pi for the unit ball

  int size() const { return static_cast<int>(weights.size()); }
};

struct VelocitySetSpec {
  int dimension = 1;           // 1 or 2
  enum class Shape { Interval, Ball } shape = Shape::Interval;
  int resolution = 32;         // nodes per axis
};

/// Gauss-Legendre nodes/weights on [-1,1]; weights sum to 2.
void gauss_legendre(int n, Eigen::ArrayXd& nodes, Eigen::ArrayXd& weights);

/// Quadrature of the normalized Lebesgue measure on V.
/// Throws std::invalid_argument for resolution < 2 or unsupported dimension.
VelocityMeasure make_lebesgue(const VelocitySetSpec& spec);

/// Atom-list measure from (velocity, weight) pairs.  Rejects negative
/// weights, atoms outside V, and totals away from 1 (1e-12).
VelocityMeasure make_discrete(const std::vector<std::pair<double, double>>& atoms);

/// Uniform midpoint-cell quadrature of the normalized Lebesgue measure on
/// [-1,1].  Used by the kinetic solver when a finite-volume mesh in v is
/// needed (velocity transport); make_lebesgue stays Gauss-Legendre.
VelocityMeasure make_uniform_cells(int n);

/// n-th raw moment, 1D: integral of v^n d(mu).  In 2D returns the moment of
/// the first component.  Requires 0 <= n <= 12 (documented accuracy range).
double moment(const VelocityMeasure& mu, int n);

/// Second-moment matrix: integral of (v otimes v) d(mu), 2D measures.
Eigen::Matrix2d moment_tensor(const VelocityMeasure& mu);

/// The induced saturating function G(beta) = int v e^{beta v} dmu / int e^{beta v} dmu.
/// Evaluated in the shifted form e^{beta(v - v_shift)} so large |beta| cannot
/// overflow.  1D measures only; result lies in (-1, 1).
double g_of(const VelocityMeasure& mu, double beta);

/// One named check with outcome and a short detail string.
struct CheckItem {
  std::string name;
  bool pass = false;
  double value = 0.0;
  std::string detail;
};

struct CheckReport {
  std::vector<CheckItem> items;
  bool passed() const {
    for (const auto& it : items)
      if (!it.pass) return false;
    return true;
  }
};

/// Verifies on a sample grid that G is odd (1e-10), strictly increasing,
/// bounded by 1 in modulus, and saturated at the grid edge:
/// G(beta_max) >= 1 - delta_sat.  Returns a failing report rather than
/// throwing.  The grid must be symmetric about 0 and span at least [-50,50].
CheckReport check_g_properties(const VelocityMeasure& mu,
                               const Eigen::ArrayXd& betas,
                               double delta_sat = 0.05);

/// Realizability discriminator for a saturating function g: evaluates the
/// even derivatives d^{2n}/dbeta^{2n} of I(beta) = exp(int_0^beta g) at 0 by
/// high-order central finite differences (step 0.05, one Richardson step)
/// and reports membership in (0, 1] with tolerance 1e-4.  Orders are the
/// derivative orders: even, <= 8.
CheckReport moment_condition_test(const std::function<double(double)>& g,
                                  const std::vector<int>& orders);

/// exp(int_0^beta g) by composite 16-point Gauss-Legendre panels of width
/// <= 1e-2.  Exposed for tests.
double exp_integral_of(const std::function<double(double)>& g, double beta);

/// Finite-difference weights for derivative `order` on the integer-offset
/// stencil `offsets` (Fornberg-style, solved as a small Vandermonde system).
Eigen::VectorXd fd_weights(int order, const Eigen::VectorXi& offsets);

}  // namespace fluxlim
