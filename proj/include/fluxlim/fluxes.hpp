#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>

#include "fluxlim/measure.hpp"

namespace fluxlim {

// ---------------------------------------------------------------------------
// Pointwise flux / velocity functions.  Scalar overloads carry the 1D solver;
// fixed-size Eigen vectors serve the 2D one.  All saturating forms keep the
// stated bounds for every argument, including the 0/0 corner which is defined
// as 0 by continuous extension.
// ---------------------------------------------------------------------------

/// Relativistic-heat flux D_c c grad / sqrt(c^2 + (D_c/C)^2 |grad|^2).
/// Magnitude never exceeds C*c.
template <typename S>
S rh_flux(S c, S grad_c, S D_c, S C) {
  const S r = D_c / C;
  const S den = std::sqrt(c * c + r * r * grad_c * grad_c);
  if (den == S(0)) return S(0);
  return D_c * c * grad_c / den;
}

template <typename S, int D>
Eigen::Matrix<S, D, 1> rh_flux(S c, const Eigen::Matrix<S, D, 1>& grad_c, S D_c, S C) {
  const S r = D_c / C;
  const S den = std::sqrt(c * c + r * r * grad_c.squaredNorm());
  if (den == S(0)) return Eigen::Matrix<S, D, 1>::Zero();
  return (D_c * c / den) * grad_c;
}

/// psi(z) = z / sqrt(1 + |z|^2 / C^2): identity near 0, |psi| < C.
template <typename S>
S psi_saturate(S z, S C) {
  return z / std::sqrt(S(1) + (z * z) / (C * C));
}

template <typename S, int D>
Eigen::Matrix<S, D, 1> psi_saturate(const Eigen::Matrix<S, D, 1>& z, S C) {
  return z / std::sqrt(S(1) + z.squaredNorm() / (C * C));
}

/// Componentwise chemotactic velocity chi*C*tanh(y_k/(1+C)).
template <typename S>
S tanh_taxis(S grad_S, S chi, S C) {
  return chi * C * std::tanh(grad_S / (S(1) + C));
}

template <typename S, int D>
Eigen::Matrix<S, D, 1> tanh_taxis(const Eigen::Matrix<S, D, 1>& grad_S, S chi, S C) {
  Eigen::Matrix<S, D, 1> out;
  for (int k = 0; k < grad_S.size(); ++k)
    out[k] = chi * C * std::tanh(grad_S[k] / (S(1) + C));
  return out;
}

/// Degenerate-singular diffusion coefficient D_c c^b / (c_max - c)^a.
/// Throws std::domain_error at or beyond the singular barrier c >= c_max.
double degenerate_singular_coeff(double c, double D_c, double a, double b, double c_max);

/// Preferred realignment velocity F grad_S / (1 + |grad_S|); |result| < ||F||_2 <= 1.
/// Rejects F with spectral norm beyond 1 + 1e-12.
Eigen::Vector2d vstar(const Eigen::Vector2d& grad_S, const Eigen::Matrix2d& F);
double vstar(double grad_S, double F);  // 1D: F is a scalar in [-1, 1]

// ---------------------------------------------------------------------------
// Turning-response machinery linking a response rate Psi to the macroscopic
// taxis velocity Phi(beta) = -(1/lambda) int_V v Psi(v beta) dv.
// ---------------------------------------------------------------------------

struct ResponseFunction {
  std::function<double(double)> psi;
  std::string description;
};

/// Response rate C - b(2b^2+3)/(2(b^2+1)^{3/2}); nonnegative for C >= 1
/// (the odd part stays below 1 in modulus).  Default C = 2.
double psi_example(double beta, double C = 2.0);

/// Phi by quadrature against the flat measure dv on [-1,1]: the measure's
/// nodes with weights scaled to total |V|.
double phi_from_psi(const ResponseFunction& psi, double lambda,
                    const VelocityMeasure& mu, double beta);

/// Least-squares fit of lambda so that phi_from_psi matches `target` on the
/// grid betas (the quadrature is linear in 1/lambda, so the fit is closed
/// form).  Returns the fitted lambda.
double calibrate_lambda(const ResponseFunction& psi, const VelocityMeasure& mu,
                        const Eigen::ArrayXd& betas,
                        const std::function<double(double)>& target);

// ---------------------------------------------------------------------------
// FluxSpec: named flux family + parameters, as referenced from experiment
// configs under "diffusion_flux" / "taxis_flux".
// ---------------------------------------------------------------------------

enum class FluxFamily {
  LinearDiffusion,     // D_c grad c
  PorousMedium,        // D_c c^m grad c
  DegenerateSingular,  // D_c c^b/(c_max-c)^a grad c
  Relativistic,        // rh_flux
  FsgDiffusion,        // (1/eps) c G((eps/lambda) grad c / c), G from a measure
  PsiSaturated,        // taxis: chi * psi_saturate(grad S, C)
  TanhTaxis,           // taxis: tanh_taxis(grad S, chi, C)
  LinearTaxis,         // taxis: chi grad S
  PhiFromPsi,          // taxis: Phi(grad S) by quadrature
  VstarSaturated,      // taxis: chi * F grad S / (1 + |grad S|)
};

FluxFamily flux_family_from_string(const std::string& tag);
std::string to_string(FluxFamily family);
bool is_taxis_family(FluxFamily family);

struct FluxSpec {
  FluxFamily family = FluxFamily::LinearDiffusion;
  std::map<std::string, double> params;
  std::optional<Eigen::Matrix2d> anisotropy;  // F(x) constant variant
  // FsgDiffusion and PhiFromPsi carry extra context:
  std::optional<VelocityMeasure> measure;
  std::optional<ResponseFunction> response;

  double param(const std::string& name) const;
  double param_or(const std::string& name, double fallback) const;

  /// Validates positivity constraints (D_c, C, lambda > 0; chi >= 0;
  /// c_max > 0; ||F||_2 <= 1).  Throws std::invalid_argument.
  void validate() const;
};

}  // namespace fluxlim
