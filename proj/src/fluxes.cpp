#include "fluxlim/fluxes.hpp"

namespace fluxlim {

double degenerate_singular_coeff(double c, double D_c, double a, double b,
                                 double c_max) {
  if (c < 0.0 || c >= c_max)
    throw std::domain_error("degenerate_singular_coeff: requires 0 <= c < c_max");
  return D_c * std::pow(c, b) / std::pow(c_max - c, a);
}

Eigen::Vector2d vstar(const Eigen::Vector2d& grad_S, const Eigen::Matrix2d& F) {
  const double norm2 = F.jacobiSvd().singularValues()(0);
  if (norm2 > 1.0 + 1e-12)
    throw std::invalid_argument("vstar: ||F||_2 must be <= 1");
  return F * grad_S / (1.0 + grad_S.norm());
}

double vstar(double grad_S, double F) {
  if (std::abs(F) > 1.0 + 1e-12)
    throw std::invalid_argument("vstar: |F| must be <= 1");
  return F * grad_S / (1.0 + std::abs(grad_S));
}

double psi_example(double beta, double C) {
  return C - beta * (2.0 * beta * beta + 3.0) /
                 (2.0 * std::pow(beta * beta + 1.0, 1.5));
}

double phi_from_psi(const ResponseFunction& psi, double lambda,
                    const VelocityMeasure& mu, double beta) {
  if (mu.dimension != 1)
    throw std::invalid_argument("phi_from_psi: 1D measures only");
  if (lambda <= 0.0) throw std::invalid_argument("phi_from_psi: lambda must be > 0");
  double acc = 0.0;
  for (int i = 0; i < mu.size(); ++i) {
    const double v = mu.nodes[i];
    const double dv = mu.weights[i] * mu.set_volume;  // flat-measure weight
    acc += dv * v * psi.psi(v * beta);
  }
  return -acc / lambda;
}

double calibrate_lambda(const ResponseFunction& psi, const VelocityMeasure& mu,
                        const Eigen::ArrayXd& betas,
                        const std::function<double(double)>& target) {
  // phi_from_psi = A(beta)/lambda with A independent of lambda: fit 1/lambda.
  double num = 0.0, den = 0.0;
  for (int i = 0; i < betas.size(); ++i) {
    const double A = phi_from_psi(psi, 1.0, mu, betas[i]);
    num += A * target(betas[i]);
    den += A * A;
  }
  if (den == 0.0) throw std::invalid_argument("calibrate_lambda: degenerate fit");
  const double inv_lambda = num / den;
  if (inv_lambda <= 0.0)
    throw std::invalid_argument("calibrate_lambda: fit gave nonpositive lambda");
  return 1.0 / inv_lambda;
}

FluxFamily flux_family_from_string(const std::string& tag) {
  if (tag == "linear-diffusion") return FluxFamily::LinearDiffusion;
  if (tag == "porous-medium") return FluxFamily::PorousMedium;
  if (tag == "degenerate-singular") return FluxFamily::DegenerateSingular;
  if (tag == "relativistic") return FluxFamily::Relativistic;
  if (tag == "fsg-diffusion") return FluxFamily::FsgDiffusion;
  if (tag == "psi-saturated") return FluxFamily::PsiSaturated;
  if (tag == "tanh-taxis") return FluxFamily::TanhTaxis;
  if (tag == "linear-taxis") return FluxFamily::LinearTaxis;
  if (tag == "phi-from-psi") return FluxFamily::PhiFromPsi;
  if (tag == "vstar-saturated") return FluxFamily::VstarSaturated;
  throw std::invalid_argument("unknown flux family tag: " + tag);
}

std::string to_string(FluxFamily family) {
  switch (family) {
    case FluxFamily::LinearDiffusion: return "linear-diffusion";
    case FluxFamily::PorousMedium: return "porous-medium";
    case FluxFamily::DegenerateSingular: return "degenerate-singular";
    case FluxFamily::Relativistic: return "relativistic";
    case FluxFamily::FsgDiffusion: return "fsg-diffusion";
    case FluxFamily::PsiSaturated: return "psi-saturated";
    case FluxFamily::TanhTaxis: return "tanh-taxis";
    case FluxFamily::LinearTaxis: return "linear-taxis";
    case FluxFamily::PhiFromPsi: return "phi-from-psi";
    case FluxFamily::VstarSaturated: return "vstar-saturated";
  }
  return "?";
}

bool is_taxis_family(FluxFamily family) {
  switch (family) {
    case FluxFamily::PsiSaturated:
    case FluxFamily::TanhTaxis:
    case FluxFamily::LinearTaxis:
    case FluxFamily::PhiFromPsi:
    case FluxFamily::VstarSaturated:
      return true;
    default:
      return false;
  }
}

double FluxSpec::param(const std::string& name) const {
  auto it = params.find(name);
  if (it == params.end())
    throw std::invalid_argument("FluxSpec: missing parameter '" + name +
                                "' for family " + to_string(family));
  return it->second;
}

double FluxSpec::param_or(const std::string& name, double fallback) const {
  auto it = params.find(name);
  return it == params.end() ? fallback : it->second;
}

void FluxSpec::validate() const {
  auto require_pos = [&](const std::string& name) {
    if (param(name) <= 0.0)
      throw std::invalid_argument("FluxSpec: parameter '" + name +
                                  "' must be > 0 for family " + to_string(family));
  };
  switch (family) {
    case FluxFamily::LinearDiffusion:
      require_pos("D_c");
      break;
    case FluxFamily::PorousMedium:
      require_pos("D_c");
      require_pos("m");
      break;
    case FluxFamily::DegenerateSingular:
      require_pos("D_c");
      require_pos("c_max");
      if (param("a") <= 0.0 || param("b") <= 0.0)
        throw std::invalid_argument("FluxSpec: exponents a, b must be > 0");
      break;
    case FluxFamily::Relativistic:
      require_pos("D_c");
      require_pos("C");
      break;
    case FluxFamily::FsgDiffusion:
      require_pos("lambda");
      require_pos("eps");
      if (!measure) throw std::invalid_argument("FluxSpec: fsg-diffusion needs a measure");
      break;
    case FluxFamily::PsiSaturated:
    case FluxFamily::TanhTaxis:
      require_pos("C");
      if (param("chi") < 0.0) throw std::invalid_argument("FluxSpec: chi must be >= 0");
      break;
    case FluxFamily::LinearTaxis:
      if (param("chi") < 0.0) throw std::invalid_argument("FluxSpec: chi must be >= 0");
      break;
    case FluxFamily::PhiFromPsi:
      require_pos("lambda");
      if (!measure || !response)
        throw std::invalid_argument("FluxSpec: phi-from-psi needs a measure and response");
      break;
    case FluxFamily::VstarSaturated: {
      if (param_or("chi", 1.0) < 0.0)
        throw std::invalid_argument("FluxSpec: chi must be >= 0");
      const double f = param_or("F", 1.0);
      if (std::abs(f) > 1.0 + 1e-12)
        throw std::invalid_argument("FluxSpec: |F| must be <= 1");
      if (anisotropy) {
        const double n2 = anisotropy->jacobiSvd().singularValues()(0);
        if (n2 > 1.0 + 1e-12)
          throw std::invalid_argument("FluxSpec: ||F||_2 must be <= 1");
      }
      break;
    }
  }
}

}  // namespace fluxlim
