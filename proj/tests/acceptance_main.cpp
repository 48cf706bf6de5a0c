// Acceptance suite: one pass/fail line per criterion, exit 1 on any failure.
// Committed regression baselines live in tests/data/sweep_baselines.json.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fluxlim/experiment.hpp"
#include "fluxlim/io.hpp"
#include "fluxlim/upscale.hpp"

using namespace fluxlim;
using nlohmann::json;

namespace {

int failures = 0;

struct Criterion {
  std::string label;
  std::chrono::steady_clock::time_point start;
  bool ok = true;
  std::string detail;

  explicit Criterion(std::string l)
      : label(std::move(l)), start(std::chrono::steady_clock::now()) {}
  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
  ~Criterion() {
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s criterion %s (%.1fs)%s%s\n", ok ? "PASS" : "FAIL", label.c_str(),
                secs, detail.empty() ? "" : " -- ", detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
  }
};

json load_baselines() {
  std::ifstream in(FLUXLIM_BASELINE_FILE);
  if (!in) throw std::runtime_error("missing baseline file " FLUXLIM_BASELINE_FILE);
  json j;
  in >> j;
  return j;
}

double linf_vs(const std::function<double(double)>& f,
               const std::function<double(double)>& ref, double lo, double hi, int n) {
  double worst = 0.0;
  for (int k = 0; k <= n; ++k) {
    const double b = lo + (hi - lo) * k / n;
    worst = std::max(worst, std::abs(f(b) - ref(b)));
  }
  return worst;
}

}  // namespace

int main() {
  const json baselines = load_baselines();

  {  // 1. closed-form G
    Criterion c("1 (closed-form G)");
    auto atoms = make_discrete({{-1.0, 0.5}, {1.0, 0.5}});
    auto leb = make_lebesgue({1, VelocitySetSpec::Shape::Interval, 32});
    const double err_tanh =
        linf_vs([&](double b) { return g_of(atoms, b); },
                [](double b) { return std::tanh(b); }, -50.0, 50.0, 2000);
    const double err_coth =
        linf_vs([&](double b) { return g_of(leb, b); },
                [](double b) { return b == 0.0 ? 0.0 : 1.0 / std::tanh(b) - 1.0 / b; },
                -50.0, 50.0, 2000);
    c.require(err_tanh <= 1e-12, "tanh deviation " + format_double(err_tanh));
    c.require(err_coth <= 1e-8, "coth deviation " + format_double(err_coth));
  }

  {  // 2. moment-condition discriminator
    Criterion c("2 (moment-condition discriminator)");
    auto tanh_rep = moment_condition_test([](double b) { return std::tanh(b); }, {2, 4});
    c.require(tanh_rep.passed(), "tanh should pass");
    c.require(std::abs(tanh_rep.items[0].value - 1.0) <= 1e-4, "d2 I(0) != 1");
    c.require(std::abs(tanh_rep.items[1].value - 1.0) <= 1e-4, "d4 I(0) != 1");
    auto rh_rep = moment_condition_test(
        [](double b) { return b / std::sqrt(1.0 + b * b); }, {2, 4});
    c.require(!rh_rep.passed(), "saturated-drift profile should fail");
    c.require(std::abs(rh_rep.items[1].value) <= 1e-4,
              "d4 I(0) = " + format_double(rh_rep.items[1].value));
  }

  {  // 3. Phi-Psi correspondence
    Criterion c("3 (Phi-Psi correspondence)");
    auto mu = make_lebesgue({1, VelocitySetSpec::Shape::Interval, 128});
    ResponseFunction psi{[](double b) { return psi_example(b, 2.0); }, ""};
    auto target = [](double b) { return b / std::sqrt(1.0 + b * b); };
    Eigen::ArrayXd grid = Eigen::ArrayXd::LinSpaced(101, 0.0, 10.0);
    const double lambda = calibrate_lambda(psi, mu, grid, target);
    double worst = 0.0;
    for (double b : {0.1, 1.0, 10.0})
      worst = std::max(worst, std::abs(phi_from_psi(psi, lambda, mu, b) - target(b)));
    c.require(worst <= 1e-6, "max deviation " + format_double(worst) +
                                 " at lambda " + format_double(lambda));
  }

  ExperimentConfig rh_cfg = preset("rh-front");
  std::optional<RunSummary> rh_summary;
  {  // 4. relativistic speed cap
    Criterion c("4 (relativistic speed cap)");
    rh_summary = run_experiment(rh_cfg, "out/acceptance/rh-front");
    c.require(rh_summary->front_speeds.size() == 2, "need both amplitude runs");
    if (rh_summary->front_speeds.size() == 2) {
      const double v1 = rh_summary->front_speeds[0], v2 = rh_summary->front_speeds[1];
      c.require(v1 >= 0.90 && v1 <= 1.05, "speed " + format_double(v1));
      c.require(std::abs(v2 - v1) / v1 < 0.03,
                "amplitude sensitivity " + format_double(std::abs(v2 - v1) / v1));
    }
  }

  ExperimentConfig pm_cfg = preset("pm-contrast");
  std::optional<RunSummary> pm_summary;
  {  // 5. porous-medium contrast
    Criterion c("5 (porous-medium contrast)");
    pm_summary = run_experiment(pm_cfg, "out/acceptance/pm-contrast");
    c.require(pm_summary->front_speeds.size() == 2, "need both amplitude runs");
    if (pm_summary->front_speeds.size() == 2) {
      const double v1 = pm_summary->front_speeds[0], v2 = pm_summary->front_speeds[1];
      c.require(v2 >= 1.10 * v1, "speeds " + format_double(v1) + " -> " +
                                     format_double(v2));
    }
  }

  std::optional<RunSummary> newfl_summary;
  {  // 10. fully-FL cap (run now, reuse for criterion 6)
    Criterion c("10 (fully limited speed cap)");
    newfl_summary = run_experiment(preset("new-fullfl"), "out/acceptance/new-fullfl");
    c.require(!newfl_summary->front_speeds.empty(), "front speed missing");
    if (!newfl_summary->front_speeds.empty()) {
      const double cap = 1.5 * 1.05;
      const double vr = newfl_summary->front_speeds[0];
      const double vl = newfl_summary->front_speeds_left[0];
      c.require(std::max(std::abs(vr), std::abs(vl)) <= cap,
                "speeds " + format_double(vl) + ", " + format_double(vr));
    }
  }

  std::vector<std::pair<std::string, RunSummary>> preset_runs;
  {  // 6. conservation and positivity across all presets
    Criterion c("6 (conservation and positivity, all presets)");
    preset_runs.emplace_back("rh-front", *rh_summary);
    preset_runs.emplace_back("pm-contrast", *pm_summary);
    preset_runs.emplace_back("new-fullfl", *newfl_summary);
    for (const std::string name :
         {"ks-classic", "ksfs-tanh", "sweep-relax-mu", "sweep-pastmotion", "sweep-accel",
          "hyp-drift", "fsg-tanh", "coeff-table", "psi-phi-check"}) {
      RunSummary s = run_experiment(preset(name), "out/acceptance/" + name);
      preset_runs.emplace_back(name, s);
    }
    for (const auto& [name, s] : preset_runs) {
      c.require(s.max_step_mass_drift <= 1e-12,
                name + " mass drift " + format_double(s.max_step_mass_drift));
      c.require(s.min_c_seen >= -1e-10, name + " min c " + format_double(s.min_c_seen));
    }
  }

  {  // 7. turning conservativity on random states
    Criterion c("7 (turning conservativity)");
    SpatialGrid g;
    g.nx = 16;
    g.xmin = -1;
    g.xmax = 1;
    auto leb = make_lebesgue({1, VelocitySetSpec::Shape::Interval, 24});
    auto atoms = make_discrete({{-1.0, 0.5}, {1.0, 0.5}});
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      TurningContext ctx;
      ctx.grad_S =
          Eigen::ArrayXd::NullaryExpr(g.nx, [&] { return 2.0 * u(rng) - 1.0; });
      ctx.drift =
          Eigen::ArrayXd::NullaryExpr(g.nx, [&] { return 0.5 * (2.0 * u(rng) - 1.0); });
      for (int kind = 0; kind < 4; ++kind) {
        KineticState st;
        st.grid = g;
        st.vspace = kind == 0 ? atoms : leb;
        st.f.resize(g.nx, st.vspace.size());
        for (int i = 0; i < st.f.rows(); ++i)
          for (int k = 0; k < st.f.cols(); ++k) st.f(i, k) = u(rng);
        TurningOperatorSpec spec;
        spec.lambda = 0.7;
        switch (kind) {
          case 0:
            spec.kind = TurningKind::RelaxToMu;
            spec.mu = atoms;
            break;
          case 1:
            spec.kind = TurningKind::RelaxUniform;
            break;
          case 2:
            spec.kind = TurningKind::KernelPastMotion;
            spec.psi = ResponseFunction{[](double b) { return psi_example(b, 2.0); }, ""};
            break;
          case 3:
            spec.kind = TurningKind::KernelAnteriorPosterior;
            spec.lambda = 0.0;
            break;
        }
        Eigen::MatrixXd rate = apply_turning(st, spec, ctx);
        const double gap =
            (rate * st.qweights().matrix()).array().abs().maxCoeff() /
            std::max(st.f.norm(), 1e-300);
        worst = std::max(worst, gap);
      }
    }
    c.require(worst <= 1e-12, "worst normalized v-integral " + format_double(worst));
  }

  {  // 8. upscaling convergence, three pairings
    Criterion c("8 (upscaling convergence)");
    for (const std::string name : {"sweep-relax-mu", "sweep-pastmotion", "sweep-accel"}) {
      ExperimentConfig cfg = preset(name);
      SweepReport report = run_sweep(*cfg.sweep);
      c.require(report.monotone, name + " errors not strictly decreasing");
      const double base_p = baselines.at(name).at("order").get<double>();
      c.require(std::abs(report.fitted_order - base_p) <= 0.15,
                name + " order " + format_double(report.fitted_order) +
                    " vs baseline " + format_double(base_p));
    }
  }

  {  // 9. coefficient formulas
    Criterion c("9 (coefficient formulas)");
    auto atoms = make_discrete({{-1.0, 0.5}, {1.0, 0.5}});
    auto leb = make_lebesgue({1, VelocitySetSpec::Shape::Interval, 32});
    const double d1 = macro_coefficients(atoms, 2.0).D_relax;
    const double d2 = macro_coefficients(leb, 1.0).D_relax;
    auto mc = macro_coefficients(leb, 1.0, 1.0, 1);
    c.require(std::abs(d1 - 0.5) <= 1e-12, "discrete D_c " + format_double(d1));
    c.require(std::abs(d2 - 1.0 / 3.0) <= 1e-12, "lebesgue D_c " + format_double(d2));
    c.require(std::abs(*mc.accel_diffusion - 1.0 / 18.0) <= 1e-12,
              "dif2 diffusion " + format_double(*mc.accel_diffusion));
    c.require(std::abs(*mc.accel_drift - 0.5) <= 1e-12,
              "dif2 drift " + format_double(*mc.accel_drift));
  }

  {  // 11. first-order correction consistency
    Criterion c("11 (first-order correction)");
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> uc(0.0, 5.0), ug(-50.0, 50.0), up(0.1, 3.0);
    double max_diff = 0.0;
    for (int k = 0; k < 10000; ++k) {
      const double cc = uc(rng), gS = ug(rng), a = up(rng), lam = up(rng);
      max_diff = std::max(max_diff, std::abs(dif3_taxis_flux(cc, gS, a, lam, 0.9, 0.0) -
                                             dif2_taxis_flux(cc, gS, a, lam, 0.9)));
    }
    c.require(max_diff <= 1e-14, "dif3(0) vs dif2 gap " + format_double(max_diff));

    ExperimentConfig cfg = preset("fsg-tanh");
    CorrectionReport rep = first_order_correction_check(*cfg.sweep, *cfg.correction_eps);
    const json& base = baselines.at("fsg-tanh");
    const double e0 = base.at("zero_order_error").get<double>();
    const double e1 = base.at("corrected_error").get<double>();
    c.require(std::abs(rep.zero_order_error - e0) <= 0.10 * e0,
              "zero-order error " + format_double(rep.zero_order_error) +
                  " vs baseline " + format_double(e0));
    c.require(std::abs(rep.corrected_error - e1) <= 0.10 * e1,
              "corrected error " + format_double(rep.corrected_error) +
                  " vs baseline " + format_double(e1));
  }

  if (failures == 0) std::printf("acceptance: all criteria passed\n");
  else std::printf("acceptance: %d criterion(s) FAILED\n", failures);
  return failures == 0 ? 0 : 1;
}
