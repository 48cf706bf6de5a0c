#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fluxlim/experiment.hpp"
#include "fluxlim/io.hpp"

namespace {

int run_command(const std::string& config_path, const std::string& preset_name,
                const std::string& out_dir) {
  try {
    fluxlim::ExperimentConfig cfg;
    if (!preset_name.empty()) {
      cfg = fluxlim::preset(preset_name);
    } else {
      cfg = fluxlim::load_config(config_path);
    }
    fluxlim::RunSummary summary = fluxlim::run_experiment(cfg, out_dir);
    std::cout << "run '" << summary.name << "' finished: " << summary.steps
              << " steps, max per-step mass drift "
              << fluxlim::format_double(summary.max_step_mass_drift) << ", min density "
              << fluxlim::format_double(summary.min_c_seen) << "\n";
    return 0;
  } catch (const std::invalid_argument& err) {
    std::cerr << "config error: " << err.what() << "\n";
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "solver error: " << err.what() << "\n";
    return 3;
  }
}

int check_command(const std::string& measure_path, const std::string& out_dir) {
  try {
    fluxlim::ExperimentConfig cfg;
    cfg.name = "check";
    cfg.mode = fluxlim::RunMode::Check;
    cfg.measure = fluxlim::load_measure(measure_path);
    cfg.output.dir = out_dir.empty() ? "out/check" : out_dir;
    fluxlim::RunSummary summary = fluxlim::run_experiment(cfg);
    std::cout << "checks " << (summary.checks_passed ? "passed" : "FAILED")
              << ", max closed-form deviation "
              << fluxlim::format_double(summary.check_max_error) << "\n";
    return summary.checks_passed ? 0 : 1;
  } catch (const std::invalid_argument& err) {
    std::cerr << "config error: " << err.what() << "\n";
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "solver error: " << err.what() << "\n";
    return 3;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"flux-limited diffusion/taxis laboratory"};
  app.require_subcommand(1);

  std::string config_path, preset_name, out_dir, measure_path;

  auto* run = app.add_subcommand("run", "run an experiment from a JSON config");
  run->add_option("config", config_path, "path to the experiment JSON");
  run->add_option("--preset", preset_name, "run a built-in preset instead");
  run->add_option("--out", out_dir, "override the output directory");

  auto* presets = app.add_subcommand("presets", "list the built-in presets");

  auto* check = app.add_subcommand("check", "run measure checks from a measure JSON");
  check->add_option("measure", measure_path, "path to the measure JSON")->required();
  check->add_option("--out", out_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (presets->parsed()) {
    for (const auto& name : fluxlim::preset_names()) {
      const auto cfg = fluxlim::preset(name);
      const char* mode = "";
      switch (cfg.mode) {
        case fluxlim::RunMode::Macro: mode = "macro"; break;
        case fluxlim::RunMode::Kinetic: mode = "kinetic"; break;
        case fluxlim::RunMode::Sweep: mode = "sweep"; break;
        case fluxlim::RunMode::CoeffTable: mode = "coeff-table"; break;
        case fluxlim::RunMode::Check: mode = "check"; break;
      }
      std::printf("%-18s %s\n", name.c_str(), mode);
    }
    return 0;
  }
  if (run->parsed()) {
    if (config_path.empty() && preset_name.empty()) {
      std::cerr << "config error: give a config path or --preset NAME\n";
      return 2;
    }
    return run_command(config_path, preset_name, out_dir);
  }
  return check_command(measure_path, out_dir);
}
