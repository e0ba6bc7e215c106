#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "fmpols/acceptance.hpp"
#include "fmpols/config.hpp"
#include "fmpols/experiment.hpp"

namespace {

fmpols::ExperimentConfig resolve(const std::string& preset, const std::string& config,
                                 const std::vector<std::string>& overrides) {
  fmpols::ExperimentConfig cfg = config.empty() ? fmpols::preset(preset) : fmpols::load_config(config);
  if (!overrides.empty()) cfg = fmpols::apply_overrides(cfg, overrides);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fmpols: online output prediction for marginally stable linear systems"};
  app.require_subcommand(1);

  std::string preset, config, out = "out";
  std::vector<std::string> overrides;
  bool dump = false;

  auto* run = app.add_subcommand("run", "run an experiment and write CSV + summary.txt");
  auto* src = run->add_option_group("source");
  src->add_option("--preset", preset, "built-in experiment name");
  src->add_option("--config", config, "JSON config file")->check(CLI::ExistingFile);
  src->require_option(1);
  run->add_option("--override", overrides, "dotted key=value assignment (repeatable)");
  run->add_option("--out", out, "output directory")->capture_default_str();
  run->add_flag("--dump-config", dump, "print the resolved config as JSON and exit");

  auto* list = app.add_subcommand("list-presets", "print the built-in experiment names");
  auto* verify = app.add_subcommand("verify", "run the acceptance suite");

  std::string bounds_preset;
  std::vector<std::string> bounds_overrides;
  auto* bounds = app.add_subcommand("bounds", "run a preset and print bounds next to measured values");
  bounds->add_option("--preset", bounds_preset, "built-in experiment name")->required();
  bounds->add_option("--override", bounds_overrides, "dotted key=value assignment (repeatable)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const fmpols::ExperimentConfig cfg = resolve(preset, config, overrides);
      if (dump) {
        std::cout << fmpols::config_to_json(cfg) << "\n";
        return 0;
      }
      const auto written = fmpols::write_outputs(fmpols::run_experiment(cfg), out);
      for (const auto& p : written) std::cout << p.string() << "\n";
    } else if (*list) {
      for (const auto& n : fmpols::preset_names()) std::cout << n << "\n";
    } else if (*verify) {
      int failed = 0;
      for (const auto& r : fmpols::run_acceptance()) {
        std::cout << fmpols::format_result(r) << std::endl;
        failed += r.pass ? 0 : 1;
      }
      return failed == 0 ? 0 : 1;
    } else if (*bounds) {
      const auto cfg = resolve(bounds_preset, "", bounds_overrides);
      std::cout << fmpols::bounds_text(fmpols::run_experiment(cfg));
    }
  } catch (const fmpols::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
