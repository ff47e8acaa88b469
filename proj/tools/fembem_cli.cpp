// Experiment driver: fembem_cli run <config-file> [--out <path>] [--budget-elements N] [--verbose]
#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "fembem/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Adaptive FEM-BEM Uzawa experiments"};
  app.require_subcommand(1);
  auto* run = app.add_subcommand("run", "run one experiment and write its CSV");
  std::string config_path;
  std::string out_path;
  long long budget = -1;
  bool verbose = false;
  run->add_option("config", config_path, "config file with 'key = value' lines")->required();
  run->add_option("--out", out_path, "CSV output path (default: config 'output' key, else stdout)");
  run->add_option("--budget-elements", budget, "element budget, overrides the config");
  run->add_flag("--verbose", verbose, "progress on stderr");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  fembem::RunConfig cfg;
  try {
    cfg = fembem::load_config(config_path);
    if (budget == 0 || budget < -1) throw fembem::ConfigError("--budget-elements must be positive");
    if (budget > 0) cfg.uzawa.max_elements = static_cast<std::size_t>(budget);
    if (!out_path.empty()) cfg.output = out_path;
    cfg.uzawa.validate();
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  }

  std::ofstream file;
  std::ostream* out = &std::cout;
  if (!cfg.output.empty()) {
    file.open(cfg.output);
    if (!file) {
      std::cerr << "cannot write " << cfg.output << '\n';
      return 2;
    }
    out = &file;
  }
  const auto res = fembem::run_experiment(cfg, *out, verbose ? &std::cerr : nullptr);
  if (!*out) {
    std::cerr << "I/O error while writing the CSV\n";
    return 3;
  }
  if (res.solver_failure) {
    std::cerr << "solver failure: " << res.failure_message << '\n';
    return 3;
  }
  return 0;
}
