#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tumoropt/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Optimal control of a Cahn-Hilliard / nutrient tumour growth model"};
  app.require_subcommand(1);

  const std::map<std::string, std::string> help = {
      {"simulate", "Forward run; writes snapshots and a diagnostics log"},
      {"optimize", "Projected-gradient optimization of the control"},
      {"grad-check", "Dot-product tests of the discrete adjoint"},
      {"taylor", "Taylor remainder sweeps for the state and the reduced cost"},
      {"oracle", "Spatially constant runs against an adaptive ODE integrator"},
      {"check-hypotheses", "Sampled checks of the standing assumptions on F and P"},
      {"lipschitz", "Control-to-state stability ratios for shrinking perturbations"}};

  std::string config;
  std::vector<std::string> overrides;
  for (const auto& name : tumoropt::subcommand_names()) {
    auto* sub = app.add_subcommand(name, help.at(name));
    sub->add_option("config", config, "Run configuration file")->required()->check(CLI::ExistingFile);
    sub->add_option("overrides", overrides, "section.key=value overrides");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error=usage message=\"" << e.what() << "\"\n";
    return tumoropt::exit_usage;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  return tumoropt::run_subcommand(name, config, overrides, std::cout, std::cerr);
}
