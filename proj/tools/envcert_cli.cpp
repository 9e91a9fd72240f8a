#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "envcert/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Envelope certificates for differential and difference inequalities"};
  app.require_subcommand(1, 1);
  app.fallthrough();

  std::string config;
  std::string out_dir = ".";
  envcert::Overrides overrides;
  app.add_option("--config", config, "Run configuration file")->required()->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "Directory for the output files")->capture_default_str();
  app.add_option("--horizon", overrides.horizon,
                 "Time horizon (continuous) or number of steps (discrete)");
  app.add_option("--grid", overrides.grid, "Grid points for verification");
  app.add_option("--margin", overrides.margin, "Required residual margin");
  app.add_option("--seed", overrides.seed, "Seed for sampling-based checks");

  app.add_subcommand("verify", "Check the envelope condition on a grid");
  app.add_subcommand("simulate", "Integrate the extremal equation and compare with the envelope");
  app.add_subcommand("search", "Scan an envelope family for feasible parameters");
  app.add_subcommand("reduce", "Reduce a vector system to the scalar inequality");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return envcert::exit_code::error;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  return envcert::run_cli(command, config, out_dir, overrides, std::cout, std::cerr);
}
