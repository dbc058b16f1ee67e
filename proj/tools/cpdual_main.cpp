#include <CLI11.hpp>
#include <iostream>

#include "cpdual/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"cpdual: column-partition distributed solvers for sparse recovery"};
  app.require_subcommand(1);

  std::string config_path;
  std::string sweep_param = "alpha";
  std::vector<double> sweep_values;

  auto* run = app.add_subcommand("run", "run a distributed experiment against the oracle");
  run->add_option("config", config_path, "experiment config file")->required();

  auto* oracle = app.add_subcommand("oracle", "run the centralized oracle only");
  oracle->add_option("config", config_path, "experiment config file")->required();

  auto* sweep = app.add_subcommand("sweep", "sweep the regularization parameter");
  sweep->add_option("config", config_path, "experiment config file")->required();
  sweep->add_option("--param", sweep_param, "parameter to sweep (alpha)");
  sweep->add_option("--values", sweep_values, "values to sweep")->required()->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  try {
    const cpdual::ExperimentConfig cfg = cpdual::parse_config(config_path);
    int rc = 0;
    if (run->parsed())
      rc = cpdual::run_experiment(cfg);
    else if (oracle->parsed())
      rc = cpdual::run_oracle(cfg);
    else
      rc = cpdual::run_sweep(cfg, sweep_param, sweep_values);
    if (rc != 0) std::cerr << "solver failure; see summary in the output directory\n";
    return rc;
  } catch (const cpdual::ParseError& err) {
    std::cerr << "config error: " << err.what() << "\n";
    return 2;
  } catch (const cpdual::ValidationError& err) {
    std::cerr << "config error: " << err.what() << "\n";
    return 2;
  } catch (const cpdual::Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 3;
  }
}
