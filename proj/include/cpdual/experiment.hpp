#pragma once

#include <vector>

#include "cpdual/config.hpp"

namespace cpdual {

// Exit codes shared with the CLI: 0 success, 2 config error, 3 solver
// failure. Solver failures are recorded in the summary before returning.
int run_experiment(const ExperimentConfig& config);
int run_oracle(const ExperimentConfig& config);
int run_sweep(const ExperimentConfig& config, const std::string& param,
              const std::vector<double>& values);

}  // namespace cpdual
