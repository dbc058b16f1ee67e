#pragma once

#include <string>

#include "cpdual/network.hpp"
#include "cpdual/pipeline.hpp"
#include "cpdual/problem.hpp"

namespace cpdual {

// Flat key-value configuration with [section] headers; see README for the
// full key list. Defaults: alpha = 0.18, exact averaging, max_iter = 200000.
struct ExperimentConfig {
  // [problem]
  ProblemFamily family = ProblemFamily::Lasso;
  RegularizerKind reg_kind = RegularizerKind::L1;
  double lambda = 1.0;
  double gamma = 0.0;
  double sigma = 0.0;
  double problem_alpha = 0.18;  // RegBp family
  ConstraintKind constraint = ConstraintKind::Free;
  std::string c_file, d_file, box_lower_file, box_upper_file;

  // [data]
  bool random_data = true;
  std::uint64_t seed = 1;
  int m = 0;
  int n = 0;
  std::string a_file, b_file;

  // [partition]
  int p = 1;
  PartitionStrategy strategy = PartitionStrategy::Even;
  std::string blocks_file;  // one block per line, 1-based indices

  // [topology]
  TopologyKind topology_kind = TopologyKind::Cycle;
  std::uint64_t topology_seed = 7;
  double extra_edge_prob = 0.1;
  std::string edges_file;

  // [averaging]
  AveragingMode averaging = AveragingMode::Exact;
  int gossip_rounds = 50;

  // [stage1] / [stage2]
  double stage1_tol = 1e-7;
  long stage1_max_iter = 200000;
  double stage1_eta = 0.0;
  double stage1_rho = 0.0;
  double stage1_lambda_relax = 0.0;
  double stage2_tol = 1e-5;
  long stage2_max_iter = 200000;
  double stage2_eta = 0.0;
  double stage2_rho = 0.0;
  double stage2_lambda_relax = 0.0;
  double stage2_alpha = 0.18;
  Stage2Variant variant = Stage2Variant::Plain;

  // [output]
  std::string output_dir = "out";

  double oracle_tol = 1e-10;
};

ExperimentConfig parse_config(const std::string& path);

// Materialized inputs shared by the run/oracle/sweep verbs.
struct ExperimentInputs {
  ProblemSpec problem;
  ColumnPartition partition;
  Topology topology;
  SchemeParams stage1;
  SchemeParams stage2;
  TwoStageConfig two_stage;
};

ExperimentInputs materialize(const ExperimentConfig& config);

}  // namespace cpdual
