#pragma once

#include <optional>

#include "cpdual/splitting.hpp"

namespace cpdual {

struct TwoStageConfig {
  SchemeParams stage1;
  SchemeParams stage2;
  double alpha = 0.18;  // stage-2 regularization
  Stage2Variant variant = Stage2Variant::Plain;

  void validate(const ProblemSpec& problem) const;
};

struct RegBpResult {
  std::vector<Vector> blocks;
  Vector x;
  DualSolution dual;
  SolveReport report;
  double feasibility_residual = 0.0;  // ||A x - b||_2
};

// Distributed solve of the regularized BP-like problem: dual build, splitting
// engine, closed-form per-agent recovery. A diverging dual objective is
// reported as primal infeasibility evidence.
RegBpResult solve_regbp_distributed(const ProblemSpec& problem, const ColumnPartition& partition,
                                    const Topology& topology, const SchemeParams& params,
                                    std::optional<EngineKind> engine_override = {});

struct TwoStageResult {
  std::vector<Vector> blocks;
  Vector x;
  Vector y_star;
  Stage2Target target;
  SolveReport stage1_report;
  SolveReport stage2_report;
  double stage2_feasibility = 0.0;    // ||A x - b_hat||_2
  double certificate_residual = 0.0;  // ||(A x - b) - y*|| resp. the sigma-scaled variant
  double stage2_unit_l1 = 0.0;        // ||z*||_1 before post-scaling (scaled mode)
  bool trivial = false;               // ||b|| <= sigma shortcut: x = 0
};

// Two-stage driver: stage 1 solves the LASSO/BPDN dual for y*, stage 2 a
// regularized BP-like problem with right-hand side from stage2_target.
TwoStageResult solve_two_stage(const ProblemSpec& problem, const ColumnPartition& partition,
                               const Topology& topology, const TwoStageConfig& config);

struct ContinuityProbeRow {
  double db_norm = 0.0;
  double dx_norm = 0.0;
  double ratio = 0.0;
};

// Empirical sensitivity of the regularized BP-like solution in b: solves the
// problem at b + delta for each offset and reports displacement ratios.
std::vector<ContinuityProbeRow> continuity_probe(const ProblemSpec& problem,
                                                 const ColumnPartition& partition,
                                                 const Topology& topology,
                                                 const SchemeParams& params,
                                                 const std::vector<Vector>& perturbations);

}  // namespace cpdual
