#pragma once

#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "cpdual/dual_forms.hpp"
#include "cpdual/network.hpp"

namespace cpdual {

struct SchemeParams {
  // Douglas-Rachford: eta is the relaxation in (0,1), rho the prox weight.
  // Davis-Yin: eta is the gradient step in (0, 2/L), lambda_relax the
  // relaxation. Nonpositive values select the defaults eta_DR = 0.9,
  // rho = 1/sqrt(L), eta_DY = 1/L, with L the largest per-agent gradient
  // Lipschitz bound.
  double eta = 0.0;
  double rho = 0.0;
  double lambda_relax = 1.0;
  long max_iter = 200000;
  double tol = 1e-7;
  Averager averaging;
  double inner_tol_factor = 0.01;  // inner prox/projection tol = tol * factor
  int prox_max_iter = 5000;
  std::uint64_t init_seed = 0;  // 0: all-zero start, else seeded random start
  double init_scale = 1.0;

  void validate() const;
};

struct SolveReport {
  struct Row {
    long iter;
    double fixed_point_residual;
    double consensus_residual;
    double dual_objective;
  };
  std::vector<Row> trace;
  // Norm of the underlying fixed-point step ||z^{k+1} - z^k|| per iteration;
  // nonexpansiveness makes this sequence nonincreasing, so it is the
  // quantity the divergence guard monitors. Not part of the CSV schema.
  std::vector<double> fixed_point_steps;
  long iterations = 0;
  bool converged = false;
  double final_fixed_point_residual = kInf;
  double final_consensus_residual = kInf;
  double dual_objective = 0.0;
  double relative_error = std::numeric_limits<double>::quiet_NaN();

  std::string to_csv() const;
};

// Thrown when the iteration cap is reached; carries the trace so callers can
// still inspect or persist it.
struct EngineNonConvergence : NonConvergence {
  SolveReport report;
  EngineNonConvergence(long iters, double fp_res, SolveReport rep)
      : NonConvergence("splitting engine did not converge", iters, fp_res),
        report(std::move(rep)) {}
};

// Thrown when the dual objective falls below -1/tol: evidence that the
// primal problem is infeasible.
struct DualDivergence : Error {
  double objective;
  long iteration;
  DualDivergence(double obj, long iter)
      : Error("dual objective diverging (value " + std::to_string(obj) + " at iteration " +
              std::to_string(iter) + ")"),
        objective(obj),
        iteration(iter) {}
};

// Upper bound L on the Lipschitz constant of the summed smooth dual
// gradient, restricted to the consensus subspace, by power iteration on the
// pieces' Hessian bounds.
double lipschitz_estimate(const std::vector<std::unique_ptr<DualPiece>>& pieces,
                          const ConsensusSpec& consensus);
double lipschitz_estimate(const DualBuild& build);

// Consensus Douglas-Rachford over smooth per-agent pieces:
//   w^{k+1} = Pi_A(z^k),  z_i += 2 eta (prox_{rho J_i}(2 w_i - z_i) - w_i).
// Pieces must carry no separate local constraint.
std::pair<DualSolution, SolveReport> douglas_rachford_run(
    const std::vector<std::unique_ptr<DualPiece>>& pieces, const DualBuild& build,
    const SchemeParams& params);

// Three-operator splitting:
//   wt = Pi_A(z),  wh_i = Pi_{B_i}(2 wt_i - z_i - eta grad J_i(wt_i)),
//   z_i += lambda (wh_i - wt_i).
std::pair<DualSolution, SolveReport> davis_yin_run(
    const std::vector<std::unique_ptr<DualPiece>>& pieces, const DualBuild& build,
    const std::vector<DykstraSet>& local_sets, const SchemeParams& params);

// Dispatches on build.engine.
std::pair<DualSolution, SolveReport> run_engine(const DualBuild& build, const SchemeParams& params);

}  // namespace cpdual
