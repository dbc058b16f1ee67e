#include "cpdual/pipeline.hpp"

#include <cmath>

namespace cpdual {

namespace {

void check_network(const ProblemSpec& problem, const ColumnPartition& partition,
                   const Topology& topology) {
  if (partition.agents() != topology.agents())
    throw ValidationError("pipeline: partition and topology disagree on the agent count");
  if (problem.reg.kind == RegularizerKind::FusedL1 && partition.agents() > 1 &&
      !topology.has_path_backbone())
    throw ValidationError("pipeline: fused problems need every edge (i, i+1) in the network");
}

}  // namespace

void TwoStageConfig::validate(const ProblemSpec& problem) const {
  if (!(alpha > 0.0)) throw ValidationError("two-stage: alpha must be positive");
  if (variant == Stage2Variant::Scaled) {
    if (problem.reg.kind != RegularizerKind::L1)
      throw ValidationError("two-stage: scaled variant requires the l1 regularizer");
    if (!problem.constraint.is_cone())
      throw ValidationError("two-stage: scaled variant requires a cone constraint (d = 0)");
  }
}

RegBpResult solve_regbp_distributed(const ProblemSpec& problem, const ColumnPartition& partition,
                                    const Topology& topology, const SchemeParams& params,
                                    std::optional<EngineKind> engine_override) {
  if (problem.family != ProblemFamily::RegBp)
    throw UnsupportedCase("solve_regbp_distributed expects the regularized BP-like family");
  check_network(problem, partition, topology);

  DualBuild build = build_dual(problem, partition);
  if (engine_override) {
    if (*engine_override == EngineKind::DouglasRachford && !build.dr_capable)
      throw UnsupportedCase("this dual carries local constraints its pieces cannot fold into the "
                            "prox; Douglas-Rachford does not apply");
    build.engine = *engine_override;
  }

  RegBpResult result;
  try {
    auto [sol, report] = run_engine(build, params);
    result.dual = std::move(sol);
    result.report = std::move(report);
  } catch (const DualDivergence& div) {
    throw Infeasible("dual objective diverged (" + std::to_string(div.objective) +
                     "); the primal constraints are likely infeasible");
  } catch (const EngineNonConvergence& e) {
    // A dual objective still falling linearly when the cap is reached is the
    // same infeasibility evidence as crossing -1/tol, which a slow drift may
    // never hit within the iteration budget.
    const auto& trace = e.report.trace;
    if (trace.size() >= 64) {
      const double early = trace[std::min<std::size_t>(2000, trace.size() / 4)].dual_objective;
      const double mid = trace[trace.size() / 2].dual_objective;
      const double last = trace.back().dual_objective;
      if (last < -10.0 * std::max(1.0, std::abs(early)) && mid < 0.0 && last <= 1.8 * mid)
        throw Infeasible("dual objective kept falling without converging (reached " +
                         std::to_string(last) + "); the primal constraints are likely infeasible");
    }
    throw;
  }
  result.blocks = recover_primal(problem, partition, result.dual);
  result.x = assemble(partition, result.blocks);
  result.feasibility_residual = (problem.a * result.x - problem.b).norm();
  return result;
}

TwoStageResult solve_two_stage(const ProblemSpec& problem, const ColumnPartition& partition,
                               const Topology& topology, const TwoStageConfig& config) {
  if (problem.family == ProblemFamily::RegBp)
    throw UnsupportedCase("solve_two_stage expects a Lasso or Bpdn problem");
  check_network(problem, partition, topology);
  config.validate(problem);

  TwoStageResult result;
  if (problem.family == ProblemFamily::Bpdn && !(problem.b.norm() > problem.sigma)) {
    // ||b|| <= sigma: zero is feasible and optimal.
    result.trivial = true;
    result.x = Vector::Zero(problem.n());
    result.blocks.reserve(static_cast<std::size_t>(partition.agents()));
    for (int i = 0; i < partition.agents(); ++i)
      result.blocks.push_back(Vector::Zero(partition.block_size(i)));
    result.y_star = Vector::Zero(problem.m());
    return result;
  }

  DualBuild stage1 = build_dual(problem, partition);
  auto [dual_sol, stage1_report] = run_engine(stage1, config.stage1);
  result.y_star = dual_sol.y;
  result.stage1_report = std::move(stage1_report);

  result.target = stage2_target(problem, result.y_star, config.variant);
  if (result.target.zero_solution) {
    result.x = Vector::Zero(problem.n());
    for (int i = 0; i < partition.agents(); ++i)
      result.blocks.push_back(Vector::Zero(partition.block_size(i)));
    return result;
  }

  const Regularizer stage2_reg =
      config.variant == Stage2Variant::Scaled ? Regularizer::l1(1.0) : problem.reg;
  ProblemSpec stage2 = ProblemSpec::regbp(problem.a, result.target.rhs, config.alpha, stage2_reg,
                                          problem.constraint, partition);
  RegBpResult second = solve_regbp_distributed(stage2, partition, topology, config.stage2);
  result.stage2_report = std::move(second.report);
  result.stage2_feasibility = second.feasibility_residual;
  result.blocks = std::move(second.blocks);
  if (config.variant == Stage2Variant::Scaled) {
    result.stage2_unit_l1 = second.x.lpNorm<1>();
    for (auto& blk : result.blocks) blk *= result.target.scale;
    result.x = result.target.scale * second.x;
  } else {
    result.x = std::move(second.x);
  }

  const Vector residual = problem.a * result.x - problem.b;
  if (problem.family == ProblemFamily::Lasso) {
    result.certificate_residual = (residual - result.y_star).norm();
  } else {
    const Vector shift = (problem.sigma / result.y_star.norm()) * result.y_star;
    result.certificate_residual = (residual - shift).norm();
  }
  return result;
}

std::vector<ContinuityProbeRow> continuity_probe(const ProblemSpec& problem,
                                                 const ColumnPartition& partition,
                                                 const Topology& topology,
                                                 const SchemeParams& params,
                                                 const std::vector<Vector>& perturbations) {
  const RegBpResult base = solve_regbp_distributed(problem, partition, topology, params);
  std::vector<ContinuityProbeRow> rows;
  rows.reserve(perturbations.size());
  for (const auto& db : perturbations) {
    ProblemSpec shifted = problem;
    shifted.b = problem.b + db;
    const RegBpResult moved = solve_regbp_distributed(shifted, partition, topology, params);
    ContinuityProbeRow row;
    row.db_norm = db.norm();
    row.dx_norm = (moved.x - base.x).norm();
    row.ratio = row.db_norm > 0.0 ? row.dx_norm / row.db_norm : 0.0;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace cpdual
