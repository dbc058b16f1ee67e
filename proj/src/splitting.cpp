#include "cpdual/splitting.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace cpdual {

void SchemeParams::validate() const {
  if (max_iter < 1) throw ValidationError("scheme: max_iter must be positive");
  if (!(tol > 0.0)) throw ValidationError("scheme: tol must be positive");
  if (!(inner_tol_factor > 0.0)) throw ValidationError("scheme: inner_tol_factor must be positive");
}

std::string SolveReport::to_csv() const {
  std::ostringstream os;
  os << "iter,fixed_point_residual,consensus_residual,dual_objective\n";
  char buf[160];
  for (const auto& row : trace) {
    std::snprintf(buf, sizeof(buf), "%ld,%.17g,%.17g,%.17g\n", row.iter,
                  row.fixed_point_residual, row.consensus_residual, row.dual_objective);
    os << buf;
  }
  return os.str();
}

double lipschitz_estimate(const std::vector<std::unique_ptr<DualPiece>>& pieces,
                          const ConsensusSpec& consensus) {
  const int p = static_cast<int>(pieces.size());
  const auto& lay0 = consensus.layouts.front();
  const int shared = lay0.y + (consensus.mu_shared ? lay0.mu : 0);
  std::vector<int> local(static_cast<std::size_t>(p), 0);
  int total = shared;
  for (int i = 0; i < p; ++i) {
    local[static_cast<std::size_t>(i)] = consensus.layouts[static_cast<std::size_t>(i)].dim() - shared;
    total += local[static_cast<std::size_t>(i)];
  }

  auto apply = [&](const Vector& x) -> Vector {
    Vector out = Vector::Zero(total);
    int off = shared;
    for (int i = 0; i < p; ++i) {
      const int li = local[static_cast<std::size_t>(i)];
      Vector wi(shared + li);
      wi.head(shared) = x.head(shared);
      if (li > 0) wi.tail(li) = x.segment(off, li);
      const Vector hi = pieces[static_cast<std::size_t>(i)]->hessian_bound_apply(wi);
      out.head(shared) += hi.head(shared);
      if (li > 0) out.segment(off, li) += hi.tail(li);
      off += li;
    }
    return out;
  };

  Vector x = Vector::Ones(total).normalized();
  double lam = 0.0;
  for (int it = 0; it < 500; ++it) {
    Vector y = apply(x);
    const double nrm = y.norm();
    if (nrm <= 1e-300) return 1e-12;
    const double lam_new = x.dot(y);
    y /= nrm;
    if (std::abs(lam_new - lam) <= 1e-6 * std::max(1.0, std::abs(lam_new)) && it > 3) {
      lam = lam_new;
      break;
    }
    lam = lam_new;
    x = std::move(y);
  }
  return std::max(lam, 1e-12);
}

double lipschitz_estimate(const DualBuild& build) {
  return lipschitz_estimate(build.pieces, build.consensus);
}

namespace {

// Lipschitz constant of the stacked per-agent gradient map (the constant the
// splitting conditions actually need): the largest per-piece bound.
double product_lipschitz(const std::vector<std::unique_ptr<DualPiece>>& pieces) {
  double worst = 1e-12;
  for (const auto& piece : pieces) {
    const int d = piece->layout().dim();
    Vector x = Vector::Ones(d).normalized();
    double lam = 0.0;
    for (int it = 0; it < 300; ++it) {
      Vector y = piece->hessian_bound_apply(x);
      const double nrm = y.norm();
      if (nrm <= 1e-300) {
        lam = 0.0;
        break;
      }
      const double lam_new = x.dot(y);
      y /= nrm;
      if (it > 3 && std::abs(lam_new - lam) <= 1e-6 * std::max(1.0, std::abs(lam_new))) {
        lam = lam_new;
        break;
      }
      lam = lam_new;
      x = std::move(y);
    }
    worst = std::max(worst, lam);
  }
  return worst;
}

std::vector<Vector> initial_states(const DualBuild& build, const SchemeParams& params) {
  std::vector<Vector> z = build.zero_states();
  if (params.init_seed != 0) {
    NormalSampler rng(params.init_seed);
    for (auto& zi : z) zi = params.init_scale * rng.vector(zi.size());
  }
  return z;
}

struct IterationLog {
  SolveReport report;

  void record(long iter, double fp, double cons, double obj, double tol) {
    report.trace.push_back({iter, fp, cons, obj});
    if (obj < -1.0 / tol) throw DualDivergence(obj, iter);
  }
};

}  // namespace

std::pair<DualSolution, SolveReport> douglas_rachford_run(
    const std::vector<std::unique_ptr<DualPiece>>& pieces, const DualBuild& build,
    const SchemeParams& params) {
  params.validate();
  if (!build.dr_capable && build.has_local_sets)
    throw UnsupportedCase(
        "douglas_rachford_run: pieces carry local constraint sets they cannot fold into the "
        "prox; use davis_yin_run");

  const double eta = params.eta > 0.0 ? params.eta : 0.9;
  if (!(eta > 0.0 && eta < 1.0))
    throw StepSizeRejected("douglas-rachford relaxation must lie in (0, 1)");
  // 1/sqrt(L) balances the prox weight between the flat and stiff ends of
  // the spectrum; 1/L crawls on badly scaled instances.
  const double lips = product_lipschitz(pieces);
  const double rho = params.rho > 0.0 ? params.rho : 1.0 / std::sqrt(lips);
  const double inner_tol = std::max(params.tol * params.inner_tol_factor, 1e-13);

  const int p = static_cast<int>(pieces.size());
  std::vector<Vector> z = initial_states(build, params);
  std::vector<Vector> w(z.size()), w_prev;

  IterationLog log;
  long k = 0;
  bool converged = false;
  double fp_res = kInf, cons_res = kInf;
  for (; k < params.max_iter; ++k) {
    w = z;
    build.consensus.project(w, params.averaging);
    cons_res = build.consensus.residual(w);
    fp_res = kInf;
    if (!w_prev.empty()) {
      fp_res = 0.0;
      for (int i = 0; i < p; ++i)
        fp_res = std::max(fp_res, (w[static_cast<std::size_t>(i)] - w_prev[static_cast<std::size_t>(i)]).lpNorm<Eigen::Infinity>());
      if (build.extra_residual) fp_res = std::max(fp_res, build.extra_residual(w));
    }
    const double obj = build.objective(w);
    log.record(k, fp_res, cons_res, obj, params.tol);
    if (!w_prev.empty() && std::max(fp_res, cons_res) <= params.tol) {
      converged = true;
      break;
    }
    w_prev = w;
    double step_sq = 0.0;
    for (int i = 0; i < p; ++i) {
      auto& zi = z[static_cast<std::size_t>(i)];
      const auto& wi = w[static_cast<std::size_t>(i)];
      const Vector q = 2.0 * wi - zi;
      const Vector pw = pieces[static_cast<std::size_t>(i)]->prox(rho, q, inner_tol, params.prox_max_iter);
      const Vector dz = 2.0 * eta * (pw - wi);
      step_sq += dz.squaredNorm();
      zi += dz;
    }
    log.report.fixed_point_steps.push_back(std::sqrt(step_sq));
  }

  log.report.iterations = std::min(k + 1, params.max_iter);
  log.report.converged = converged;
  log.report.final_fixed_point_residual = fp_res;
  log.report.final_consensus_residual = cons_res;
  log.report.dual_objective = build.objective(w);
  if (!converged) throw EngineNonConvergence(log.report.iterations, fp_res, std::move(log.report));

  DualSolution sol = build.extract_solution(w);
  sol.fixed_point_residual = fp_res;
  sol.consensus_residual = cons_res;
  return {std::move(sol), std::move(log.report)};
}

std::pair<DualSolution, SolveReport> davis_yin_run(
    const std::vector<std::unique_ptr<DualPiece>>& pieces, const DualBuild& build,
    const std::vector<DykstraSet>& local_sets, const SchemeParams& params) {
  params.validate();
  // The cocoercivity constant of the stacked gradient is the per-piece
  // maximum, not the consensus-restricted sum.
  const double lips = product_lipschitz(pieces);
  const double eta = params.eta > 0.0 ? params.eta : 1.0 / lips;
  if (!(eta > 0.0) || eta >= 2.0 / lips)
    throw StepSizeRejected("davis-yin gradient step must lie in (0, 2/L) with L = " +
                           std::to_string(lips));
  const double relax_cap = 2.0 - eta * lips / 2.0;
  const double lambda_relax = params.lambda_relax > 0.0 ? params.lambda_relax : 1.0;
  if (lambda_relax >= relax_cap + 1e-12)
    throw StepSizeRejected("davis-yin relaxation exceeds 2 - eta L / 2 = " +
                           std::to_string(relax_cap));
  const double inner_tol = std::max(params.tol * params.inner_tol_factor, 1e-13);

  const int p = static_cast<int>(pieces.size());
  std::vector<Vector> z = initial_states(build, params);
  std::vector<Vector> wt(z.size()), wt_prev;

  IterationLog log;
  long k = 0;
  bool converged = false;
  double fp_res = kInf, cons_res = kInf;
  for (; k < params.max_iter; ++k) {
    wt = z;
    build.consensus.project(wt, params.averaging);
    cons_res = build.consensus.residual(wt);
    fp_res = kInf;
    if (!wt_prev.empty()) {
      fp_res = 0.0;
      for (int i = 0; i < p; ++i)
        fp_res = std::max(fp_res, (wt[static_cast<std::size_t>(i)] - wt_prev[static_cast<std::size_t>(i)]).lpNorm<Eigen::Infinity>());
      if (build.extra_residual) fp_res = std::max(fp_res, build.extra_residual(wt));
    }
    const double obj = build.objective(wt);
    log.record(k, fp_res, cons_res, obj, params.tol);
    if (!wt_prev.empty() && std::max(fp_res, cons_res) <= params.tol) {
      converged = true;
      break;
    }
    wt_prev = wt;
    double step_sq = 0.0;
    for (int i = 0; i < p; ++i) {
      auto& zi = z[static_cast<std::size_t>(i)];
      const auto& wi = wt[static_cast<std::size_t>(i)];
      const Vector g = pieces[static_cast<std::size_t>(i)]->gradient(wi);
      const Vector q = 2.0 * wi - zi - eta * g;
      const Vector wh = local_sets[static_cast<std::size_t>(i)].project(q, inner_tol);
      const Vector dz = lambda_relax * (wh - wi);
      step_sq += dz.squaredNorm();
      zi += dz;
    }
    log.report.fixed_point_steps.push_back(std::sqrt(step_sq));
  }

  log.report.iterations = std::min(k + 1, params.max_iter);
  log.report.converged = converged;
  log.report.final_fixed_point_residual = fp_res;
  log.report.final_consensus_residual = cons_res;
  log.report.dual_objective = build.objective(wt);
  if (!converged) throw EngineNonConvergence(log.report.iterations, fp_res, std::move(log.report));

  DualSolution sol = build.extract_solution(wt);
  sol.fixed_point_residual = fp_res;
  sol.consensus_residual = cons_res;
  return {std::move(sol), std::move(log.report)};
}

std::pair<DualSolution, SolveReport> run_engine(const DualBuild& build, const SchemeParams& params) {
  if (build.engine == EngineKind::DavisYin)
    return davis_yin_run(build.pieces, build, build.local_sets, params);
  return douglas_rachford_run(build.pieces, build, params);
}

}  // namespace cpdual
