// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one PASS/FAIL line per criterion. Exit code = number of failed
// criteria.

#include <algorithm>
#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <string>
#include <vector>

#include "cpdual/pipeline.hpp"
#include "cpdual/reference.hpp"

using namespace cpdual;

namespace {

int g_failures = 0;

void report(int criterion, bool ok, const std::string& summary) {
  std::printf("%s  criterion %d: %s\n", ok ? "PASS" : "FAIL", criterion, summary.c_str());
  if (!ok) ++g_failures;
}

void detail(const std::string& line) { std::printf("      %s\n", line.c_str()); }

std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return buf;
}

struct CellResult {
  double j_re = kInf;
  double certificate = kInf;
  double combined_tol = 0.0;
  double residual_norm = 0.0;
  double seconds = 0.0;
  bool ok = false;
};

CellResult run_cell(const ProblemSpec& pr, const ColumnPartition& part, const Topology& topo,
                    double tol1, double tol2, double alpha, double j_true) {
  CellResult cell;
  cell.combined_tol = tol1 + tol2;
  TwoStageConfig cfg;
  cfg.stage1.tol = tol1;
  cfg.stage2.tol = tol2;
  cfg.alpha = alpha;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const TwoStageResult res = solve_two_stage(pr, part, topo, cfg);
    cell.j_re = relative_error(pr.objective(res.x, part), j_true);
    cell.certificate = res.certificate_residual;
    cell.residual_norm = (pr.a * res.x - pr.b).norm();
    cell.ok = true;
  } catch (const Error& e) {
    detail(fmt("cell failed: %s", e.what()));
  }
  cell.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return cell;
}

// --------------------------------------------------------------------------
// Criteria 1-4 share the experiment protocol: A in R^{10x400} standard
// normal, p = 40 agents, even partition, cycle and seeded random-with-path
// topologies.

struct Grid {
  ColumnPartition part = make_partition(400, 40);
  Topology cycle = build_topology(TopologyKind::Cycle, 40);
  Topology random = build_topology(TopologyKind::RandomConnectedWithPath, 40, 7, 0.1);
};

std::vector<CellResult> g_certificate_cells;  // collected for criterion 7

void criterion_1_lasso(const Grid& grid) {
  const RandomInstance inst = random_instance(42, 10, 400);
  bool ok = true;
  double worst_free = 0.0, worst_nonneg = 0.0, worst_time = 0.0;
  for (bool nonneg : {false, true}) {
    const ProblemSpec pr = ProblemSpec::lasso(
        inst.a, inst.b, Regularizer::l1(1.8),
        nonneg ? ConstraintSet::nonneg() : ConstraintSet::free(), grid.part);
    const double j_true = solve_centralized(pr, grid.part, 1e-10).objective;
    const double tol1 = nonneg ? 1e-6 : 1e-7;
    for (const Topology* topo : {&grid.cycle, &grid.random}) {
      const CellResult cell = run_cell(pr, grid.part, *topo, tol1, 1e-5, 0.18, j_true);
      detail(fmt("lasso %s %s: J_RE=%.3e cert=%.3e %.1fs", nonneg ? "nonneg" : "free",
                 topo == &grid.cycle ? "cycle" : "random", cell.j_re, cell.certificate,
                 cell.seconds));
      ok = ok && cell.ok && cell.j_re <= 1e-2 && cell.seconds <= 300.0;
      if (nonneg) {
        ok = ok && cell.j_re <= 1e-3;
        worst_nonneg = std::max(worst_nonneg, cell.j_re);
      } else {
        worst_free = std::max(worst_free, cell.j_re);
      }
      worst_time = std::max(worst_time, cell.seconds);
      g_certificate_cells.push_back(cell);
    }
  }
  report(1, ok,
         fmt("LASSO reproduction: worst J_RE free %.2e (<=1e-2), nonneg %.2e (<=1e-3), "
             "slowest cell %.1fs (<=300s)",
             worst_free, worst_nonneg, worst_time));
}

void criterion_2_bpdn(const Grid& grid) {
  const double sigma = 0.2;
  const RandomInstance inst = random_instance(42, 10, 400, sigma);
  bool ok = true;
  double worst_re = 0.0, worst_boundary = 0.0;
  for (bool nonneg : {false, true}) {
    const ProblemSpec pr = ProblemSpec::bpdn(
        inst.a, inst.b, sigma, Regularizer::l1(1.0),
        nonneg ? ConstraintSet::nonneg() : ConstraintSet::free(), grid.part);
    const double j_true = solve_centralized(pr, grid.part, 1e-10).objective;
    const double tol1 = nonneg ? 1e-5 : 1e-7;
    const double tol2 = nonneg ? 2e-4 : 8e-4;
    for (const Topology* topo : {&grid.cycle, &grid.random}) {
      const CellResult cell = run_cell(pr, grid.part, *topo, tol1, tol2, 0.15, j_true);
      const double boundary = std::abs(cell.residual_norm - sigma);
      detail(fmt("bpdn %s %s: J_RE=%.3e | ||Ax-b||-sigma |=%.2e cert=%.3e %.1fs",
                 nonneg ? "nonneg" : "free", topo == &grid.cycle ? "cycle" : "random", cell.j_re,
                 boundary, cell.certificate, cell.seconds));
      ok = ok && cell.ok && cell.j_re <= 1e-2 && boundary <= 1e-3;
      worst_re = std::max(worst_re, cell.j_re);
      worst_boundary = std::max(worst_boundary, boundary);
      g_certificate_cells.push_back(cell);
    }
  }
  report(2, ok,
         fmt("BPDN reproduction: worst J_RE %.2e (<=1e-2), worst boundary gap %.2e (<=1e-3)",
             worst_re, worst_boundary));
}

void criterion_3_fused(const Grid& grid) {
  bool ok = true;
  double worst = 0.0;
  const Regularizer fused = Regularizer::fused(0.6, 0.4);
  {
    const RandomInstance inst = random_instance(42, 10, 400);
    for (bool nonneg : {false, true}) {
      const ProblemSpec pr = ProblemSpec::lasso(
          inst.a, inst.b, fused, nonneg ? ConstraintSet::nonneg() : ConstraintSet::free(),
          grid.part);
      const double j_true = solve_centralized(pr, grid.part, 1e-10).objective;
      for (const Topology* topo : {&grid.cycle, &grid.random}) {
        const CellResult cell = run_cell(pr, grid.part, *topo, 1e-5, 1e-4, 0.18, j_true);
        detail(fmt("fused lasso %s %s: J_RE=%.3e %.1fs", nonneg ? "nonneg" : "free",
                   topo == &grid.cycle ? "cycle" : "random", cell.j_re, cell.seconds));
        ok = ok && cell.ok && cell.j_re <= 2e-2;
        worst = std::max(worst, cell.j_re);
        g_certificate_cells.push_back(cell);
      }
    }
  }
  {
    const double sigma = 0.2;
    const RandomInstance inst = random_instance(42, 10, 400, sigma);
    for (bool nonneg : {false, true}) {
      const ProblemSpec pr = ProblemSpec::bpdn(
          inst.a, inst.b, sigma, fused, nonneg ? ConstraintSet::nonneg() : ConstraintSet::free(),
          grid.part);
      const double j_true = solve_centralized(pr, grid.part, 1e-10).objective;
      const double tol1 = nonneg ? 1e-4 : 1e-5;
      for (const Topology* topo : {&grid.cycle, &grid.random}) {
        const CellResult cell = run_cell(pr, grid.part, *topo, tol1, 1e-5, 0.18, j_true);
        detail(fmt("fused bpdn %s %s: J_RE=%.3e %.1fs", nonneg ? "nonneg" : "free",
                   topo == &grid.cycle ? "cycle" : "random", cell.j_re, cell.seconds));
        ok = ok && cell.ok && cell.j_re <= 2e-2;
        worst = std::max(worst, cell.j_re);
        g_certificate_cells.push_back(cell);
      }
    }
  }
  report(3, ok, fmt("fused LASSO and fused BPDN: worst J_RE %.2e (<=2e-2)", worst));
}

void criterion_4_group(const Grid& grid) {
  const RandomInstance inst = random_instance(42, 10, 400);
  const ProblemSpec pr = ProblemSpec::lasso(inst.a, inst.b, Regularizer::group_uniform(40, 1.8),
                                            ConstraintSet::free(), grid.part);
  const double j_true = solve_centralized(pr, grid.part, 1e-10).objective;
  const CellResult cell = run_cell(pr, grid.part, grid.cycle, 1e-5, 8e-6, 0.18, j_true);
  g_certificate_cells.push_back(cell);
  report(4, cell.ok && cell.j_re <= 1e-2,
         fmt("group LASSO (cycle): J_RE %.2e (<=1e-2)", cell.j_re));
}

void criterion_5_analytic() {
  // A = [I I], b = (1,1), lambda = 0.5.
  const int r = 2;
  const double lambda = 0.5, ridge = 0.1;
  Matrix a(2, 4);
  a << Matrix::Identity(2, 2), Matrix::Identity(2, 2);
  const Vector b = Vector::Ones(2);
  const ColumnPartition part = make_partition(4, 2);
  const Topology topo = build_topology(TopologyKind::Path, 2);
  const ProblemSpec pr = ProblemSpec::lasso(a, b, Regularizer::l1(lambda), ConstraintSet::free(), part);

  const OracleReport ridge_sol = solve_centralized(pr, part, 1e-12, ridge);
  double ridge_err = 0.0;
  const Vector expect = ((1.0 - lambda) / (r + ridge)) * b;
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < 2; ++j)
      ridge_err = std::max(ridge_err, std::abs(ridge_sol.solution[2 * i + j] - expect[j]));

  TwoStageConfig cfg;
  cfg.stage1.tol = 1e-10;
  cfg.stage2.tol = 1e-10;
  cfg.alpha = 0.18;
  const TwoStageResult res = solve_two_stage(pr, part, topo, cfg);
  const double ax_err = (a * res.x - (1.0 - lambda) * b).lpNorm<Eigen::Infinity>();

  report(5, ridge_err <= 1e-6 && ax_err <= 1e-6,
         fmt("analytic repeated-identity instance: ridge-block error %.2e, A x* error %.2e "
             "(both <=1e-6)",
             ridge_err, ax_err));
}

void criterion_6_exact_regularization() {
  bool ok = true;
  double worst_spread = 0.0, worst_gap = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    // Exact regularization holds for all alpha below an instance-dependent
    // threshold; the threshold scales inversely with the solution size, so
    // the instances are normalized to ||b|| = 1/2 to keep the whole pinned
    // alpha grid inside the flat region (at ||b|| ~ sqrt(m) half the draws
    // have thresholds under 0.1).
    RandomInstance inst = random_instance(seed, 5, 30);
    inst.b *= 0.5 / inst.b.norm();
    const ColumnPartition part = make_partition(30, 5);
    const Topology topo = build_topology(TopologyKind::Cycle, 5);
    const OracleReport bp =
        solve_bp_oracle(inst.a, inst.b, Regularizer::l1(1.0), ConstraintSet::free(), part);
    std::vector<double> values;
    for (double alpha : {0.1, 0.05, 0.01}) {
      const ProblemSpec pr = ProblemSpec::regbp(inst.a, inst.b, alpha, Regularizer::l1(1.0),
                                                ConstraintSet::free(), part);
      SchemeParams params;
      params.tol = 1e-10;
      params.max_iter = 400000;
      const RegBpResult res = solve_regbp_distributed(pr, part, topo, params);
      values.push_back(res.x.lpNorm<1>());
    }
    const double spread = *std::max_element(values.begin(), values.end()) -
                          *std::min_element(values.begin(), values.end());
    double gap = 0.0;
    for (double v : values) gap = std::max(gap, std::abs(v - bp.objective));
    worst_spread = std::max(worst_spread, spread);
    worst_gap = std::max(worst_gap, gap);
    ok = ok && spread <= 1e-6 && gap <= 1e-6 * std::max(1.0, bp.objective);
  }
  report(6, ok,
         fmt("exact-regularization sweep over 10 instances: worst l1 spread %.2e (<=1e-6), "
             "worst gap to the BP optimum %.2e",
             worst_spread, worst_gap));
}

void criterion_7_certificates(const Grid& grid) {
  bool ok = true;
  double worst_ratio = 0.0;
  for (const CellResult& cell : g_certificate_cells) {
    if (!cell.ok) {
      ok = false;
      continue;
    }
    const double bound = 10.0 * cell.combined_tol;
    worst_ratio = std::max(worst_ratio, cell.certificate / bound);
    ok = ok && cell.certificate <= bound;
  }

  // dual uniqueness: two initial points, same y*
  const double sigma = 0.2;
  const RandomInstance inst = random_instance(42, 10, 400, sigma);
  const ProblemSpec pr =
      ProblemSpec::bpdn(inst.a, inst.b, sigma, Regularizer::l1(1.0), ConstraintSet::free(), grid.part);
  DualBuild b1 = build_dual(pr, grid.part);
  DualBuild b2 = build_dual(pr, grid.part);
  SchemeParams params;
  params.tol = 1e-8;  // agreement to 1e-5 needs both duals solved past that
  params.max_iter = 400000;
  auto [s1, r1] = run_engine(b1, params);
  params.init_seed = 1234;
  params.init_scale = 1.0;
  auto [s2, r2] = run_engine(b2, params);
  const double y_gap = (s1.y - s2.y).lpNorm<Eigen::Infinity>();
  ok = ok && y_gap <= 1e-5;

  report(7, ok,
         fmt("certificates: worst residual at %.0f%% of the 10x stage-tolerance bound; "
             "BPDN dual agreement across initializations %.2e (<=1e-5)",
             100.0 * worst_ratio, y_gap));
}

// --------------------------------------------------------------------------
// Criterion 8: property suites.


// Finite-difference validation of every supported dual case: 100 accepted
// points per case, sampled away from the kinks.
struct GradCaseDef {
  ProblemFamily family;
  RegularizerKind reg;
  ConstraintKind con;
};

Vector grad_local_image(const ProblemSpec& pr, const ColumnPartition& part, int i,
                        const DualSolution& sol) {
  const int n = pr.n();
  Vector w_full = pr.a.transpose() * sol.y;
  if (pr.reg.kind == RegularizerKind::FusedL1)
    w_full += pr.reg.gamma * first_difference_transpose(sol.v, n);
  if (pr.constraint.kind == ConstraintKind::GeneralPolyhedron)
    w_full += pr.constraint.c.transpose() * sol.mu;
  if (pr.constraint.kind == ConstraintKind::DecoupledPolyhedron) {
    int off = 0;
    for (int k = 0; k < part.agents(); ++k) {
      const auto& ck = pr.constraint.c_blocks[static_cast<std::size_t>(k)];
      Vector scattered = Vector::Zero(n);
      part.scatter((ck.transpose() * sol.mu.segment(off, ck.rows())).eval(), k, scattered);
      w_full += scattered;
      off += static_cast<int>(ck.rows());
    }
  }
  Vector u = part.gather(w_full, i);
  if (pr.reg.kind == RegularizerKind::GroupL2 && pr.constraint.kind == ConstraintKind::Box) {
    int off = 0;
    for (int k = 0; k < i; ++k) off += part.block_size(k);
    u += sol.v.segment(off, part.block_size(i));
  }
  return u;
}

bool grad_away_from_kinks(const ProblemSpec& pr, const ColumnPartition& part,
                          const DualSolution& sol, double margin) {
  if (pr.family == ProblemFamily::Bpdn && sol.y.norm() < 1e-2) return false;
  if (pr.family != ProblemFamily::RegBp) return true;
  const bool theta_con =
      pr.constraint.kind == ConstraintKind::NonNeg || pr.constraint.kind == ConstraintKind::Box;
  for (int i = 0; i < part.agents(); ++i) {
    const Vector u = grad_local_image(pr, part, i, sol);
    if (pr.reg.kind == RegularizerKind::GroupL2) {
      const double lam = pr.reg.group_weights[static_cast<std::size_t>(i)];
      if (pr.constraint.kind == ConstraintKind::NonNeg) {
        if (std::abs((-u).cwiseMax(0.0).norm() - lam) < margin) return false;
        for (Eigen::Index j = 0; j < u.size(); ++j)
          if (std::abs(u[j]) < margin) return false;
      } else if (pr.constraint.kind == ConstraintKind::Box) {
        for (Eigen::Index j = 0; j < u.size(); ++j) {
          const int col = part.block(i)[static_cast<std::size_t>(j)];
          const double t = -u[j] / pr.alpha;
          if (std::abs(t - pr.constraint.lower[col]) < margin) return false;
          if (std::abs(t - pr.constraint.upper[col]) < margin) return false;
        }
      } else if (std::abs(u.norm() - lam) < margin) {
        return false;
      }
    } else {
      const double lam = pr.reg.lambda;
      for (Eigen::Index j = 0; j < u.size(); ++j) {
        if (std::abs(std::abs(u[j]) - lam) < margin) return false;
        if (theta_con && std::abs(u[j]) > lam) {
          const int col = part.block(i)[static_cast<std::size_t>(j)];
          const double t = -soft_threshold(u[j], lam) / pr.alpha;
          const double lo =
              pr.constraint.kind == ConstraintKind::NonNeg ? 0.0 : pr.constraint.lower[col];
          const double hi =
              pr.constraint.kind == ConstraintKind::NonNeg ? kInf : pr.constraint.upper[col];
          if (std::abs(t - lo) < margin) return false;
          if (std::isfinite(hi) && std::abs(t - hi) < margin) return false;
        }
      }
    }
  }
  return true;
}

bool gradients_match_everywhere() {
  NormalSampler rng(303);
  std::vector<GradCaseDef> cases;
  for (auto fam : {ProblemFamily::RegBp, ProblemFamily::Lasso, ProblemFamily::Bpdn})
    for (auto reg : {RegularizerKind::L1, RegularizerKind::FusedL1, RegularizerKind::GroupL2})
      for (auto con : {ConstraintKind::Free, ConstraintKind::NonNeg, ConstraintKind::Box,
                       ConstraintKind::GeneralPolyhedron, ConstraintKind::DecoupledPolyhedron}) {
        if (fam != ProblemFamily::RegBp &&
            (con == ConstraintKind::Box || con == ConstraintKind::DecoupledPolyhedron))
          continue;
        cases.push_back({fam, reg, con});
      }

  const int m = 3, n = 12, p = 3;
  const ColumnPartition part = make_partition(n, p);
  for (const auto& def : cases) {
    const Matrix a = rng.matrix(m, n);
    const Vector b = rng.vector(m);
    Regularizer reg;
    switch (def.reg) {
      case RegularizerKind::L1: reg = Regularizer::l1(0.9); break;
      case RegularizerKind::FusedL1: reg = Regularizer::fused(0.8, 0.5); break;
      case RegularizerKind::GroupL2: reg = Regularizer::group({0.7, 0.9, 1.1}); break;
    }
    ConstraintSet con;
    switch (def.con) {
      case ConstraintKind::Free: con = ConstraintSet::free(); break;
      case ConstraintKind::NonNeg: con = ConstraintSet::nonneg(); break;
      case ConstraintKind::Box: {
        Vector lo(n), hi(n);
        for (int j = 0; j < n; ++j) {
          lo[j] = -(0.3 + rng.uniform01());
          hi[j] = 0.3 + rng.uniform01();
        }
        con = ConstraintSet::box(lo, hi);
        break;
      }
      case ConstraintKind::GeneralPolyhedron:
        con = ConstraintSet::polyhedron(rng.matrix(2, n), Vector::Ones(2) + rng.vector(2).cwiseAbs());
        break;
      case ConstraintKind::DecoupledPolyhedron: {
        std::vector<Matrix> cb;
        std::vector<Vector> db;
        for (int i = 0; i < p; ++i) {
          cb.push_back(rng.matrix(2, part.block_size(i)));
          db.push_back(Vector::Ones(2) + rng.vector(2).cwiseAbs());
        }
        con = ConstraintSet::decoupled(cb, db);
        break;
      }
    }
    ProblemSpec pr;
    switch (def.family) {
      case ProblemFamily::RegBp: pr = ProblemSpec::regbp(a, b, 0.6, reg, con, part); break;
      case ProblemFamily::Lasso: pr = ProblemSpec::lasso(a, b, reg, con, part); break;
      case ProblemFamily::Bpdn: pr = ProblemSpec::bpdn(a, b, 0.4 * b.norm(), reg, con, part); break;
    }
    DualBuild build = build_dual(pr, part);

    int accepted = 0, guard = 0;
    while (accepted < 100 && guard < 4000) {
      ++guard;
      DualSolution sol;
      sol.y = 0.8 * rng.vector(m);
      int mu_total = 0;
      if (build.consensus.mu_shared) {
        mu_total = build.consensus.layouts.front().mu;
      } else {
        for (const auto& lay : build.consensus.layouts) mu_total += lay.mu;
      }
      sol.mu = rng.vector(mu_total).cwiseAbs();
      int v_total = 0;
      if (build.fused)
        v_total = n - 1;
      else
        for (const auto& lay : build.consensus.layouts) v_total += lay.v;
      sol.v = rng.vector(v_total);
      if (build.fused) sol.v = sol.v.cwiseMax(-1.0).cwiseMin(1.0);
      if (!grad_away_from_kinks(pr, part, sol, 2e-3)) continue;

      const auto states = build.agent_states(sol);
      const int agent = accepted % p;
      const auto& piece = *build.pieces[static_cast<std::size_t>(agent)];
      const Vector& w = states[static_cast<std::size_t>(agent)];
      const Vector g = piece.gradient(w);
      const double scale = std::max(1.0, g.lpNorm<Eigen::Infinity>());
      for (Eigen::Index k = 0; k < w.size(); ++k) {
        const double h = 1e-6 * std::max(1.0, std::abs(w[k]));
        Vector wp = w, wm = w;
        wp[k] += h;
        wm[k] -= h;
        const double fd = (piece.value(wp) - piece.value(wm)) / (2.0 * h);
        if (std::abs(fd - g[k]) > 1e-6 * scale) return false;
      }
      ++accepted;
    }
    if (accepted < 100) return false;
  }
  return true;
}

bool projections_property() {
  NormalSampler rng(71);
  const Matrix c = rng.matrix(3, 2);
  const Vector d = rng.vector(3).cwiseAbs() + 0.1 * Vector::Ones(3);
  const std::vector<Interval> boxes = {Interval(-0.5, 1.0), Interval(-2.0, 0.25)};
  bool ok = true;
  auto check = [&](auto&& proj) {
    for (int t = 0; t < 100; ++t) {
      const Vector a = 3.0 * rng.vector(2);
      const Vector b = 3.0 * rng.vector(2);
      const Vector pa = proj(a);
      const Vector pb = proj(b);
      ok = ok && (proj(pa) - pa).norm() <= 1e-12;
      ok = ok && (pa - pb).norm() <= (a - b).norm() + 1e-12;
    }
  };
  check([&](const Vector& x) { return project_ball_inf(x, 1.0); });
  check([&](const Vector& x) { return project_ball_2(x, 1.3); });
  check([&](const Vector& x) { return project_nonneg(x); });
  check([&](const Vector& x) { return project_box(x, boxes); });
  check([&](const Vector& x) { return project_polyhedron(c, d, x, 1e-12); });
  return ok;
}

bool partition_invariance() {
  const RandomInstance inst = random_instance(42, 10, 400);
  Vector base;
  for (int p : {1, 4, 40}) {
    const ColumnPartition part = make_partition(400, p);
    const Topology topo = p == 1 ? Topology::singleton() : build_topology(TopologyKind::Cycle, p);
    const ProblemSpec pr =
        ProblemSpec::regbp(inst.a, inst.b, 0.18, Regularizer::l1(1.8), ConstraintSet::free(), part);
    SchemeParams params;
    params.tol = 1e-8;
    params.max_iter = 400000;
    const RegBpResult res = solve_regbp_distributed(pr, part, topo, params);
    if (base.size() == 0) {
      base = res.x;
    } else if ((res.x - base).lpNorm<Eigen::Infinity>() > 1e-5) {
      detail(fmt("partition invariance violated at p=%d: gap %.2e", p,
                 (res.x - base).lpNorm<Eigen::Infinity>()));
      return false;
    }
  }
  // and across the two experiment topologies at p = 40
  const ColumnPartition part = make_partition(400, 40);
  const ProblemSpec pr =
      ProblemSpec::regbp(inst.a, inst.b, 0.18, Regularizer::l1(1.8), ConstraintSet::free(), part);
  SchemeParams params;
  params.tol = 1e-8;
  params.max_iter = 400000;
  const Topology rnd = build_topology(TopologyKind::RandomConnectedWithPath, 40, 7, 0.1);
  const RegBpResult res = solve_regbp_distributed(pr, part, rnd, params);
  return (res.x - base).lpNorm<Eigen::Infinity>() <= 1e-5;
}

bool gossip_decay() {
  const Topology cyc = build_topology(TopologyKind::Cycle, 40);
  const MixingMatrix mm = mixing_weight(cyc);
  NormalSampler rng(72);
  std::vector<Vector> values;
  Vector mean = Vector::Zero(3);
  for (int i = 0; i < 40; ++i) {
    values.push_back(rng.vector(3));
    mean += values.back();
  }
  mean /= 40.0;
  auto deviation = [&](const std::vector<Vector>& vs) {
    double sq = 0.0;
    for (const auto& v : vs) sq += (v - mean).squaredNorm();
    return std::sqrt(sq);
  };
  double bound = deviation(values);
  Averager one = Averager::gossip(cyc, 1);
  std::vector<Vector> cur = values;
  for (int round = 1; round <= 200; ++round) {
    cur = distributed_average(cur, one);
    bound *= mm.spectral_gap_radius;
    if (deviation(cur) > bound * (1.0 + 1e-10) + 1e-13) return false;
  }
  return true;
}

double worst_window_growth(const std::vector<double>& steps) {
  std::vector<double> means;
  for (std::size_t start = 0; start + 50 <= steps.size(); start += 50) {
    double s = 0.0;
    for (std::size_t k = start; k < start + 50; ++k) s += steps[k];
    means.push_back(s / 50.0);
  }
  double worst = 0.0;
  for (std::size_t j = 1; j < means.size(); ++j)
    worst = std::max(worst, means[j] / std::max(means[j - 1], 1e-300));
  return worst;
}

bool monotone_trend(const Grid& grid) {
  const RandomInstance inst = random_instance(42, 10, 400);
  const ProblemSpec pr = ProblemSpec::lasso(inst.a, inst.b, Regularizer::l1(1.8),
                                            ConstraintSet::free(), grid.part);
  TwoStageConfig cfg;
  cfg.stage1.tol = 1e-7;
  cfg.stage2.tol = 1e-5;
  cfg.alpha = 0.18;
  const TwoStageResult res = solve_two_stage(pr, grid.part, grid.cycle, cfg);
  return worst_window_growth(res.stage1_report.fixed_point_steps) <= 1.01 &&
         worst_window_growth(res.stage2_report.fixed_point_steps) <= 1.01;
}

bool determinism() {
  const RandomInstance inst = random_instance(42, 10, 400);
  const ColumnPartition part = make_partition(400, 40);
  const ProblemSpec pr =
      ProblemSpec::lasso(inst.a, inst.b, Regularizer::l1(1.8), ConstraintSet::nonneg(), part);
  SchemeParams params;
  params.tol = 1e-6;
  DualBuild b1 = build_dual(pr, part);
  DualBuild b2 = build_dual(pr, part);
  auto [s1, r1] = run_engine(b1, params);
  auto [s2, r2] = run_engine(b2, params);
  return r1.to_csv() == r2.to_csv() && (s1.y - s2.y).lpNorm<Eigen::Infinity>() == 0.0;
}

void criterion_8_properties(const Grid& grid) {
  const bool grads = gradients_match_everywhere();
  const bool projections = projections_property();
  const bool partition = partition_invariance();
  const bool gossip = gossip_decay();
  const bool det = determinism();
  const bool trend = monotone_trend(grid);
  detail(fmt("gradients %s, projections %s, partition invariance %s, gossip decay %s, "
             "determinism %s, smoothed residual trend %s",
             grads ? "ok" : "FAIL", projections ? "ok" : "FAIL", partition ? "ok" : "FAIL",
             gossip ? "ok" : "FAIL", det ? "ok" : "FAIL", trend ? "ok" : "FAIL"));
  report(8, grads && projections && partition && gossip && det && trend,
         "property suites (gradients, projections, partition invariance, gossip decay, "
         "determinism, residual trend)");
}

void criterion_9_continuity() {
  const RandomInstance inst = random_instance(37, 5, 20);
  const ColumnPartition part = make_partition(20, 4);
  const Topology topo = build_topology(TopologyKind::Cycle, 4);
  const ProblemSpec pr =
      ProblemSpec::regbp(inst.a, inst.b, 0.3, Regularizer::l1(1.0), ConstraintSet::free(), part);
  SchemeParams params;
  params.tol = 1e-11;
  params.max_iter = 400000;
  NormalSampler rng(38);
  std::vector<Vector> large, small;
  for (int t = 0; t < 20; ++t) {
    const Vector dir = rng.vector(5).normalized();
    large.push_back(1e-3 * dir);
    small.push_back(1e-4 * dir);
  }
  const auto rows_large = continuity_probe(pr, part, topo, params, large);
  const auto rows_small = continuity_probe(pr, part, topo, params, small);
  double max_large = 0.0, max_small = 0.0;
  for (const auto& r : rows_large) max_large = std::max(max_large, r.ratio);
  for (const auto& r : rows_small) max_small = std::max(max_small, r.ratio);
  const double common_constant = 50.0;
  const bool ok = max_large <= common_constant && max_small <= common_constant &&
                  max_small <= 1.25 * max_large;
  report(9, ok,
         fmt("continuity probe: max ratio %.2f at 1e-3, %.2f at 1e-4 (common bound %.0f, no "
             "growth at the finer scale)",
             max_large, max_small, common_constant));
}

}  // namespace

int main() {
  std::setvbuf(stdout, nullptr, _IOLBF, 0);
  Grid grid;
  auto guarded = [](int criterion, auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      report(criterion, false, fmt("aborted: %s", e.what()));
    }
  };
  guarded(1, [&] { criterion_1_lasso(grid); });
  guarded(2, [&] { criterion_2_bpdn(grid); });
  guarded(3, [&] { criterion_3_fused(grid); });
  guarded(4, [&] { criterion_4_group(grid); });
  guarded(5, [&] { criterion_5_analytic(); });
  guarded(6, [&] { criterion_6_exact_regularization(); });
  guarded(7, [&] { criterion_7_certificates(grid); });
  guarded(8, [&] { criterion_8_properties(grid); });
  guarded(9, [&] { criterion_9_continuity(); });
  if (g_failures == 0)
    std::printf("all acceptance criteria passed\n");
  else
    std::printf("%d acceptance criteria FAILED\n", g_failures);
  return g_failures;
}
