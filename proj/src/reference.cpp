#include "cpdual/reference.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <functional>

#include "cpdual/prox.hpp"

namespace cpdual {

namespace {

// ---------------------------------------------------------------------------
// Proximal maps of the supported penalties (plus cone/box restrictions).

Vector reg_prox(const Regularizer& reg, const ColumnPartition& partition, const Vector& v,
                double step, bool nonneg) {
  switch (reg.kind) {
    case RegularizerKind::L1: {
      Vector out(v.size());
      const double k = reg.lambda * step;
      for (Eigen::Index j = 0; j < v.size(); ++j)
        out[j] = nonneg ? std::max(0.0, v[j] - k) : soft_threshold(v[j], k);
      return out;
    }
    case RegularizerKind::GroupL2: {
      Vector out = Vector::Zero(v.size());
      for (int i = 0; i < partition.agents(); ++i) {
        Vector vi = partition.gather(v, i);
        if (nonneg) vi = vi.cwiseMax(0.0);
        const Vector si = group_shrink(vi, reg.group_weights[static_cast<std::size_t>(i)] * step);
        partition.scatter(si, i, out);
      }
      return out;
    }
    case RegularizerKind::FusedL1:
      throw UnsupportedCase("fused penalty has no closed-form prox; use the ADMM oracle");
  }
  return v;
}

double power_lmax(const std::function<Vector(const Vector&)>& op, Eigen::Index dim) {
  Vector x = Vector::Ones(dim).normalized();
  double lam = 0.0;
  for (int it = 0; it < 300; ++it) {
    Vector y = op(x);
    const double nrm = y.norm();
    if (nrm <= 1e-300) return 1e-12;
    const double lam_new = x.dot(y);
    y /= nrm;
    if (it > 3 && std::abs(lam_new - lam) <= 1e-9 * std::max(1.0, std::abs(lam_new))) {
      lam = lam_new;
      break;
    }
    lam = lam_new;
    x = std::move(y);
  }
  return lam;
}

// Dual-feasible scaling of the residual gives a duality-gap certificate for
// the prox-gradient path.
double lasso_duality_gap(const ProblemSpec& pr, const ColumnPartition& partition, const Vector& x,
                         double jx) {
  const Vector res = pr.a * x - pr.b;
  const Vector g = pr.a.transpose() * res;
  double c = 1.0;
  const bool nonneg = pr.constraint.kind == ConstraintKind::NonNeg;
  if (pr.reg.kind == RegularizerKind::L1) {
    double worst = 0.0;
    for (Eigen::Index j = 0; j < g.size(); ++j)
      worst = std::max(worst, nonneg ? -g[j] : std::abs(g[j]));
    if (worst > pr.reg.lambda) c = pr.reg.lambda / worst;
  } else {
    for (int i = 0; i < partition.agents(); ++i) {
      Vector gi = partition.gather(g, i);
      if (nonneg) gi = (-gi).cwiseMax(0.0);
      const double nrm = gi.norm();
      const double li = pr.reg.group_weights[static_cast<std::size_t>(i)];
      if (nrm > li) c = std::min(c, li / nrm);
    }
  }
  const Vector nu = c * res;
  const double dual_value = -(0.5 * nu.squaredNorm() + pr.b.dot(nu));
  return jx - dual_value;
}

OracleReport fista(const ProblemSpec& pr, const ColumnPartition& partition, double tol,
                   double ridge) {
  const bool nonneg = pr.constraint.kind == ConstraintKind::NonNeg;
  const Matrix& a = pr.a;
  auto smooth = [&](const Vector& x) {
    return 0.5 * (a * x - pr.b).squaredNorm() + 0.5 * ridge * x.squaredNorm();
  };
  auto grad = [&](const Vector& x) { return (a.transpose() * (a * x - pr.b) + ridge * x).eval(); };
  auto objective = [&](const Vector& x) { return smooth(x) + pr.reg.value(x, partition); };

  double lmax =
      power_lmax([&](const Vector& v) { return (a.transpose() * (a * v) + ridge * v).eval(); },
                 a.cols()) +
      1e-12;

  // Monotone accelerated proximal gradient with backtracking on L and
  // adaptive momentum restart.
  Vector x = Vector::Zero(a.cols());
  Vector yv = x;
  double t = 1.0;
  double fx = objective(x);
  const long max_iter = 500000;
  OracleReport rep;
  for (long k = 0; k < max_iter; ++k) {
    Vector z;
    const Vector gy = grad(yv);
    const double fy = smooth(yv);
    for (int bt = 0; bt < 80; ++bt) {
      z = reg_prox(pr.reg, partition, yv - gy / lmax, 1.0 / lmax, nonneg);
      const Vector diff = z - yv;
      if (smooth(z) <= fy + gy.dot(diff) + 0.5 * lmax * diff.squaredNorm() + 1e-15 * (1.0 + fy))
        break;
      lmax *= 2.0;
    }
    const double fz = objective(z);
    const bool restart = (yv - z).dot(z - x) > 0.0;
    const double t_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const Vector x_prev = x;
    if (fz <= fx) {
      x = z;
      fx = fz;
    }
    yv = x + (t / t_new) * (z - x) + ((t - 1.0) / t_new) * (x - x_prev);
    t = t_new;
    if (restart) {
      t = 1.0;
      yv = x;
    }
    if (k % 10 == 0) {
      double cert;
      if (ridge > 0.0) {
        const Vector gstep = x - reg_prox(pr.reg, partition, x - grad(x) / lmax, 1.0 / lmax, nonneg);
        cert = (lmax * gstep).squaredNorm() / (2.0 * ridge);
      } else {
        cert = lasso_duality_gap(pr, partition, x, fx);
      }
      if (cert <= tol * std::max(1.0, std::abs(fx))) {
        rep.objective = fx;
        rep.solution = x;
        rep.iterations = k + 1;
        rep.tolerance_achieved = cert / std::max(1.0, std::abs(fx));
        return rep;
      }
    }
  }
  throw NonConvergence("centralized prox-gradient oracle stalled", max_iter, tol);
}

// ---------------------------------------------------------------------------
// Generic ADMM over stacked split blocks, with cached (re)factorizations.

struct SplitBlock {
  Matrix rows;    // this block sees rows * x
  Vector offset;  // prox argument is (value - offset)
  std::function<Vector(const Vector&, double)> prox;  // (shifted value, 1/rho)
};

struct AdmmProblem {
  Matrix p;    // smooth quadratic: 0.5 x^T P x + q^T x
  Vector q;
  Matrix aeq;  // optional equality A x = beq
  Vector beq;
  std::vector<SplitBlock> blocks;
  std::function<double(const Vector&)> objective;
};

OracleReport admm(const AdmmProblem& ap, Eigen::Index n, double tol, long max_iter = 400000) {
  Matrix m_all(0, n);
  for (const auto& blk : ap.blocks) {
    Matrix tmp(m_all.rows() + blk.rows.rows(), n);
    tmp << m_all, blk.rows;
    m_all = std::move(tmp);
  }
  const Eigen::Index rows = m_all.rows();
  const bool has_eq = ap.aeq.rows() > 0;

  double rho = 1.0;
  Eigen::LDLT<Matrix> ldlt;
  Eigen::CompleteOrthogonalDecomposition<Matrix> kkt;
  auto factor = [&]() {
    const Matrix h = ap.p + rho * (m_all.transpose() * m_all);
    if (!has_eq) {
      ldlt.compute(h);
      return;
    }
    const Eigen::Index me = ap.aeq.rows();
    Matrix k(n + me, n + me);
    k.setZero();
    k.topLeftCorner(n, n) = h;
    k.topRightCorner(n, me) = ap.aeq.transpose();
    k.bottomLeftCorner(me, n) = ap.aeq;
    kkt.compute(k);
  };
  factor();

  Vector x = Vector::Zero(n);
  Vector zeta = Vector::Zero(rows);
  Vector u = Vector::Zero(rows);
  const double omega = 1.7;

  OracleReport rep;
  long last_adapt = 0;
  int adaptations = 0;
  for (long k = 0; k < max_iter; ++k) {
    Vector rhs = -ap.q + rho * (m_all.transpose() * (zeta - u));
    if (!has_eq) {
      x = ldlt.solve(rhs);
    } else {
      Vector full(n + ap.aeq.rows());
      full << rhs, ap.beq;
      x = kkt.solve(full).head(n);
    }
    const Vector mx = m_all * x;
    const Vector zeta_prev = zeta;
    Eigen::Index off = 0;
    for (const auto& blk : ap.blocks) {
      const Eigen::Index len = blk.rows.rows();
      const Vector relaxed = omega * mx.segment(off, len) + (1.0 - omega) * zeta.segment(off, len);
      const Vector arg = relaxed + u.segment(off, len) - blk.offset;
      zeta.segment(off, len) = blk.prox(arg, 1.0 / rho) + blk.offset;
      u.segment(off, len) += relaxed - zeta.segment(off, len);
      off += len;
    }
    const double r_norm = (mx - zeta).norm();
    const double s_norm = rho * (m_all.transpose() * (zeta - zeta_prev)).norm();
    const double r_scale = std::max({mx.norm(), zeta.norm(), 1.0});
    const double s_scale = std::max(rho * (m_all.transpose() * u).norm(), 1.0);
    const double r_rel = r_norm / r_scale;
    const double s_rel = s_norm / s_scale;
    if (r_rel <= tol && s_rel <= tol) {
      rep.objective = ap.objective(x);
      rep.solution = x;
      rep.iterations = k + 1;
      rep.tolerance_achieved = std::max(r_rel, s_rel);
      return rep;
    }
    // Residual balancing helps early; repeated late changes keep kicking the
    // dual state and can cycle, so adaptation is front-loaded and bounded.
    if (adaptations < 12 && k < 5000 && k - last_adapt >= 200 && std::max(r_rel, s_rel) > 1e-6) {
      if (r_rel > 10.0 * s_rel) {
        rho *= 2.0;
        u /= 2.0;
        factor();
        last_adapt = k;
        ++adaptations;
      } else if (s_rel > 10.0 * r_rel) {
        rho /= 2.0;
        u *= 2.0;
        factor();
        last_adapt = k;
        ++adaptations;
      }
    }
  }
  throw NonConvergence("centralized ADMM oracle stalled", max_iter, tol);
}

// Rows and segment prox of ||E x||_* for each regularizer.
void append_penalty_block(AdmmProblem& ap, const ProblemSpec& pr, const ColumnPartition& partition) {
  const Eigen::Index n = pr.a.cols();
  SplitBlock blk;
  switch (pr.reg.kind) {
    case RegularizerKind::L1: {
      blk.rows = Matrix::Identity(n, n);
      blk.offset = Vector::Zero(n);
      const double lam = pr.reg.lambda;
      blk.prox = [lam](const Vector& v, double step) { return soft_threshold(v, lam * step); };
      break;
    }
    case RegularizerKind::FusedL1: {
      Matrix rows(n + n - 1, n);
      rows.topRows(n) = Matrix::Identity(n, n);
      rows.bottomRows(n - 1).setZero();
      for (Eigen::Index k = 0; k + 1 < n; ++k) {
        rows(n + k, k) = -1.0;
        rows(n + k, k + 1) = 1.0;
      }
      blk.rows = std::move(rows);
      blk.offset = Vector::Zero(n + n - 1);
      const double lam = pr.reg.lambda, gam = pr.reg.gamma;
      const Eigen::Index nn = n;
      blk.prox = [lam, gam, nn](const Vector& v, double step) {
        Vector out(v.size());
        for (Eigen::Index j = 0; j < v.size(); ++j)
          out[j] = soft_threshold(v[j], (j < nn ? lam : gam) * step);
        return out;
      };
      break;
    }
    case RegularizerKind::GroupL2: {
      blk.rows = Matrix::Identity(n, n);
      blk.offset = Vector::Zero(n);
      const auto weights = pr.reg.group_weights;
      const ColumnPartition part = partition;
      blk.prox = [weights, part](const Vector& v, double step) {
        Vector out = Vector::Zero(v.size());
        for (int i = 0; i < part.agents(); ++i) {
          const Vector si = group_shrink(part.gather(v, i), weights[static_cast<std::size_t>(i)] * step);
          part.scatter(si, i, out);
        }
        return out;
      };
      break;
    }
  }
  ap.blocks.push_back(std::move(blk));
}

void append_constraint_block(AdmmProblem& ap, const ProblemSpec& pr,
                             const ColumnPartition& partition) {
  const Eigen::Index n = pr.a.cols();
  const auto& con = pr.constraint;
  SplitBlock blk;
  switch (con.kind) {
    case ConstraintKind::Free:
      return;
    case ConstraintKind::NonNeg:
      blk.rows = Matrix::Identity(n, n);
      blk.offset = Vector::Zero(n);
      blk.prox = [](const Vector& v, double) { return v.cwiseMax(0.0).eval(); };
      break;
    case ConstraintKind::Box: {
      blk.rows = Matrix::Identity(n, n);
      blk.offset = Vector::Zero(n);
      const Vector lo = con.lower, hi = con.upper;
      blk.prox = [lo, hi](const Vector& v, double) { return v.cwiseMax(lo).cwiseMin(hi).eval(); };
      break;
    }
    case ConstraintKind::GeneralPolyhedron: {
      blk.rows = con.c;
      blk.offset = Vector::Zero(con.c.rows());
      const Vector d = con.d;
      blk.prox = [d](const Vector& v, double) { return v.cwiseMin(d).eval(); };
      break;
    }
    case ConstraintKind::DecoupledPolyhedron: {
      Eigen::Index total = 0;
      for (const auto& ci : con.c_blocks) total += ci.rows();
      Matrix rows = Matrix::Zero(total, n);
      Vector d(total);
      Eigen::Index off = 0;
      for (int i = 0; i < partition.agents(); ++i) {
        const auto& ci = con.c_blocks[static_cast<std::size_t>(i)];
        const auto& blkidx = partition.block(i);
        for (Eigen::Index r = 0; r < ci.rows(); ++r)
          for (std::size_t kk = 0; kk < blkidx.size(); ++kk)
            rows(off + r, blkidx[kk]) = ci(r, static_cast<Eigen::Index>(kk));
        d.segment(off, ci.rows()) = con.d_blocks[static_cast<std::size_t>(i)];
        off += ci.rows();
      }
      blk.rows = std::move(rows);
      blk.offset = Vector::Zero(total);
      const Vector dd = d;
      blk.prox = [dd](const Vector& v, double) { return v.cwiseMin(dd).eval(); };
      break;
    }
  }
  ap.blocks.push_back(std::move(blk));
}

OracleReport admm_regbp(const Matrix& a, const Vector& b, double alpha, const ProblemSpec& shape,
                        const ColumnPartition& partition, double tol) {
  const Eigen::Index n = a.cols();
  AdmmProblem ap;
  ap.p = alpha * Matrix::Identity(n, n);
  ap.q = Vector::Zero(n);
  ap.aeq = a;
  ap.beq = b;
  append_penalty_block(ap, shape, partition);
  append_constraint_block(ap, shape, partition);
  ap.objective = [&, alpha](const Vector& x) {
    return shape.reg.value(x, partition) + 0.5 * alpha * x.squaredNorm();
  };
  return admm(ap, n, tol);
}

OracleReport admm_lasso(const ProblemSpec& pr, const ColumnPartition& partition, double tol,
                        double ridge) {
  const Eigen::Index n = pr.a.cols();
  AdmmProblem ap;
  ap.p = pr.a.transpose() * pr.a + ridge * Matrix::Identity(n, n);
  ap.q = -pr.a.transpose() * pr.b;
  append_penalty_block(ap, pr, partition);
  append_constraint_block(ap, pr, partition);
  ap.objective = [&, ridge](const Vector& x) {
    return 0.5 * (pr.a * x - pr.b).squaredNorm() + pr.reg.value(x, partition) +
           0.5 * ridge * x.squaredNorm();
  };
  return admm(ap, n, tol);
}

OracleReport admm_bpdn(const ProblemSpec& pr, const ColumnPartition& partition, double tol) {
  const Eigen::Index n = pr.a.cols();
  AdmmProblem ap;
  ap.p = Matrix::Zero(n, n);
  ap.q = Vector::Zero(n);
  append_penalty_block(ap, pr, partition);
  append_constraint_block(ap, pr, partition);
  SplitBlock ball;
  ball.rows = pr.a;
  ball.offset = pr.b;
  const double sigma = pr.sigma;
  ball.prox = [sigma](const Vector& v, double) {
    const double nrm = v.norm();
    if (nrm <= sigma) return v.eval();
    return ((sigma / nrm) * v).eval();
  };
  ap.blocks.push_back(std::move(ball));
  ap.objective = [&](const Vector& x) { return pr.reg.value(x, partition); };
  return admm(ap, n, tol);
}

}  // namespace

OracleReport solve_centralized(const ProblemSpec& problem, const ColumnPartition& partition,
                               double tol, double ridge) {
  switch (problem.family) {
    case ProblemFamily::RegBp:
      return admm_regbp(problem.a, problem.b, problem.alpha, problem, partition, tol);
    case ProblemFamily::Lasso: {
      const bool prox_friendly = (problem.reg.kind == RegularizerKind::L1 ||
                                  problem.reg.kind == RegularizerKind::GroupL2) &&
                                 (problem.constraint.kind == ConstraintKind::Free ||
                                  problem.constraint.kind == ConstraintKind::NonNeg);
      if (prox_friendly) return fista(problem, partition, tol, ridge);
      return admm_lasso(problem, partition, tol, ridge);
    }
    case ProblemFamily::Bpdn:
      return admm_bpdn(problem, partition, tol);
  }
  throw UnsupportedCase("solve_centralized: unknown family");
}

OracleReport solve_bp_oracle(const Matrix& a, const Vector& b, const Regularizer& reg,
                             const ConstraintSet& constraint, const ColumnPartition& partition,
                             double tol) {
  ProblemSpec shape;
  shape.family = ProblemFamily::RegBp;
  shape.a = a;
  shape.b = b;
  shape.alpha = 1.0;  // shape carrier only; the solve below uses alpha = 0
  shape.reg = reg;
  shape.constraint = constraint;
  return admm_regbp(a, b, 0.0, shape, partition, tol);
}

OracleReport brute_force_tiny(const ProblemSpec& problem, const ColumnPartition& partition,
                              int points_per_axis, double radius, int stages, double ridge) {
  const int n = problem.n();
  if (n > 3) throw ValidationError("brute_force_tiny: N must be at most 3");

  // Search space: the raw variable, or the affine feasible set for the
  // equality-constrained family.
  Matrix basis;
  Vector origin;
  if (problem.family == ProblemFamily::RegBp) {
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(problem.a);
    origin = cod.solve(problem.b);
    Eigen::FullPivLU<Matrix> lu(problem.a);
    Matrix kernel = lu.kernel();
    if (kernel.cols() == 1 && kernel.isZero(0.0)) kernel = Matrix(n, 0);
    if (kernel.cols() > 0) {
      Eigen::HouseholderQR<Matrix> qr(kernel);
      basis = qr.householderQ() * Matrix::Identity(n, kernel.cols());
    } else {
      basis = Matrix(n, 0);
    }
  } else {
    origin = Vector::Zero(n);
    basis = Matrix::Identity(n, n);
  }
  const int dim = static_cast<int>(basis.cols());

  // Inequality constraints enter through an exact penalty so that every grid
  // point is evaluable; hard feasibility rejection loses boundary optima as
  // the feasible sliver thins faster than the zoom window.
  const double penalty = 1e4 * (1.0 + problem.b.norm());
  auto value = [&](const Vector& x) {
    const auto& con = problem.constraint;
    double excess = 0.0;
    switch (con.kind) {
      case ConstraintKind::Free:
        break;
      case ConstraintKind::NonNeg:
        excess += (-x).cwiseMax(0.0).sum();
        break;
      case ConstraintKind::Box:
        excess += (con.lower - x).cwiseMax(0.0).sum() + (x - con.upper).cwiseMax(0.0).sum();
        break;
      case ConstraintKind::GeneralPolyhedron:
        excess += (con.c * x - con.d).cwiseMax(0.0).sum();
        break;
      case ConstraintKind::DecoupledPolyhedron:
        for (int i = 0; i < partition.agents(); ++i) {
          const Vector xi = partition.gather(x, i);
          excess += (con.c_blocks[static_cast<std::size_t>(i)] * xi -
                     con.d_blocks[static_cast<std::size_t>(i)])
                        .cwiseMax(0.0)
                        .sum();
        }
        break;
    }
    if (problem.family == ProblemFamily::Bpdn)
      excess += std::max(0.0, (problem.a * x - problem.b).norm() - problem.sigma);
    return problem.objective(x, partition) + 0.5 * ridge * x.squaredNorm() + penalty * excess;
  };

  Vector center = Vector::Zero(dim);
  double width = radius;
  Vector best_x = origin;
  double best = value(origin);
  double spacing = width;
  for (int stage = 0; stage < stages; ++stage) {
    spacing = 2.0 * width / (points_per_axis - 1);
    const Vector stage_center = center;  // freeze the grid for this pass
    const long total = dim == 0 ? 1 : static_cast<long>(std::pow(points_per_axis, dim));
    for (long cnt = 0; cnt < total; ++cnt) {
      Vector t(dim);
      long rem = cnt;
      for (int d = 0; d < dim; ++d) {
        t[d] = stage_center[d] - width + spacing * static_cast<double>(rem % points_per_axis);
        rem /= points_per_axis;
      }
      const Vector x = origin + basis * t;
      const double val = value(x);
      if (val < best) {
        best = val;
        best_x = x;
        center = t;
      }
    }
    width = 2.5 * spacing;
    if (dim == 0) break;
  }

  OracleReport rep;
  rep.objective = best;
  rep.solution = best_x;
  rep.iterations = stages;
  rep.tolerance_achieved = spacing;
  return rep;
}

double relative_error(double j_dist, double j_true) {
  if (j_true == 0.0) throw ZeroDenominator("relative_error: J_true is zero");
  return std::abs(j_dist - j_true) / std::abs(j_true);
}

RandomInstance random_instance(std::uint64_t seed, int m, int n, double min_b_norm) {
  NormalSampler rng(seed);
  RandomInstance inst;
  inst.seed = seed;
  inst.a = rng.matrix(m, n);
  inst.b = rng.vector(m);
  while (inst.b.norm() <= min_b_norm) inst.b = rng.vector(m);
  return inst;
}

}  // namespace cpdual
