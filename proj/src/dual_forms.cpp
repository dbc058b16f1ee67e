#include "cpdual/dual_forms.hpp"

#include <cmath>
#include <sstream>

namespace cpdual {

Vector DualPiece::prox(double rho, const Vector& q, double tol, int max_iter) const {
  SmoothFunction f;
  f.value = [this](const Vector& w) { return value(w); };
  f.gradient = [this](const Vector& w) { return gradient(w); };
  return prox_numeric(f, rho, q, tol, max_iter);
}

namespace {

std::string case_name(const ProblemSpec& p) {
  std::ostringstream os;
  switch (p.family) {
    case ProblemFamily::RegBp: os << "RegBp"; break;
    case ProblemFamily::Lasso: os << "Lasso"; break;
    case ProblemFamily::Bpdn: os << "Bpdn"; break;
  }
  os << " x ";
  switch (p.reg.kind) {
    case RegularizerKind::L1: os << "l1"; break;
    case RegularizerKind::FusedL1: os << "fused-l1"; break;
    case RegularizerKind::GroupL2: os << "group-l2"; break;
  }
  os << " x ";
  switch (p.constraint.kind) {
    case ConstraintKind::Free: os << "Free"; break;
    case ConstraintKind::NonNeg: os << "NonNeg"; break;
    case ConstraintKind::Box: os << "Box"; break;
    case ConstraintKind::GeneralPolyhedron: os << "GeneralPolyhedron"; break;
    case ConstraintKind::DecoupledPolyhedron: os << "DecoupledPolyhedron"; break;
  }
  return os.str();
}

enum class RegBpKind { ShrinkL1, ThetaL1, Group, GroupNonNeg, ThetaGroup };

// Smooth dual piece of the regularized BP-like problem. The local linear
// image u = A_i^T y + C_i^T mu + V_i v feeds one of the closed-form
// penalties; the gradient maps back through the same operators.
class RegBpPiece final : public DualPiece {
 public:
  RegBpPiece(RegBpKind kind, Matrix a_block, Vector b, int p, double alpha, double lam)
      : kind_(kind), a_(std::move(a_block)), b_(std::move(b)), p_(p), alpha_(alpha), lam_(lam) {
    layout_.y = static_cast<int>(a_.rows());
  }

  void set_shared_multiplier(Matrix c_block, Vector d) {
    c_ = std::move(c_block);
    d_shared_ = std::move(d);
    mu_shared_ = true;
    layout_.mu = static_cast<int>(c_.rows());
  }
  void set_local_multiplier(Matrix c_block, Vector d) {
    c_ = std::move(c_block);
    d_local_ = std::move(d);
    mu_shared_ = false;
    layout_.mu = static_cast<int>(c_.rows());
  }
  enum class VConstraint { None, UnitBox, Ball2 };

  void set_v_map(Matrix vmap, VConstraint vcon, double v_radius) {
    vmap_ = std::move(vmap);
    layout_.v = static_cast<int>(vmap_.cols());
    v_constraint_ = vcon;
    v_radius_ = v_radius;
  }
  void set_boxes(std::vector<Interval> boxes) { boxes_ = std::move(boxes); }

  // Local ball constraints on v fold into the prox via projected descent.
  Vector prox(double rho, const Vector& q, double tol, int max_iter) const override {
    if (v_constraint_ == VConstraint::None) return DualPiece::prox(rho, q, tol, max_iter);
    SmoothFunction f;
    f.value = [this](const Vector& w) { return value(w); };
    f.gradient = [this](const Vector& w) { return gradient(w); };
    const int off = layout_.v_offset();
    const int len = layout_.v;
    auto project = [this, off, len](const Vector& w) {
      Vector out = w;
      if (v_constraint_ == VConstraint::UnitBox) {
        out.segment(off, len) = out.segment(off, len).cwiseMax(-1.0).cwiseMin(1.0);
      } else {
        const double nrm = out.segment(off, len).norm();
        if (nrm > v_radius_) out.segment(off, len) *= v_radius_ / nrm;
      }
      return out;
    };
    return prox_numeric_projected(f, rho, q, project, tol, max_iter);
  }

  int cols() const { return static_cast<int>(a_.cols()); }
  Vector apply_block(const Vector& x) const { return a_ * x; }

  Vector local_image(const Vector& w) const {
    Vector u = a_.transpose() * w.head(layout_.y);
    if (layout_.mu > 0) u += c_.transpose() * w.segment(layout_.mu_offset(), layout_.mu);
    if (layout_.v > 0) u += vmap_ * w.segment(layout_.v_offset(), layout_.v);
    return u;
  }

  double value(const Vector& w) const override {
    double val = b_.dot(w.head(layout_.y)) / p_;
    if (layout_.mu > 0) {
      const auto mu = w.segment(layout_.mu_offset(), layout_.mu);
      val += mu_shared_ ? d_shared_.dot(mu) / p_ : d_local_.dot(mu);
    }
    return val + penalty(local_image(w));
  }

  Vector gradient(const Vector& w) const override {
    Vector g = Vector::Zero(w.size());
    g.head(layout_.y) = b_ / p_;
    if (layout_.mu > 0)
      g.segment(layout_.mu_offset(), layout_.mu) = mu_shared_ ? (d_shared_ / p_).eval() : d_local_;
    const Vector ug = penalty_grad(local_image(w));
    g.head(layout_.y) += a_ * ug;
    if (layout_.mu > 0) g.segment(layout_.mu_offset(), layout_.mu) += c_ * ug;
    if (layout_.v > 0) g.segment(layout_.v_offset(), layout_.v) += vmap_.transpose() * ug;
    return g;
  }

  Vector hessian_bound_apply(const Vector& w) const override {
    // All penalties have curvature at most 1/alpha along u.
    Vector u = local_image(w) / alpha_;
    Vector h = Vector::Zero(w.size());
    h.head(layout_.y) = a_ * u;
    if (layout_.mu > 0) h.segment(layout_.mu_offset(), layout_.mu) = c_ * u;
    if (layout_.v > 0) h.segment(layout_.v_offset(), layout_.v) = vmap_.transpose() * u;
    return h;
  }

  // Primal block from the converged dual state.
  Vector recover(const Vector& w) const {
    const Vector u = local_image(w);
    const int n = cols();
    Vector x(n);
    switch (kind_) {
      case RegBpKind::ShrinkL1:
        return -soft_threshold(u, lam_) / alpha_;
      case RegBpKind::ThetaL1:
        for (int j = 0; j < n; ++j)
          x[j] = boxes_[static_cast<std::size_t>(j)].clamp(-soft_threshold(u[j], lam_) / alpha_);
        return x;
      case RegBpKind::Group:
        return -group_shrink(u, lam_) / alpha_;
      case RegBpKind::GroupNonNeg: {
        const Vector neg = (-u).cwiseMax(0.0);
        Vector cand = (-u.cwiseMax(0.0) + group_shrink(neg, lam_)) / alpha_;
        return cand.cwiseMax(0.0);
      }
      case RegBpKind::ThetaGroup:
        for (int j = 0; j < n; ++j) x[j] = boxes_[static_cast<std::size_t>(j)].clamp(-u[j] / alpha_);
        return x;
    }
    return x;
  }

 private:
  double penalty(const Vector& u) const {
    switch (kind_) {
      case RegBpKind::ShrinkL1:
        return soft_threshold(u, lam_).squaredNorm() / (2.0 * alpha_);
      case RegBpKind::ThetaL1: {
        double s = 0.0;
        for (Eigen::Index j = 0; j < u.size(); ++j)
          s += theta(-soft_threshold(u[j], lam_) / alpha_, boxes_[static_cast<std::size_t>(j)]);
        return 0.5 * alpha_ * s;
      }
      case RegBpKind::Group: {
        const double t = std::max(0.0, u.norm() - lam_);
        return t * t / (2.0 * alpha_);
      }
      case RegBpKind::GroupNonNeg: {
        const double t = std::max(0.0, (-u).cwiseMax(0.0).norm() - lam_);
        return t * t / (2.0 * alpha_);
      }
      case RegBpKind::ThetaGroup: {
        double s = 0.0;
        for (Eigen::Index j = 0; j < u.size(); ++j)
          s += theta(-u[j] / alpha_, boxes_[static_cast<std::size_t>(j)]);
        return 0.5 * alpha_ * s;
      }
    }
    return 0.0;
  }

  Vector penalty_grad(const Vector& u) const {
    Vector g(u.size());
    switch (kind_) {
      case RegBpKind::ShrinkL1:
        return soft_threshold(u, lam_) / alpha_;
      case RegBpKind::ThetaL1:
        for (Eigen::Index j = 0; j < u.size(); ++j) {
          const double s = soft_threshold(u[j], lam_);
          g[j] = (s == 0.0) ? 0.0 : -boxes_[static_cast<std::size_t>(j)].clamp(-s / alpha_);
        }
        return g;
      case RegBpKind::Group: {
        const double nrm = u.norm();
        if (nrm <= lam_ || nrm == 0.0) return Vector::Zero(u.size());
        return ((nrm - lam_) / (alpha_ * nrm)) * u;
      }
      case RegBpKind::GroupNonNeg: {
        const Vector neg = (-u).cwiseMax(0.0);
        const double nrm = neg.norm();
        if (nrm <= lam_ || nrm == 0.0) return Vector::Zero(u.size());
        // d||u_-||/du_j = min(u_j, 0)/||u_-||.
        return ((nrm - lam_) / (alpha_ * nrm)) * u.cwiseMin(0.0);
      }
      case RegBpKind::ThetaGroup:
        for (Eigen::Index j = 0; j < u.size(); ++j)
          g[j] = -boxes_[static_cast<std::size_t>(j)].clamp(-u[j] / alpha_);
        return g;
    }
    return g;
  }

  RegBpKind kind_;
  Matrix a_, c_, vmap_;
  Vector b_, d_shared_, d_local_;
  int p_;
  double alpha_, lam_;
  bool mu_shared_ = false;
  VConstraint v_constraint_ = VConstraint::None;
  double v_radius_ = 1.0;
  std::vector<Interval> boxes_;
};

// (1/p)(||y||^2/2 + b^T y + d^T mu) -- the first-stage LASSO dual objective.
class QuadPiece final : public DualPiece {
 public:
  QuadPiece(Vector b, int p) : b_(std::move(b)), p_(p) { layout_.y = static_cast<int>(b_.size()); }
  void set_shared_multiplier_cost(Vector d, int mu_dim) {
    d_shared_ = std::move(d);
    layout_.mu = mu_dim;
  }
  void set_local_slack(int mu_dim) { layout_.mu = mu_dim; }
  void set_v_dim(int v_dim) { layout_.v = v_dim; }

  double value(const Vector& w) const override {
    const auto y = w.head(layout_.y);
    double val = (0.5 * y.squaredNorm() + b_.dot(y)) / p_;
    if (d_shared_.size() > 0)
      val += d_shared_.dot(w.segment(layout_.mu_offset(), layout_.mu)) / p_;
    return val;
  }

  Vector gradient(const Vector& w) const override {
    Vector g = Vector::Zero(w.size());
    g.head(layout_.y) = (w.head(layout_.y) + b_) / p_;
    if (d_shared_.size() > 0) g.segment(layout_.mu_offset(), layout_.mu) = d_shared_ / p_;
    return g;
  }

  Vector hessian_bound_apply(const Vector& w) const override {
    Vector h = Vector::Zero(w.size());
    h.head(layout_.y) = w.head(layout_.y) / p_;
    return h;
  }

 private:
  Vector b_, d_shared_;
  int p_;
};

// (1/p)(sigma ||y|| + b^T y + d^T mu) -- the first-stage BPDN dual
// objective. The norm has the zero subgradient at y = 0; the optimum is
// bounded away from zero so only transients see it.
class NormPiece final : public DualPiece {
 public:
  NormPiece(Vector b, double sigma, int p) : b_(std::move(b)), sigma_(sigma), p_(p) {
    layout_.y = static_cast<int>(b_.size());
  }
  void set_shared_multiplier_cost(Vector d, int mu_dim) {
    d_shared_ = std::move(d);
    layout_.mu = mu_dim;
  }
  void set_local_slack(int mu_dim) { layout_.mu = mu_dim; }
  void set_v_dim(int v_dim) { layout_.v = v_dim; }

  double value(const Vector& w) const override {
    const auto y = w.head(layout_.y);
    double val = (sigma_ * y.norm() + b_.dot(y)) / p_;
    if (d_shared_.size() > 0)
      val += d_shared_.dot(w.segment(layout_.mu_offset(), layout_.mu)) / p_;
    return val;
  }

  Vector gradient(const Vector& w) const override {
    Vector g = Vector::Zero(w.size());
    const auto y = w.head(layout_.y);
    const double nrm = y.norm();
    g.head(layout_.y) = b_ / p_;
    if (nrm > 0.0) g.head(layout_.y) += (sigma_ / (p_ * nrm)) * y;
    if (d_shared_.size() > 0) g.segment(layout_.mu_offset(), layout_.mu) = d_shared_ / p_;
    return g;
  }

  Vector hessian_bound_apply(const Vector& w) const override {
    // sigma||y|| has unbounded curvature at the origin; the optimum has
    // y != 0, so a unit-scale surrogate is used for step sizing.
    Vector h = Vector::Zero(w.size());
    h.head(layout_.y) = w.head(layout_.y) / p_;
    return h;
  }

 private:
  Vector b_, d_shared_;
  double sigma_;
  int p_;
};

// Fused-difference bookkeeping: agent i holds the difference coordinates
// [max(s_i - 1, 0), min(e_i, N - 2)] where its columns span [s_i, e_i].
struct FusedWindows {
  std::vector<int> start, size;
};

FusedWindows fused_windows(const ColumnPartition& partition) {
  if (!partition.contiguous())
    throw UnsupportedCase("fused regularizer requires a contiguous column partition");
  const int n = partition.n();
  if (n < 2) throw UnsupportedCase("fused regularizer needs at least two columns");
  FusedWindows fw;
  int s = 0;
  for (int i = 0; i < partition.agents(); ++i) {
    const int e = s + partition.block_size(i) - 1;
    const int lo = std::max(s - 1, 0);
    const int hi = std::min(e, n - 2);
    fw.start.push_back(lo);
    fw.size.push_back(hi - lo + 1);
    s = e + 1;
  }
  return fw;
}

// gamma * rows I_i of D1^T restricted to the agent's difference window.
Matrix fused_vmap(const ColumnPartition& partition, int agent, const FusedWindows& fw,
                  double gamma) {
  const int n = partition.n();
  const auto& blk = partition.block(agent);
  Matrix vm = Matrix::Zero(static_cast<Eigen::Index>(blk.size()), fw.size[static_cast<std::size_t>(agent)]);
  const int lo = fw.start[static_cast<std::size_t>(agent)];
  for (std::size_t k = 0; k < blk.size(); ++k) {
    const int j = blk[k];
    if (j - 1 >= 0) vm(static_cast<Eigen::Index>(k), j - 1 - lo) += gamma;
    if (j <= n - 2) vm(static_cast<Eigen::Index>(k), j - lo) -= gamma;
  }
  return vm;
}

std::vector<Interval> box_slice(const ConstraintSet& con, const std::vector<int>& block) {
  std::vector<Interval> boxes;
  boxes.reserve(block.size());
  for (int j : block) {
    if (con.kind == ConstraintKind::NonNeg)
      boxes.emplace_back(0.0, kInf);
    else
      boxes.emplace_back(con.lower[j], con.upper[j]);
  }
  return boxes;
}

double group_weight(const Regularizer& reg, int agent) {
  return reg.group_weights[static_cast<std::size_t>(agent)];
}

}  // namespace

void ConsensusSpec::project(std::vector<Vector>& w, const Averager& avg) const {
  const int p = agents();
  const int m = layouts.front().y;
  const int shared = m + (mu_shared ? layouts.front().mu : 0);

  std::vector<Vector> shared_parts(static_cast<std::size_t>(p));
  for (int i = 0; i < p; ++i) shared_parts[static_cast<std::size_t>(i)] = w[static_cast<std::size_t>(i)].head(shared);
  shared_parts = distributed_average(shared_parts, avg);
  for (int i = 0; i < p; ++i) {
    auto& wi = w[static_cast<std::size_t>(i)];
    wi.head(shared) = shared_parts[static_cast<std::size_t>(i)];
    const auto& lay = layouts[static_cast<std::size_t>(i)];
    if (lay.mu > 0)  // shared mu is clamped post-average, local mu in place
      wi.segment(lay.mu_offset(), lay.mu) = wi.segment(lay.mu_offset(), lay.mu).cwiseMax(0.0);
  }
  for (const auto& ov : overlaps) {
    auto& wl = w[static_cast<std::size_t>(ov.left_agent)];
    auto& wr = w[static_cast<std::size_t>(ov.left_agent) + 1];
    const double mean = 0.5 * (wl[ov.left_index] + wr[ov.right_index]);
    wl[ov.left_index] = mean;
    wr[ov.right_index] = mean;
  }
}

double ConsensusSpec::residual(const std::vector<Vector>& w) const {
  const int p = agents();
  if (p == 1) return 0.0;
  const int m = layouts.front().y;
  const int shared = m + (mu_shared ? layouts.front().mu : 0);
  Vector mean = Vector::Zero(shared);
  for (const auto& wi : w) mean += wi.head(shared);
  mean /= static_cast<double>(p);
  double r = 0.0;
  for (const auto& wi : w) r = std::max(r, (wi.head(shared) - mean).lpNorm<Eigen::Infinity>());
  for (const auto& ov : overlaps) {
    const double diff = std::abs(w[static_cast<std::size_t>(ov.left_agent)][ov.left_index] -
                                 w[static_cast<std::size_t>(ov.left_agent) + 1][ov.right_index]);
    r = std::max(r, 0.5 * diff);
  }
  return r;
}

double DualBuild::objective(const std::vector<Vector>& w) const {
  double total = 0.0;
  for (std::size_t i = 0; i < pieces.size(); ++i) total += pieces[i]->value(w[i]);
  return total;
}

std::vector<Vector> DualBuild::zero_states() const {
  std::vector<Vector> w;
  w.reserve(pieces.size());
  for (const auto& p : pieces) w.push_back(Vector::Zero(p->layout().dim()));
  return w;
}

DualSolution DualBuild::extract_solution(const std::vector<Vector>& w) const {
  DualSolution sol;
  const auto& lay0 = consensus.layouts.front();
  sol.y = w.front().head(lay0.y);
  if (consensus.mu_shared) {
    sol.mu = w.front().segment(lay0.mu_offset(), lay0.mu);
  } else {
    int total = 0;
    for (const auto& lay : consensus.layouts) total += lay.mu;
    sol.mu = Vector(total);
    int off = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      const auto& lay = consensus.layouts[i];
      if (lay.mu > 0) sol.mu.segment(off, lay.mu) = w[i].segment(lay.mu_offset(), lay.mu);
      off += lay.mu;
    }
  }
  if (fused) {
    int total = v_window_start.empty() ? 0 : 0;
    for (std::size_t i = 0; i < w.size(); ++i)
      total = std::max(total, v_window_start[i] + consensus.layouts[i].v);
    sol.v = Vector::Zero(total);
    for (std::size_t i = 0; i < w.size(); ++i) {
      const auto& lay = consensus.layouts[i];
      sol.v.segment(v_window_start[i], lay.v) = w[i].segment(lay.v_offset(), lay.v);
    }
  } else {
    int total = 0;
    for (const auto& lay : consensus.layouts) total += lay.v;
    sol.v = Vector(total);
    int off = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      const auto& lay = consensus.layouts[i];
      if (lay.v > 0) sol.v.segment(off, lay.v) = w[i].segment(lay.v_offset(), lay.v);
      off += lay.v;
    }
  }
  return sol;
}

std::vector<Vector> DualBuild::agent_states(const DualSolution& sol) const {
  std::vector<Vector> w;
  w.reserve(pieces.size());
  int mu_off = 0;
  int v_off = 0;
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    const auto& lay = consensus.layouts[i];
    Vector wi = Vector::Zero(lay.dim());
    wi.head(lay.y) = sol.y;
    if (lay.mu > 0) {
      if (consensus.mu_shared) {
        wi.segment(lay.mu_offset(), lay.mu) = sol.mu;
      } else {
        wi.segment(lay.mu_offset(), lay.mu) = sol.mu.segment(mu_off, lay.mu);
        mu_off += lay.mu;
      }
    }
    if (lay.v > 0) {
      if (fused) {
        wi.segment(lay.v_offset(), lay.v) = sol.v.segment(v_window_start[i], lay.v);
      } else {
        wi.segment(lay.v_offset(), lay.v) = sol.v.segment(v_off, lay.v);
        v_off += lay.v;
      }
    }
    w.push_back(std::move(wi));
  }
  return w;
}

namespace {

DualBuild build_regbp(const ProblemSpec& problem, const ColumnPartition& partition) {
  const int p = partition.agents();
  const auto& con = problem.constraint;
  const auto& reg = problem.reg;
  DualBuild build;
  build.local_sets.resize(static_cast<std::size_t>(p));

  const bool fused = reg.kind == RegularizerKind::FusedL1;
  const bool group = reg.kind == RegularizerKind::GroupL2;
  FusedWindows fw;
  if (fused) fw = fused_windows(partition);

  for (int i = 0; i < p; ++i) {
    Matrix ai = partition.gather_columns(problem.a, i);
    RegBpKind kind;
    double lam = reg.lambda;
    if (group) {
      lam = group_weight(reg, i);
      switch (con.kind) {
        case ConstraintKind::Free:
        case ConstraintKind::GeneralPolyhedron:
        case ConstraintKind::DecoupledPolyhedron:
          kind = RegBpKind::Group;
          break;
        case ConstraintKind::NonNeg:
          kind = RegBpKind::GroupNonNeg;
          break;
        case ConstraintKind::Box:
          kind = RegBpKind::ThetaGroup;
          break;
        default:
          throw UnsupportedCase("unsupported case: " + case_name(problem));
      }
    } else {
      kind = (con.kind == ConstraintKind::NonNeg || con.kind == ConstraintKind::Box)
                 ? RegBpKind::ThetaL1
                 : RegBpKind::ShrinkL1;
    }
    auto piece = std::make_unique<RegBpPiece>(kind, std::move(ai), problem.b, p, problem.alpha, lam);
    if (con.kind == ConstraintKind::GeneralPolyhedron) {
      piece->set_shared_multiplier(partition.gather_columns(con.c, i), con.d);
    } else if (con.kind == ConstraintKind::DecoupledPolyhedron) {
      piece->set_local_multiplier(con.c_blocks[static_cast<std::size_t>(i)],
                                  con.d_blocks[static_cast<std::size_t>(i)]);
    }
    if (kind == RegBpKind::ThetaL1) piece->set_boxes(box_slice(con, partition.block(i)));
    if (fused)
      piece->set_v_map(fused_vmap(partition, i, fw, reg.gamma), RegBpPiece::VConstraint::UnitBox,
                       1.0);
    if (kind == RegBpKind::ThetaGroup) {
      piece->set_boxes(box_slice(con, partition.block(i)));
      piece->set_v_map(Matrix::Identity(partition.block_size(i), partition.block_size(i)),
                       RegBpPiece::VConstraint::Ball2, group_weight(reg, i));
    }
    build.pieces.push_back(std::move(piece));
  }

  // The v-ball constraints are folded into each piece's prox, so the whole
  // family runs under Douglas-Rachford; the local sets below keep the
  // three-operator route available.
  build.engine = EngineKind::DouglasRachford;
  build.dr_capable = true;
  for (int i = 0; i < p; ++i) {
    const auto& lay = build.pieces[static_cast<std::size_t>(i)]->layout();
    if (lay.v == 0) continue;
    build.has_local_sets = true;
    if (fused) {
      build.local_sets[static_cast<std::size_t>(i)].add(std::make_unique<CoordBoxSet>(
          lay.v_offset(), std::vector<Interval>(static_cast<std::size_t>(lay.v), Interval(-1.0, 1.0))));
    } else {
      build.local_sets[static_cast<std::size_t>(i)].add(
          std::make_unique<Ball2Set>(lay.v_offset(), lay.v, group_weight(reg, i)));
    }
  }

  build.fused = fused;
  if (fused) build.v_window_start = fw.start;
  build.consensus.mu_shared = (con.kind == ConstraintKind::GeneralPolyhedron);
  for (const auto& piece : build.pieces) build.consensus.layouts.push_back(piece->layout());

  // sum_i grad_y J_i(w) = b - A x(w), so the primal equality residual is the
  // natural stationarity measure for this family.
  std::vector<const RegBpPiece*> raw;
  for (const auto& piece : build.pieces) raw.push_back(static_cast<const RegBpPiece*>(piece.get()));
  const Vector rhs = problem.b;
  build.extra_residual = [raw, rhs](const std::vector<Vector>& w) {
    Vector residual = rhs;
    for (std::size_t i = 0; i < raw.size(); ++i) residual -= raw[i]->apply_block(raw[i]->recover(w[i]));
    return residual.lpNorm<Eigen::Infinity>();
  };
  if (fused) {
    int s = 0;
    for (int i = 0; i + 1 < p; ++i) {
      const auto& layl = build.consensus.layouts[static_cast<std::size_t>(i)];
      const auto& layr = build.consensus.layouts[static_cast<std::size_t>(i) + 1];
      s += partition.block_size(i);
      // shared difference index s-1 sits last in agent i's window, first in
      // agent i+1's.
      ConsensusSpec::Overlap ov;
      ov.left_agent = i;
      ov.left_index = layl.v_offset() + layl.v - 1;
      ov.right_index = layr.v_offset();
      build.consensus.overlaps.push_back(ov);
    }
  }
  return build;
}

DualBuild build_stage1(const ProblemSpec& problem, const ColumnPartition& partition) {
  const int p = partition.agents();
  const auto& con = problem.constraint;
  const auto& reg = problem.reg;
  if (con.kind == ConstraintKind::Box || con.kind == ConstraintKind::DecoupledPolyhedron)
    throw UnsupportedCase("unsupported case: " + case_name(problem));

  DualBuild build;
  build.local_sets.resize(static_cast<std::size_t>(p));
  build.engine = EngineKind::DavisYin;
  build.has_local_sets = true;

  const bool fused = reg.kind == RegularizerKind::FusedL1;
  const bool group = reg.kind == RegularizerKind::GroupL2;
  const bool bpdn = problem.family == ProblemFamily::Bpdn;
  const bool shared_mu = con.kind == ConstraintKind::GeneralPolyhedron;
  FusedWindows fw;
  if (fused) fw = fused_windows(partition);

  for (int i = 0; i < p; ++i) {
    const Matrix ai = partition.gather_columns(problem.a, i);
    const int m = problem.m();
    const int ni = partition.block_size(i);

    int mu_dim = 0;
    Matrix ci;
    if (shared_mu) {
      mu_dim = static_cast<int>(con.c.rows());
      ci = partition.gather_columns(con.c, i);
    } else if (group && con.kind == ConstraintKind::NonNeg) {
      mu_dim = ni;  // local slack: A_i^T y - mu in the ball, mu >= 0
    }
    const int v_dim = fused ? fw.size[static_cast<std::size_t>(i)] : 0;

    std::unique_ptr<DualPiece> piece;
    if (bpdn) {
      auto np = std::make_unique<NormPiece>(problem.b, problem.sigma, p);
      if (shared_mu) np->set_shared_multiplier_cost(con.d, mu_dim);
      if (!shared_mu && mu_dim > 0) np->set_local_slack(mu_dim);
      np->set_v_dim(v_dim);
      piece = std::move(np);
    } else {
      auto qp = std::make_unique<QuadPiece>(problem.b, p);
      if (shared_mu) qp->set_shared_multiplier_cost(con.d, mu_dim);
      if (!shared_mu && mu_dim > 0) qp->set_local_slack(mu_dim);
      qp->set_v_dim(v_dim);
      piece = std::move(qp);
    }
    const AgentLayout lay = piece->layout();
    build.pieces.push_back(std::move(piece));

    auto& set = build.local_sets[static_cast<std::size_t>(i)];
    const double radius = group ? group_weight(reg, i) : reg.lambda;
    if (group) {
      // ||A_i^T y + C_i^T mu||_2 <= radius (with the local slack folded in
      // for the nonnegative cone).
      Matrix mmat(lay.dim(), ni);
      mmat.setZero();
      mmat.topRows(m) = ai;
      if (shared_mu)
        mmat.middleRows(lay.mu_offset(), mu_dim) = ci;
      else if (mu_dim > 0)
        mmat.middleRows(lay.mu_offset(), mu_dim) = -Matrix::Identity(ni, ni);
      set.add(std::make_unique<GramBallSet>(std::move(mmat), radius));
    } else {
      const Matrix vm = fused ? fused_vmap(partition, i, fw, reg.gamma) : Matrix();
      if (fused)
        set.add(std::make_unique<CoordBoxSet>(
            lay.v_offset(), std::vector<Interval>(static_cast<std::size_t>(v_dim), Interval(-1.0, 1.0))));
      const double lo = (con.kind == ConstraintKind::NonNeg) ? -radius : -radius;
      const double hi = (con.kind == ConstraintKind::NonNeg) ? kInf : radius;
      for (int k = 0; k < ni; ++k) {
        Vector normal = Vector::Zero(lay.dim());
        normal.head(m) = ai.col(k);
        if (shared_mu) normal.segment(lay.mu_offset(), mu_dim) = ci.col(k);
        if (fused) normal.segment(lay.v_offset(), v_dim) = vm.row(k).transpose();
        set.add(std::make_unique<SlabSet>(std::move(normal), lo, hi));
      }
    }
  }

  build.fused = fused;
  if (fused) build.v_window_start = fw.start;
  build.consensus.mu_shared = shared_mu;
  for (const auto& piece : build.pieces) build.consensus.layouts.push_back(piece->layout());
  if (fused) {
    for (int i = 0; i + 1 < p; ++i) {
      const auto& layl = build.consensus.layouts[static_cast<std::size_t>(i)];
      const auto& layr = build.consensus.layouts[static_cast<std::size_t>(i) + 1];
      ConsensusSpec::Overlap ov;
      ov.left_agent = i;
      ov.left_index = layl.v_offset() + layl.v - 1;
      ov.right_index = layr.v_offset();
      build.consensus.overlaps.push_back(ov);
    }
  }
  return build;
}

}  // namespace

DualBuild build_dual(const ProblemSpec& problem, const ColumnPartition& partition) {
  problem.validate(partition);
  switch (problem.family) {
    case ProblemFamily::RegBp:
      return build_regbp(problem, partition);
    case ProblemFamily::Lasso:
    case ProblemFamily::Bpdn:
      return build_stage1(problem, partition);
  }
  throw UnsupportedCase("unsupported case: " + case_name(problem));
}

std::vector<Vector> recover_primal(const ProblemSpec& problem, const ColumnPartition& partition,
                                   const DualSolution& dual) {
  if (problem.family != ProblemFamily::RegBp)
    throw UnsupportedCase("primal recovery is defined for the regularized BP-like family only");
  DualBuild build = build_dual(problem, partition);
  const std::vector<Vector> states = build.agent_states(dual);
  std::vector<Vector> blocks;
  blocks.reserve(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    auto* piece = dynamic_cast<const RegBpPiece*>(build.pieces[i].get());
    blocks.push_back(piece->recover(states[i]));
  }
  return blocks;
}

Stage2Target stage2_target(const ProblemSpec& problem, const Vector& y_star,
                           Stage2Variant variant) {
  Stage2Target target;
  if (problem.family == ProblemFamily::Lasso) {
    if (variant == Stage2Variant::Plain) {
      target.rhs = problem.b + y_star;
      target.scale = 1.0;
      return target;
    }
    const double denom = y_star.dot(y_star + problem.b);
    if (std::abs(denom) < 1e-14 * (1.0 + problem.b.squaredNorm())) {
      // ||x*||_1 = -denom/lambda = 0: the solution is identically zero.
      target.rhs = Vector::Zero(problem.b.size());
      target.scale = 0.0;
      target.zero_solution = true;
      return target;
    }
    target.rhs = -problem.reg.lambda * (y_star + problem.b) / denom;
    target.scale = -y_star.dot(y_star + problem.b) / problem.reg.lambda;
    return target;
  }
  if (problem.family == ProblemFamily::Bpdn) {
    const double nrm = y_star.norm();
    if (nrm <= 1e-12 * (1.0 + problem.b.norm()))
      throw DegenerateDual("BPDN dual solution is numerically zero");
    const Vector shift = (problem.sigma / nrm) * y_star;
    if (variant == Stage2Variant::Plain) {
      target.rhs = problem.b + shift;
      target.scale = 1.0;
      return target;
    }
    const double denom = problem.b.dot(y_star) + problem.sigma * nrm;
    if (std::abs(denom) < 1e-14 * (1.0 + problem.b.norm())) {
      target.rhs = Vector::Zero(problem.b.size());
      target.scale = 0.0;
      target.zero_solution = true;
      return target;
    }
    target.rhs = -(problem.b + shift) / denom;
    target.scale = -denom;
    return target;
  }
  throw UnsupportedCase("stage-2 targets exist for Lasso and Bpdn only");
}

}  // namespace cpdual
