#include "cpdual/problem.hpp"

#include <cmath>

namespace cpdual {

ConstraintSet ConstraintSet::nonneg() {
  ConstraintSet s;
  s.kind = ConstraintKind::NonNeg;
  return s;
}

ConstraintSet ConstraintSet::box(Vector l, Vector u) {
  ConstraintSet s;
  s.kind = ConstraintKind::Box;
  s.lower = std::move(l);
  s.upper = std::move(u);
  return s;
}

ConstraintSet ConstraintSet::polyhedron(Matrix c, Vector d) {
  ConstraintSet s;
  s.kind = ConstraintKind::GeneralPolyhedron;
  s.c = std::move(c);
  s.d = std::move(d);
  return s;
}

ConstraintSet ConstraintSet::decoupled(std::vector<Matrix> c_blocks, std::vector<Vector> d_blocks) {
  ConstraintSet s;
  s.kind = ConstraintKind::DecoupledPolyhedron;
  s.c_blocks = std::move(c_blocks);
  s.d_blocks = std::move(d_blocks);
  return s;
}

bool ConstraintSet::is_cone() const {
  switch (kind) {
    case ConstraintKind::Free:
    case ConstraintKind::NonNeg:
      return true;
    case ConstraintKind::Box:
      return false;
    case ConstraintKind::GeneralPolyhedron:
      return d.size() == 0 || d.lpNorm<Eigen::Infinity>() == 0.0;
    case ConstraintKind::DecoupledPolyhedron:
      for (const auto& di : d_blocks)
        if (di.size() > 0 && di.lpNorm<Eigen::Infinity>() != 0.0) return false;
      return true;
  }
  return false;
}

void ConstraintSet::validate(int n, const ColumnPartition* partition) const {
  switch (kind) {
    case ConstraintKind::Free:
    case ConstraintKind::NonNeg:
      return;
    case ConstraintKind::Box: {
      if (lower.size() != n || upper.size() != n)
        throw ValidationError("box constraint: bound length differs from N");
      for (Eigen::Index i = 0; i < lower.size(); ++i) {
        if (!(lower[i] <= 0.0 && 0.0 <= upper[i]))
          throw ValidationError("box constraint: requires l_i <= 0 <= u_i");
        if (!(lower[i] < upper[i])) throw ValidationError("box constraint: requires l_i < u_i");
      }
      return;
    }
    case ConstraintKind::GeneralPolyhedron: {
      if (c.cols() != n) throw ValidationError("polyhedron: C has wrong column count");
      if (c.rows() != d.size()) throw ValidationError("polyhedron: C and d row counts differ");
      if (!c.allFinite() || !d.allFinite()) throw ValidationError("polyhedron: non-finite entries");
      return;
    }
    case ConstraintKind::DecoupledPolyhedron: {
      if (partition == nullptr)
        throw ValidationError("decoupled polyhedron: needs the column partition");
      if (static_cast<int>(c_blocks.size()) != partition->agents() ||
          static_cast<int>(d_blocks.size()) != partition->agents())
        throw ValidationError("decoupled polyhedron: block count differs from partition");
      for (int i = 0; i < partition->agents(); ++i) {
        const auto& ci = c_blocks[static_cast<std::size_t>(i)];
        const auto& di = d_blocks[static_cast<std::size_t>(i)];
        if (ci.cols() != partition->block_size(i))
          throw ValidationError("decoupled polyhedron: block shape differs from partition");
        if (ci.rows() != di.size())
          throw ValidationError("decoupled polyhedron: C_i and d_i row counts differ");
      }
      return;
    }
  }
}

Regularizer Regularizer::l1(double lambda) {
  Regularizer r;
  r.kind = RegularizerKind::L1;
  r.lambda = lambda;
  return r;
}

Regularizer Regularizer::fused(double lambda, double gamma) {
  Regularizer r;
  r.kind = RegularizerKind::FusedL1;
  r.lambda = lambda;
  r.gamma = gamma;
  return r;
}

Regularizer Regularizer::group(std::vector<double> weights) {
  Regularizer r;
  r.kind = RegularizerKind::GroupL2;
  r.group_weights = std::move(weights);
  r.lambda = r.group_weights.empty() ? 1.0 : r.group_weights.front();
  return r;
}

Regularizer Regularizer::group_uniform(int p, double weight) {
  return group(std::vector<double>(static_cast<std::size_t>(p), weight));
}

double Regularizer::value(const Vector& x, const ColumnPartition& partition) const {
  switch (kind) {
    case RegularizerKind::L1:
      return lambda * x.lpNorm<1>();
    case RegularizerKind::FusedL1:
      return lambda * x.lpNorm<1>() + gamma * first_difference(x).lpNorm<1>();
    case RegularizerKind::GroupL2: {
      double total = 0.0;
      for (int i = 0; i < partition.agents(); ++i)
        total += group_weights[static_cast<std::size_t>(i)] * partition.gather(x, i).norm();
      return total;
    }
  }
  return 0.0;
}

void Regularizer::validate(const ColumnPartition& partition) const {
  switch (kind) {
    case RegularizerKind::L1:
      if (!(lambda > 0.0)) throw ValidationError("regularizer: lambda must be positive");
      return;
    case RegularizerKind::FusedL1:
      if (!(lambda > 0.0) || !(gamma > 0.0))
        throw ValidationError("regularizer: fused weights must be positive");
      return;
    case RegularizerKind::GroupL2:
      if (static_cast<int>(group_weights.size()) != partition.agents())
        throw ValidationError("regularizer: group weight count differs from agent partition");
      for (double w : group_weights)
        if (!(w > 0.0)) throw ValidationError("regularizer: group weights must be positive");
      return;
  }
}

Vector first_difference(const Vector& x) {
  const Eigen::Index n = x.size();
  if (n < 2) return Vector(0);
  Vector v(n - 1);
  for (Eigen::Index k = 0; k + 1 < n; ++k) v[k] = x[k + 1] - x[k];
  return v;
}

Vector first_difference_transpose(const Vector& v, Eigen::Index n) {
  if (v.size() != n - 1) throw DimensionError("first_difference_transpose: size mismatch");
  Vector out = Vector::Zero(n);
  for (Eigen::Index k = 0; k + 1 < n; ++k) {
    out[k] -= v[k];
    out[k + 1] += v[k];
  }
  return out;
}

namespace {
ProblemSpec make_spec(ProblemFamily family, Matrix a, Vector b, double alpha, double sigma,
                      Regularizer reg, ConstraintSet constraint, const ColumnPartition& partition) {
  ProblemSpec s;
  s.family = family;
  s.a = std::move(a);
  s.b = std::move(b);
  s.alpha = alpha;
  s.sigma = sigma;
  s.reg = std::move(reg);
  s.constraint = std::move(constraint);
  s.validate(partition);
  return s;
}
}  // namespace

ProblemSpec ProblemSpec::regbp(Matrix a, Vector b, double alpha, Regularizer reg,
                               ConstraintSet constraint, const ColumnPartition& partition) {
  return make_spec(ProblemFamily::RegBp, std::move(a), std::move(b), alpha, 0.0, std::move(reg),
                   std::move(constraint), partition);
}

ProblemSpec ProblemSpec::lasso(Matrix a, Vector b, Regularizer reg, ConstraintSet constraint,
                               const ColumnPartition& partition) {
  return make_spec(ProblemFamily::Lasso, std::move(a), std::move(b), 0.0, 0.0, std::move(reg),
                   std::move(constraint), partition);
}

ProblemSpec ProblemSpec::bpdn(Matrix a, Vector b, double sigma, Regularizer reg,
                              ConstraintSet constraint, const ColumnPartition& partition) {
  return make_spec(ProblemFamily::Bpdn, std::move(a), std::move(b), 0.0, sigma, std::move(reg),
                   std::move(constraint), partition);
}

double ProblemSpec::objective(const Vector& x, const ColumnPartition& partition) const {
  switch (family) {
    case ProblemFamily::RegBp:
      return reg.value(x, partition) + 0.5 * alpha * x.squaredNorm();
    case ProblemFamily::Lasso:
      return 0.5 * (a * x - b).squaredNorm() + reg.value(x, partition);
    case ProblemFamily::Bpdn:
      return reg.value(x, partition);
  }
  return 0.0;
}

void ProblemSpec::validate(const ColumnPartition& partition) const {
  if (a.size() == 0) throw ValidationError("problem: empty matrix");
  if (!a.allFinite() || !b.allFinite()) throw ValidationError("problem: non-finite data");
  if (b.size() != a.rows()) throw ValidationError("problem: b length differs from row count");
  if (partition.n() != a.cols()) throw ValidationError("problem: partition does not match columns");
  if (family == ProblemFamily::RegBp && !(alpha > 0.0))
    throw ValidationError("problem: RegBp requires alpha > 0");
  if (family == ProblemFamily::Bpdn) {
    if (!(sigma > 0.0)) throw ValidationError("problem: Bpdn requires sigma > 0");
    if (!(b.norm() > sigma))
      throw ValidationError("problem: Bpdn requires ||b|| > sigma (otherwise x = 0)");
  }
  reg.validate(partition);
  constraint.validate(n(), &partition);
}

}  // namespace cpdual
