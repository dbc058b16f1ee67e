#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "cpdual/partition.hpp"
#include "cpdual/types.hpp"

namespace cpdual {

enum class ConstraintKind { Free, NonNeg, Box, GeneralPolyhedron, DecoupledPolyhedron };

// Feasible set C for the primal variable. Box bounds must straddle zero
// (l <= 0 <= u), the standing assumption behind every reduced dual here.
struct ConstraintSet {
  ConstraintKind kind = ConstraintKind::Free;
  Vector lower, upper;               // Box
  Matrix c;                          // GeneralPolyhedron: C x <= d
  Vector d;
  std::vector<Matrix> c_blocks;      // DecoupledPolyhedron: C_i x_{I_i} <= d_i
  std::vector<Vector> d_blocks;

  static ConstraintSet free() { return {}; }
  static ConstraintSet nonneg();
  static ConstraintSet box(Vector l, Vector u);
  static ConstraintSet polyhedron(Matrix c, Vector d);
  static ConstraintSet decoupled(std::vector<Matrix> c_blocks, std::vector<Vector> d_blocks);

  bool is_cone() const;  // d = 0 (Free and NonNeg included)
  void validate(int n, const ColumnPartition* partition) const;
};

enum class RegularizerKind { L1, FusedL1, GroupL2 };

// ||E x||_* for the three supported shapes:
//   L1:      lambda ||x||_1
//   FusedL1: lambda ||x||_1 + gamma ||D1 x||_1   (D1 = first differences)
//   GroupL2: sum_i weight_i ||x_{I_i}||_2 over the agent partition
struct Regularizer {
  RegularizerKind kind = RegularizerKind::L1;
  double lambda = 1.0;
  double gamma = 0.0;
  std::vector<double> group_weights;  // GroupL2; one weight per block

  static Regularizer l1(double lambda);
  static Regularizer fused(double lambda, double gamma);
  static Regularizer group(std::vector<double> weights);
  static Regularizer group_uniform(int p, double weight);

  double value(const Vector& x, const ColumnPartition& partition) const;
  void validate(const ColumnPartition& partition) const;
};

// (D1 x)_k = x_{k+1} - x_k, applied matrix-free.
Vector first_difference(const Vector& x);
// D1^T v for v in R^{N-1}.
Vector first_difference_transpose(const Vector& v, Eigen::Index n);

enum class ProblemFamily { RegBp, Lasso, Bpdn };

// Tagged problem description shared by the distributed pipeline and the
// centralized reference solvers:
//   RegBp: min ||E x||_* + (alpha/2)||x||^2  s.t.  A x = b, x in C
//   Lasso: min (1/2)||A x - b||^2 + ||E x||_*  s.t.  x in C
//   Bpdn:  min ||E x||_*  s.t.  ||A x - b||_2 <= sigma, x in C
struct ProblemSpec {
  ProblemFamily family = ProblemFamily::Lasso;
  Matrix a;
  Vector b;
  double alpha = 0.0;  // RegBp
  double sigma = 0.0;  // Bpdn
  Regularizer reg;
  ConstraintSet constraint;

  static ProblemSpec regbp(Matrix a, Vector b, double alpha, Regularizer reg,
                           ConstraintSet constraint, const ColumnPartition& partition);
  static ProblemSpec lasso(Matrix a, Vector b, Regularizer reg, ConstraintSet constraint,
                           const ColumnPartition& partition);
  static ProblemSpec bpdn(Matrix a, Vector b, double sigma, Regularizer reg,
                          ConstraintSet constraint, const ColumnPartition& partition);

  int m() const { return static_cast<int>(a.rows()); }
  int n() const { return static_cast<int>(a.cols()); }

  // Objective of the stated problem at x (constraints not checked).
  double objective(const Vector& x, const ColumnPartition& partition) const;

  void validate(const ColumnPartition& partition) const;
};

}  // namespace cpdual
