#pragma once

#include "cpdual/problem.hpp"

namespace cpdual {

struct OracleReport {
  double objective = 0.0;
  Vector solution;
  long iterations = 0;
  double tolerance_achieved = 0.0;
};

// High-precision centralized solve used to certify the distributed pipeline.
// Accelerated proximal gradient where the prox is closed form (l1/group
// LASSO over free/nonnegative sets), ADMM with cached factorizations for
// everything else. `ridge` adds (ridge/2)||x||^2 to a Lasso objective, which
// some analytic test instances need.
OracleReport solve_centralized(const ProblemSpec& problem, const ColumnPartition& partition,
                               double tol = 1e-10, double ridge = 0.0);

// Unregularized BP-like oracle: min ||E x||_* s.t. A x = b, x in C.
OracleReport solve_bp_oracle(const Matrix& a, const Vector& b, const Regularizer& reg,
                             const ConstraintSet& constraint, const ColumnPartition& partition,
                             double tol = 1e-10);

// Independent low-dimensional oracle (N <= 3): multi-stage grid refinement,
// with equality constraints handled by searching the affine feasible set.
OracleReport brute_force_tiny(const ProblemSpec& problem, const ColumnPartition& partition,
                              int points_per_axis = 201, double radius = 5.0, int stages = 6,
                              double ridge = 0.0);

// |J_dist - J_true| / |J_true|.
double relative_error(double j_dist, double j_true);

// Standard-normal instance mirroring the experiment protocol; b is redrawn
// until ||b|| exceeds min_b_norm (used to keep BPDN nontrivial).
struct RandomInstance {
  Matrix a;
  Vector b;
  std::uint64_t seed = 0;
};

RandomInstance random_instance(std::uint64_t seed, int m, int n, double min_b_norm = 0.0);

}  // namespace cpdual
