#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "cpdual/network.hpp"
#include "cpdual/problem.hpp"
#include "cpdual/prox.hpp"

namespace cpdual {

// Per-agent dual state w_i = (y_i, mu_i, v_i): a copy of the coupling dual
// variable y in R^m, optional polyhedral multipliers mu, and optional
// ball-constrained dual coordinates v (fused differences, group-box).
struct AgentLayout {
  int y = 0;
  int mu = 0;
  int v = 0;
  int dim() const { return y + mu + v; }
  int mu_offset() const { return y; }
  int v_offset() const { return y + mu; }
};

enum class EngineKind { DouglasRachford, DavisYin };

// One agent's share of the dual objective: smooth, with gradients derived in
// closed form. prox defaults to the numeric inner solver.
class DualPiece {
 public:
  virtual ~DualPiece() = default;

  const AgentLayout& layout() const { return layout_; }
  virtual double value(const Vector& w) const = 0;
  virtual Vector gradient(const Vector& w) const = 0;
  // Applies a PSD upper bound of the smooth part's Hessian; the engines
  // power-iterate this to size their steps.
  virtual Vector hessian_bound_apply(const Vector& w) const = 0;
  virtual Vector prox(double rho, const Vector& q, double tol, int max_iter) const;

 protected:
  AgentLayout layout_;
};

// Consensus structure across agents: the y slice (plus mu when the
// multiplier is a shared copy) is averaged over the network; local mu is
// clamped in place; fused neighbors average their one overlapping v entry.
struct ConsensusSpec {
  std::vector<AgentLayout> layouts;
  bool mu_shared = false;
  struct Overlap {
    int left_agent = 0;   // pairs agent i with agent i+1
    int left_index = 0;   // coordinate of the shared entry in w_i
    int right_index = 0;  // coordinate of the shared entry in w_{i+1}
  };
  std::vector<Overlap> overlaps;

  int agents() const { return static_cast<int>(layouts.size()); }
  void project(std::vector<Vector>& w, const Averager& avg) const;
  // max_i ||w_i - mean||_inf over the consensus-constrained coordinates.
  double residual(const std::vector<Vector>& w) const;
};

struct DualSolution {
  Vector y;
  Vector mu;  // shared multiplier, or concatenated per-agent multipliers
  Vector v;   // assembled fused differences, or concatenated v blocks
  double fixed_point_residual = 0.0;
  double consensus_residual = 0.0;
};

struct DualBuild {
  std::vector<std::unique_ptr<DualPiece>> pieces;
  ConsensusSpec consensus;
  std::vector<DykstraSet> local_sets;  // per agent; empty set = no local constraint
  EngineKind engine = EngineKind::DouglasRachford;
  bool has_local_sets = false;
  bool dr_capable = false;  // pieces fold their local constraints into the prox
  // Extra convergence measure evaluated at the consensual states; for the
  // regularized BP-like duals this is the recovered primal's equality
  // residual ||b - A x(w)||_inf, which the iterate-change residual alone
  // under-controls.
  std::function<double(const std::vector<Vector>&)> extra_residual;
  bool fused = false;
  std::vector<int> v_window_start;  // fused: first difference index held by each agent

  double objective(const std::vector<Vector>& w) const;
  std::vector<Vector> zero_states() const;
  // Reassembles (y, mu, v) from converged per-agent states; agent 0 is the
  // canonical copy when averaging was inexact.
  DualSolution extract_solution(const std::vector<Vector>& w) const;
  // Splits a DualSolution back into per-agent states (for recovery and
  // cross-checks).
  std::vector<Vector> agent_states(const DualSolution& sol) const;
};

// Builds the per-agent dual of the given problem over the column partition.
// Throws UnsupportedCase for (family, regularizer, constraint) combinations
// outside the supported matrix.
DualBuild build_dual(const ProblemSpec& problem, const ColumnPartition& partition);

// Gradient of the smooth part of a piece (projection handles the rest).
inline Vector dual_gradient(const DualPiece& piece, const Vector& point) {
  return piece.gradient(point);
}

// Primal recovery for the regularized BP-like family: each agent's block is
// a closed-form shrink/clamp of its local dual quantities.
std::vector<Vector> recover_primal(const ProblemSpec& problem, const ColumnPartition& partition,
                                   const DualSolution& dual);

enum class Stage2Variant { Plain, Scaled };

// Right-hand side (and post-scale) of the second-stage BP-like problem:
//   plain:  b + y*            (Lasso)    b + sigma y*/||y*||      (Bpdn)
//   scaled: the normalized variants whose stage-2 solution has unit l1 norm
//           and is multiplied back by `scale`.
struct Stage2Target {
  Vector rhs;
  double scale = 1.0;
  bool zero_solution = false;  // scaled mode detected x* = 0
};

Stage2Target stage2_target(const ProblemSpec& problem, const Vector& y_star,
                           Stage2Variant variant);

}  // namespace cpdual
