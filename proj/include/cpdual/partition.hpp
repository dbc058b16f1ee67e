#pragma once

#include <vector>

#include "cpdual/types.hpp"

namespace cpdual {

// Disjoint column blocks I_1..I_p covering {0..N-1}. Indices are 0-based
// internally; 1-based only in files and on the CLI surface.
class ColumnPartition {
 public:
  ColumnPartition(int n, std::vector<std::vector<int>> blocks);

  int n() const { return n_; }
  int agents() const { return static_cast<int>(blocks_.size()); }
  const std::vector<int>& block(int i) const { return blocks_.at(static_cast<std::size_t>(i)); }
  const std::vector<std::vector<int>>& blocks() const { return blocks_; }
  int block_size(int i) const { return static_cast<int>(block(i).size()); }

  // True when every block is a contiguous ascending index range and the
  // blocks appear in column order; the fused cases require this layout.
  bool contiguous() const;

  // Gather the columns of a into the agent's local block matrix.
  Matrix gather_columns(const Matrix& a, int i) const;
  Vector gather(const Vector& x, int i) const;
  void scatter(const Vector& xi, int i, Vector& x) const;

 private:
  int n_;
  std::vector<std::vector<int>> blocks_;
};

enum class PartitionStrategy { Even, Explicit };

// Even strategy: contiguous ascending blocks whose sizes differ by at most
// one, the larger blocks first.
ColumnPartition make_partition(int n, int p, PartitionStrategy strategy = PartitionStrategy::Even,
                               const std::vector<std::vector<int>>* explicit_blocks = nullptr);

// Ax assembled from per-agent pieces: sum_i A_{.I_i} x_{I_i}.
Vector blocked_matvec(const Matrix& a, const ColumnPartition& partition,
                      const std::vector<Vector>& x_blocks);

// Concatenate per-agent blocks back into a full vector.
Vector assemble(const ColumnPartition& partition, const std::vector<Vector>& x_blocks);

}  // namespace cpdual
