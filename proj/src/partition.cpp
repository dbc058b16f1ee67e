#include "cpdual/partition.hpp"

#include <algorithm>
#include <numeric>

namespace cpdual {

ColumnPartition::ColumnPartition(int n, std::vector<std::vector<int>> blocks)
    : n_(n), blocks_(std::move(blocks)) {
  if (n_ <= 0) throw ValidationError("partition: N must be positive");
  if (blocks_.empty()) throw ValidationError("partition: needs at least one block");
  std::vector<char> seen(static_cast<std::size_t>(n_), 0);
  int total = 0;
  for (const auto& blk : blocks_) {
    if (blk.empty()) throw ValidationError("partition: empty block");
    for (int j : blk) {
      if (j < 0 || j >= n_) throw ValidationError("partition: index out of range");
      if (seen[static_cast<std::size_t>(j)]) throw ValidationError("partition: duplicate index");
      seen[static_cast<std::size_t>(j)] = 1;
      ++total;
    }
  }
  if (total != n_) throw ValidationError("partition: blocks do not cover all columns");
}

bool ColumnPartition::contiguous() const {
  int expect = 0;
  for (const auto& blk : blocks_) {
    for (int j : blk) {
      if (j != expect) return false;
      ++expect;
    }
  }
  return expect == n_;
}

Matrix ColumnPartition::gather_columns(const Matrix& a, int i) const {
  if (a.cols() != n_) throw DimensionError("gather_columns: matrix has wrong column count");
  const auto& blk = block(i);
  Matrix out(a.rows(), static_cast<Eigen::Index>(blk.size()));
  for (std::size_t k = 0; k < blk.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = a.col(blk[k]);
  return out;
}

Vector ColumnPartition::gather(const Vector& x, int i) const {
  if (x.size() != n_) throw DimensionError("gather: vector has wrong size");
  const auto& blk = block(i);
  Vector out(static_cast<Eigen::Index>(blk.size()));
  for (std::size_t k = 0; k < blk.size(); ++k) out[static_cast<Eigen::Index>(k)] = x[blk[k]];
  return out;
}

void ColumnPartition::scatter(const Vector& xi, int i, Vector& x) const {
  const auto& blk = block(i);
  if (xi.size() != static_cast<Eigen::Index>(blk.size()) || x.size() != n_)
    throw DimensionError("scatter: size mismatch");
  for (std::size_t k = 0; k < blk.size(); ++k) x[blk[k]] = xi[static_cast<Eigen::Index>(k)];
}

ColumnPartition make_partition(int n, int p, PartitionStrategy strategy,
                               const std::vector<std::vector<int>>* explicit_blocks) {
  if (p < 1) throw ValidationError("make_partition: p must be at least 1");
  if (p > n) throw ValidationError("make_partition: p exceeds N");
  if (strategy == PartitionStrategy::Explicit) {
    if (explicit_blocks == nullptr) throw ValidationError("make_partition: explicit blocks missing");
    if (static_cast<int>(explicit_blocks->size()) != p)
      throw ValidationError("make_partition: explicit block count differs from p");
    return ColumnPartition(n, *explicit_blocks);
  }
  std::vector<std::vector<int>> blocks(static_cast<std::size_t>(p));
  const int base = n / p;
  const int extra = n % p;
  int next = 0;
  for (int i = 0; i < p; ++i) {
    const int size = base + (i < extra ? 1 : 0);
    blocks[static_cast<std::size_t>(i)].resize(static_cast<std::size_t>(size));
    std::iota(blocks[static_cast<std::size_t>(i)].begin(), blocks[static_cast<std::size_t>(i)].end(), next);
    next += size;
  }
  return ColumnPartition(n, std::move(blocks));
}

Vector blocked_matvec(const Matrix& a, const ColumnPartition& partition,
                      const std::vector<Vector>& x_blocks) {
  if (static_cast<int>(x_blocks.size()) != partition.agents())
    throw DimensionError("blocked_matvec: block count mismatch");
  Vector y = Vector::Zero(a.rows());
  for (int i = 0; i < partition.agents(); ++i) {
    const auto& blk = partition.block(i);
    const Vector& xi = x_blocks[static_cast<std::size_t>(i)];
    if (xi.size() != static_cast<Eigen::Index>(blk.size()))
      throw DimensionError("blocked_matvec: block dimension mismatch");
    for (std::size_t k = 0; k < blk.size(); ++k)
      y += a.col(blk[k]) * xi[static_cast<Eigen::Index>(k)];
  }
  return y;
}

Vector assemble(const ColumnPartition& partition, const std::vector<Vector>& x_blocks) {
  if (static_cast<int>(x_blocks.size()) != partition.agents())
    throw DimensionError("assemble: block count mismatch");
  Vector x = Vector::Zero(partition.n());
  for (int i = 0; i < partition.agents(); ++i)
    partition.scatter(x_blocks[static_cast<std::size_t>(i)], i, x);
  return x;
}

}  // namespace cpdual
