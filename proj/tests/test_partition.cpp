#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "cpdual/partition.hpp"
#include "cpdual/problem.hpp"

using namespace cpdual;

TEST_CASE("even partition matches the experiment layout") {
  const ColumnPartition part = make_partition(400, 40);
  CHECK(part.agents() == 40);
  for (int i = 0; i < 40; ++i) {
    CHECK(part.block_size(i) == 10);
    CHECK(part.block(i).front() == 10 * i);
  }
  CHECK(part.contiguous());
}

TEST_CASE("even partition edge cases") {
  const ColumnPartition single = make_partition(3, 1);
  CHECK(single.block(0) == std::vector<int>{0, 1, 2});

  const ColumnPartition uneven = make_partition(5, 2);
  CHECK(uneven.block_size(0) == 3);
  CHECK(uneven.block_size(1) == 2);
}

TEST_CASE("every partition covers 1..N exactly") {
  for (int n : {1, 2, 7, 40, 113}) {
    for (int p = 1; p <= n; p = p * 2 + 1) {
      const ColumnPartition part = make_partition(n, p);
      std::vector<int> all;
      for (int i = 0; i < part.agents(); ++i)
        all.insert(all.end(), part.block(i).begin(), part.block(i).end());
      std::sort(all.begin(), all.end());
      std::vector<int> expect(static_cast<std::size_t>(n));
      std::iota(expect.begin(), expect.end(), 0);
      CHECK(all == expect);
    }
  }
}

TEST_CASE("partition rejects malformed input") {
  CHECK_THROWS_AS(make_partition(3, 4), ValidationError);
  CHECK_THROWS_AS(make_partition(3, 0), ValidationError);

  std::vector<std::vector<int>> missing = {{0, 1}};  // does not cover column 2
  CHECK_THROWS_AS(make_partition(3, 1, PartitionStrategy::Explicit, &missing), ValidationError);
  std::vector<std::vector<int>> dup = {{0, 1}, {1, 2}};
  CHECK_THROWS_AS(make_partition(3, 2, PartitionStrategy::Explicit, &dup), ValidationError);
  std::vector<std::vector<int>> empty_block = {{0, 1, 2}, {}};
  CHECK_THROWS_AS(make_partition(3, 2, PartitionStrategy::Explicit, &empty_block), ValidationError);
  std::vector<std::vector<int>> out_of_range = {{0, 1, 3}};
  CHECK_THROWS_AS(make_partition(3, 1, PartitionStrategy::Explicit, &out_of_range), ValidationError);
}

TEST_CASE("explicit non-contiguous partitions are allowed") {
  std::vector<std::vector<int>> blocks = {{2, 0}, {1, 3}};
  const ColumnPartition part = make_partition(4, 2, PartitionStrategy::Explicit, &blocks);
  CHECK_FALSE(part.contiguous());
  Matrix a(2, 4);
  a << 1, 2, 3, 4, 5, 6, 7, 8;
  const Matrix a0 = part.gather_columns(a, 0);
  CHECK(a0(0, 0) == 3);
  CHECK(a0(0, 1) == 1);
}

TEST_CASE("blocked matvec equals the dense product") {
  SUBCASE("identity") {
    const ColumnPartition part = make_partition(2, 2);
    const Matrix eye = Matrix::Identity(2, 2);
    std::vector<Vector> xb = {Vector::Constant(1, 3.0), Vector::Constant(1, -1.0)};
    const Vector y = blocked_matvec(eye, part, xb);
    CHECK(y[0] == 3.0);
    CHECK(y[1] == -1.0);
  }
  SUBCASE("zero blocks") {
    const ColumnPartition part = make_partition(6, 3);
    const Matrix a = Matrix::Random(4, 6);
    std::vector<Vector> xb(3, Vector::Zero(2));
    CHECK(blocked_matvec(a, part, xb).norm() == 0.0);
  }
  SUBCASE("random against dense") {
    NormalSampler rng(11);
    for (auto [m, n, p] : {std::tuple{4, 6, 3}, std::tuple{10, 40, 8}, std::tuple{50, 500, 25}}) {
      const Matrix a = rng.matrix(m, n);
      const Vector x = rng.vector(n);
      const ColumnPartition part = make_partition(n, p);
      std::vector<Vector> xb;
      for (int i = 0; i < p; ++i) xb.push_back(part.gather(x, i));
      const Vector dense = a * x;
      const Vector blocked = blocked_matvec(a, part, xb);
      CHECK((dense - blocked).norm() <= 1e-12 * std::max(1.0, dense.norm()));
      CHECK((assemble(part, xb) - x).norm() == 0.0);
    }
  }
  SUBCASE("dimension mismatch") {
    const ColumnPartition part = make_partition(6, 3);
    const Matrix a = Matrix::Random(4, 6);
    std::vector<Vector> bad(3, Vector::Zero(3));
    CHECK_THROWS_AS(blocked_matvec(a, part, bad), DimensionError);
  }
}

TEST_CASE("problem validation rejects each invariant violation") {
  const ColumnPartition part = make_partition(4, 2);
  const Matrix a = Matrix::Identity(4, 4);
  const Vector b = Vector::Ones(4);

  CHECK_THROWS_AS(ProblemSpec::regbp(a, Vector::Ones(3), 0.1, Regularizer::l1(1.0),
                                     ConstraintSet::free(), part),
                  ValidationError);
  CHECK_THROWS_AS(ProblemSpec::regbp(a, b, 0.0, Regularizer::l1(1.0), ConstraintSet::free(), part),
                  ValidationError);
  CHECK_THROWS_AS(ProblemSpec::lasso(a, b, Regularizer::l1(-1.0), ConstraintSet::free(), part),
                  ValidationError);
  CHECK_THROWS_AS(ProblemSpec::lasso(a, b, Regularizer::fused(0.5, 0.0), ConstraintSet::free(), part),
                  ValidationError);
  CHECK_THROWS_AS(ProblemSpec::bpdn(a, b, 0.0, Regularizer::l1(1.0), ConstraintSet::free(), part),
                  ValidationError);
  // ||b|| = 2 <= sigma
  CHECK_THROWS_AS(ProblemSpec::bpdn(a, b, 2.5, Regularizer::l1(1.0), ConstraintSet::free(), part),
                  ValidationError);
  // box must straddle zero
  CHECK_THROWS_AS(ProblemSpec::lasso(a, b, Regularizer::l1(1.0),
                                     ConstraintSet::box(Vector::Ones(4), 2.0 * Vector::Ones(4)),
                                     part),
                  ValidationError);
  CHECK_THROWS_AS(ProblemSpec::lasso(a, b, Regularizer::l1(1.0),
                                     ConstraintSet::box(Vector::Zero(4), Vector::Zero(4)), part),
                  ValidationError);
  // group weights must match the agent partition
  CHECK_THROWS_AS(ProblemSpec::lasso(a, b, Regularizer::group({1.0, 1.0, 1.0}),
                                     ConstraintSet::free(), part),
                  ValidationError);
  CHECK_THROWS_AS(ProblemSpec::lasso(a, b, Regularizer::group({1.0, -1.0}), ConstraintSet::free(),
                                     part),
                  ValidationError);
  // polyhedron shape mismatches
  CHECK_THROWS_AS(ProblemSpec::lasso(a, b, Regularizer::l1(1.0),
                                     ConstraintSet::polyhedron(Matrix::Ones(2, 3), Vector::Ones(2)),
                                     part),
                  ValidationError);
  const std::vector<Matrix> cb = {Matrix::Ones(1, 2), Matrix::Ones(1, 3)};
  const std::vector<Vector> db = {Vector::Ones(1), Vector::Ones(1)};
  CHECK_THROWS_AS(ProblemSpec::lasso(a, b, Regularizer::l1(1.0), ConstraintSet::decoupled(cb, db),
                                     part),
                  ValidationError);

  // and a fully valid spec passes
  CHECK_NOTHROW(ProblemSpec::lasso(a, b, Regularizer::l1(1.0), ConstraintSet::free(), part));
}

TEST_CASE("first differences and the transpose agree with the dense matrix") {
  NormalSampler rng(5);
  const int n = 9;
  Matrix d1 = Matrix::Zero(n - 1, n);
  for (int k = 0; k + 1 < n; ++k) {
    d1(k, k) = -1.0;
    d1(k, k + 1) = 1.0;
  }
  const Vector x = rng.vector(n);
  const Vector v = rng.vector(n - 1);
  CHECK((first_difference(x) - d1 * x).norm() <= 1e-14);
  CHECK((first_difference_transpose(v, n) - d1.transpose() * v).norm() <= 1e-14);
}
