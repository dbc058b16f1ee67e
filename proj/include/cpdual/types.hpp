#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace cpdual {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

constexpr double kInf = std::numeric_limits<double>::infinity();

// Error hierarchy. Everything user-facing derives from Error so callers can
// catch one base type at the CLI boundary.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct ValidationError : Error {
  using Error::Error;
};

struct DimensionError : ValidationError {
  using ValidationError::ValidationError;
};

struct ParseError : Error {
  using Error::Error;
};

struct UnsupportedCase : Error {
  using Error::Error;
};

struct NonConvergence : Error {
  long iterations = 0;
  double residual = 0.0;
  NonConvergence(const std::string& msg, long iters, double res)
      : Error(msg + " (iterations=" + std::to_string(iters) +
              ", residual=" + std::to_string(res) + ")"),
        iterations(iters),
        residual(res) {}
};

struct Infeasible : Error {
  using Error::Error;
};

struct DegenerateDual : Error {
  using Error::Error;
};

struct ZeroDenominator : Error {
  using Error::Error;
};

struct StepSizeRejected : Error {
  using Error::Error;
};

// Deterministic standard-normal stream. Box-Muller over mt19937_64 so that a
// seed pins the draw independent of the standard library's distribution
// implementation.
class NormalSampler {
 public:
  explicit NormalSampler(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform01();
    double u2 = uniform01();
    while (u1 <= 1e-300) u1 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  Vector vector(Eigen::Index n) {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = next();
    return v;
  }

  Matrix matrix(Eigen::Index rows, Eigen::Index cols) {
    Matrix a(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) a(i, j) = next();
    return a;
  }

  double uniform01() {
    // splitmix-style advance keeps the stream independent of std::.
    state_ += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    z = z ^ (z >> 31);
    return (static_cast<double>(z >> 11) + 0.5) * (1.0 / 9007199254740992.0);
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace cpdual
