#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "cpdual/types.hpp"

namespace cpdual {

// Scalar shrinkage S_k(s): prox of k|.|; the closed branches are used as
// written, no smoothing at the kinks.
inline double soft_threshold(double s, double kappa) {
  if (s >= kappa) return s - kappa;
  if (s <= -kappa) return s + kappa;
  return 0.0;
}

Vector soft_threshold(const Vector& s, double kappa);

// S_{||.||_2}(z) = (1 - r/||z||)_+ z, the prox of r||.||_2. Satisfies
// ||S(z)|| = (||z|| - r)_+.
Vector group_shrink(const Vector& z, double radius = 1.0);

// Closed interval with l <= 0 <= u, possibly unbounded on either side.
struct Interval {
  double lower = -kInf;
  double upper = kInf;

  Interval() = default;
  Interval(double l, double u) : lower(l), upper(u) {
    if (!(lower <= 0.0 && 0.0 <= upper) || !(lower < upper))
      throw ValidationError("interval: requires l <= 0 <= u and l < u");
  }
  double clamp(double t) const { return std::min(std::max(t, lower), upper); }
};

// theta(t) = t^2 - (t - clamp(t))^2; C1, convex, zero inside the interval's
// reach of the origin, quadratic growth outside.
double theta(double t, const Interval& box);
// theta'(t) = 2 clamp(t).
double theta_grad(double t, const Interval& box);

Vector project_box(const Vector& z, const std::vector<Interval>& boxes);
Vector project_ball_inf(const Vector& z, double radius);
Vector project_ball_2(const Vector& z, double radius);
Vector project_nonneg(const Vector& z);

// Euclidean projection onto {x : C x <= d} by Dykstra's alternating
// projections over the halfspaces. Iteration cap 10 * rows * dim; each pass
// costs O(rows * dim).
Vector project_polyhedron(const Matrix& c, const Vector& d, const Vector& z, double tol = 1e-10);

// prox_{rho f}(z) for smooth convex f, solved by Barzilai-Borwein gradient
// descent with backtracking; stops when ||w - z + rho grad f(w)|| <= tol.
struct SmoothFunction {
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
};

Vector prox_numeric(const SmoothFunction& f, double rho, const Vector& z, double tol = 1e-10,
                    int max_iter = 5000);

// Constrained variant (projected spectral gradient): returns w minimizing
// the same prox objective over a convex set given by its projection; stops
// when the projected-gradient residual drops below tol.
Vector prox_numeric_projected(const SmoothFunction& f, double rho, const Vector& z,
                              const std::function<Vector(const Vector&)>& project,
                              double tol = 1e-10, int max_iter = 5000);

// ----------------------------------------------------------------------------
// Elementary convex sets with closed-form projections, plus Dykstra over a
// list of them. The splitting engines build their per-agent local sets from
// these pieces.

class ElementarySet {
 public:
  virtual ~ElementarySet() = default;
  virtual Vector project(const Vector& z) const = 0;
  virtual double violation(const Vector& z) const = 0;
};

// { w : lo <= c^T w <= hi } with either side possibly infinite.
class SlabSet final : public ElementarySet {
 public:
  SlabSet(Vector c, double lo, double hi);
  Vector project(const Vector& z) const override;
  double violation(const Vector& z) const override;

 private:
  Vector c_;
  double lo_, hi_, inv_sq_norm_;
};

// Componentwise bounds on a coordinate range [offset, offset+len).
class CoordBoxSet final : public ElementarySet {
 public:
  CoordBoxSet(int offset, std::vector<Interval> boxes);
  Vector project(const Vector& z) const override;
  double violation(const Vector& z) const override;

 private:
  int offset_;
  std::vector<Interval> boxes_;
};

// Euclidean ball of given radius on a coordinate range.
class Ball2Set final : public ElementarySet {
 public:
  Ball2Set(int offset, int len, double radius);
  Vector project(const Vector& z) const override;
  double violation(const Vector& z) const override;

 private:
  int offset_, len_;
  double radius_;
};

// Nonnegativity on a coordinate range.
class NonNegSet final : public ElementarySet {
 public:
  NonNegSet(int offset, int len) : offset_(offset), len_(len) {}
  Vector project(const Vector& z) const override;
  double violation(const Vector& z) const override;

 private:
  int offset_, len_;
};

// { w : ||M^T w||_2 <= r }. Projection solves w(nu) = (I + nu M M^T)^{-1} z
// for the nu >= 0 with ||M^T w(nu)|| = r via a safeguarded Newton search on
// the cached eigendecomposition of M M^T.
class GramBallSet final : public ElementarySet {
 public:
  GramBallSet(Matrix m, double radius);
  Vector project(const Vector& z) const override;
  double violation(const Vector& z) const override;

 private:
  Matrix m_;
  double radius_;
  Matrix eigvec_;
  Vector eigval_;
};

// Intersection of elementary sets via Dykstra. Exact in one pass when only a
// single member set is present.
class DykstraSet {
 public:
  DykstraSet() = default;
  void add(std::unique_ptr<ElementarySet> set) { sets_.push_back(std::move(set)); }
  bool empty() const { return sets_.empty(); }
  std::size_t size() const { return sets_.size(); }

  Vector project(const Vector& z, double tol, long max_passes = 0) const;
  double violation(const Vector& z) const;

 private:
  std::vector<std::unique_ptr<ElementarySet>> sets_;
};

}  // namespace cpdual
