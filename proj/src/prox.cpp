#include "cpdual/prox.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace cpdual {

Vector soft_threshold(const Vector& s, double kappa) {
  Vector out(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) out[i] = soft_threshold(s[i], kappa);
  return out;
}

Vector group_shrink(const Vector& z, double radius) {
  const double nrm = z.norm();
  if (nrm <= radius) return Vector::Zero(z.size());
  return (1.0 - radius / nrm) * z;
}

double theta(double t, const Interval& box) {
  const double r = t - box.clamp(t);
  return t * t - r * r;
}

double theta_grad(double t, const Interval& box) { return 2.0 * box.clamp(t); }

Vector project_box(const Vector& z, const std::vector<Interval>& boxes) {
  if (z.size() != static_cast<Eigen::Index>(boxes.size()))
    throw DimensionError("project_box: size mismatch");
  Vector out(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) out[i] = boxes[static_cast<std::size_t>(i)].clamp(z[i]);
  return out;
}

Vector project_ball_inf(const Vector& z, double radius) {
  if (!(radius > 0.0)) throw ValidationError("project_ball_inf: radius must be positive");
  return z.cwiseMax(-radius).cwiseMin(radius);
}

Vector project_ball_2(const Vector& z, double radius) {
  if (!(radius > 0.0)) throw ValidationError("project_ball_2: radius must be positive");
  const double nrm = z.norm();
  if (nrm <= radius) return z;
  return (radius / nrm) * z;
}

Vector project_nonneg(const Vector& z) { return z.cwiseMax(0.0); }

Vector project_polyhedron(const Matrix& c, const Vector& d, const Vector& z, double tol) {
  if (c.rows() != d.size()) throw DimensionError("project_polyhedron: C and d row counts differ");
  if (c.cols() != z.size()) throw DimensionError("project_polyhedron: C and z shapes differ");
  DykstraSet set;
  for (Eigen::Index r = 0; r < c.rows(); ++r)
    set.add(std::make_unique<SlabSet>(c.row(r).transpose(), -kInf, d[r]));
  return set.project(z, tol);
}

Vector prox_numeric(const SmoothFunction& f, double rho, const Vector& z, double tol,
                    int max_iter) {
  if (!(rho > 0.0)) throw ValidationError("prox_numeric: rho must be positive");
  // phi(w) = 1/2 ||w - z||^2 + rho f(w) is 1-strongly convex;
  // grad phi(w) = w - z + rho grad f(w).
  auto grad_phi = [&](const Vector& w) -> Vector { return (w - z) + rho * f.gradient(w); };
  auto phi = [&](const Vector& w) { return 0.5 * (w - z).squaredNorm() + rho * f.value(w); };

  Vector w = z;
  Vector g = grad_phi(w);
  double fw = phi(w);
  double step = 1.0;
  // Barzilai-Borwein with a nonmonotone (last-10) line-search reference.
  std::vector<double> recent = {fw};
  for (int it = 0; it < max_iter; ++it) {
    const double gn = g.norm();
    if (gn <= tol) return w;
    double fref = fw;
    for (double v : recent) fref = std::max(fref, v);
    double s = std::min(std::max(step, 1e-10), 1e10);
    Vector w_new;
    double f_new = 0.0;
    for (int ls = 0; ls < 80; ++ls) {
      w_new = w - s * g;
      f_new = phi(w_new);
      if (f_new <= fref - 1e-4 * s * gn * gn) break;
      s *= 0.5;
    }
    Vector g_new = grad_phi(w_new);
    const Vector dw = w_new - w;
    const Vector dg = g_new - g;
    const double dwdg = dw.dot(dg);
    step = (dwdg > 1e-300) ? dw.squaredNorm() / dwdg : 2.0 * s;
    if (!std::isfinite(step) || step <= 0.0) step = s;
    w = std::move(w_new);
    g = std::move(g_new);
    fw = f_new;
    recent.push_back(fw);
    if (recent.size() > 10) recent.erase(recent.begin());
  }
  const double res = grad_phi(w).norm();
  if (res > tol)
    throw NonConvergence("prox_numeric did not reach tolerance", max_iter, res);
  return w;
}

Vector prox_numeric_projected(const SmoothFunction& f, double rho, const Vector& z,
                              const std::function<Vector(const Vector&)>& project, double tol,
                              int max_iter) {
  if (!(rho > 0.0)) throw ValidationError("prox_numeric_projected: rho must be positive");
  auto grad_phi = [&](const Vector& w) -> Vector { return (w - z) + rho * f.gradient(w); };
  auto phi = [&](const Vector& w) { return 0.5 * (w - z).squaredNorm() + rho * f.value(w); };

  Vector w = project(z);
  Vector g = grad_phi(w);
  double fw = phi(w);
  double step = 1.0;
  std::vector<double> recent = {fw};
  for (int it = 0; it < max_iter; ++it) {
    const double res = (w - project(w - g)).norm();
    if (res <= tol) return w;
    double fref = fw;
    for (double v : recent) fref = std::max(fref, v);
    double s = std::min(std::max(step, 1e-10), 1e10);
    Vector w_new;
    double f_new = 0.0;
    for (int ls = 0; ls < 80; ++ls) {
      w_new = project(w - s * g);
      f_new = phi(w_new);
      const Vector d = w_new - w;
      if (f_new <= fref + 1e-4 * g.dot(d) || d.norm() == 0.0) break;
      s *= 0.5;
    }
    Vector g_new = grad_phi(w_new);
    const Vector dw = w_new - w;
    const Vector dg = g_new - g;
    const double dwdg = dw.dot(dg);
    step = (dwdg > 1e-300) ? dw.squaredNorm() / dwdg : 2.0 * s;
    if (!std::isfinite(step) || step <= 0.0) step = s;
    w = std::move(w_new);
    g = std::move(g_new);
    fw = f_new;
    recent.push_back(fw);
    if (recent.size() > 10) recent.erase(recent.begin());
  }
  const double res = (w - project(w - grad_phi(w))).norm();
  if (res > tol)
    throw NonConvergence("prox_numeric_projected did not reach tolerance", max_iter, res);
  return w;
}

SlabSet::SlabSet(Vector c, double lo, double hi) : c_(std::move(c)), lo_(lo), hi_(hi) {
  const double sq = c_.squaredNorm();
  if (!(sq > 0.0)) throw ValidationError("slab: zero normal");
  if (!(lo_ < hi_) && !(lo_ <= hi_)) throw ValidationError("slab: empty interval");
  inv_sq_norm_ = 1.0 / sq;
}

Vector SlabSet::project(const Vector& z) const {
  const double t = c_.dot(z);
  double shift = 0.0;
  if (t > hi_)
    shift = t - hi_;
  else if (t < lo_)
    shift = t - lo_;
  if (shift == 0.0) return z;
  return z - (shift * inv_sq_norm_) * c_;
}

double SlabSet::violation(const Vector& z) const {
  const double t = c_.dot(z);
  return std::max({0.0, t - hi_, lo_ - t});
}

CoordBoxSet::CoordBoxSet(int offset, std::vector<Interval> boxes)
    : offset_(offset), boxes_(std::move(boxes)) {}

Vector CoordBoxSet::project(const Vector& z) const {
  Vector out = z;
  for (std::size_t k = 0; k < boxes_.size(); ++k) {
    const Eigen::Index i = offset_ + static_cast<Eigen::Index>(k);
    out[i] = boxes_[k].clamp(out[i]);
  }
  return out;
}

double CoordBoxSet::violation(const Vector& z) const {
  double v = 0.0;
  for (std::size_t k = 0; k < boxes_.size(); ++k) {
    const Eigen::Index i = offset_ + static_cast<Eigen::Index>(k);
    v = std::max(v, std::abs(z[i] - boxes_[k].clamp(z[i])));
  }
  return v;
}

Ball2Set::Ball2Set(int offset, int len, double radius)
    : offset_(offset), len_(len), radius_(radius) {
  if (!(radius_ > 0.0)) throw ValidationError("ball2 set: radius must be positive");
}

Vector Ball2Set::project(const Vector& z) const {
  Vector out = z;
  const double nrm = out.segment(offset_, len_).norm();
  if (nrm > radius_) out.segment(offset_, len_) *= radius_ / nrm;
  return out;
}

double Ball2Set::violation(const Vector& z) const {
  return std::max(0.0, z.segment(offset_, len_).norm() - radius_);
}

Vector NonNegSet::project(const Vector& z) const {
  Vector out = z;
  out.segment(offset_, len_) = out.segment(offset_, len_).cwiseMax(0.0);
  return out;
}

double NonNegSet::violation(const Vector& z) const {
  double v = 0.0;
  for (int k = 0; k < len_; ++k) v = std::max(v, -std::min(0.0, z[offset_ + k]));
  return v;
}

GramBallSet::GramBallSet(Matrix m, double radius) : m_(std::move(m)), radius_(radius) {
  if (!(radius_ > 0.0)) throw ValidationError("gram ball: radius must be positive");
  Eigen::SelfAdjointEigenSolver<Matrix> es(m_ * m_.transpose());
  eigvec_ = es.eigenvectors();
  eigval_ = es.eigenvalues().cwiseMax(0.0);
}

Vector GramBallSet::project(const Vector& z) const {
  if ((m_.transpose() * z).norm() <= radius_) return z;
  const Vector zt = eigvec_.transpose() * z;
  // phi(nu) = sum_j lam_j zt_j^2 / (1 + nu lam_j)^2 - r^2 is decreasing;
  // bracket then Newton.
  auto phi = [&](double nu) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < zt.size(); ++j) {
      const double den = 1.0 + nu * eigval_[j];
      s += eigval_[j] * zt[j] * zt[j] / (den * den);
    }
    return s - radius_ * radius_;
  };
  auto dphi = [&](double nu) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < zt.size(); ++j) {
      const double den = 1.0 + nu * eigval_[j];
      s += -2.0 * eigval_[j] * eigval_[j] * zt[j] * zt[j] / (den * den * den);
    }
    return s;
  };
  double lo = 0.0, hi = 1.0;
  while (phi(hi) > 0.0) {
    lo = hi;
    hi *= 4.0;
    if (hi > 1e18) break;
  }
  double nu = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double f = phi(nu);
    if (std::abs(f) <= 1e-15 * radius_ * radius_) break;
    if (f > 0.0)
      lo = nu;
    else
      hi = nu;
    const double dp = dphi(nu);
    double next = (dp < 0.0) ? nu - f / dp : 0.5 * (lo + hi);
    if (!(next > lo) || !(next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - nu) <= 1e-16 * (1.0 + nu)) {
      nu = next;
      break;
    }
    nu = next;
  }
  Vector wt(zt.size());
  for (Eigen::Index j = 0; j < zt.size(); ++j) wt[j] = zt[j] / (1.0 + nu * eigval_[j]);
  return eigvec_ * wt;
}

double GramBallSet::violation(const Vector& z) const {
  return std::max(0.0, (m_.transpose() * z).norm() - radius_);
}

Vector DykstraSet::project(const Vector& z, double tol, long max_passes) const {
  if (sets_.empty()) return z;
  if (sets_.size() == 1) return sets_.front()->project(z);
  // The formula-driven cap 10 * sets * dim is far too small for tight
  // tolerances on badly conditioned instances; keep a generous floor.
  if (max_passes <= 0)
    max_passes = std::max<long>(10l * static_cast<long>(sets_.size()) * std::max<long>(1, z.size()),
                                20000);

  Vector x = z;
  std::vector<Vector> corrections(sets_.size(), Vector::Zero(z.size()));
  double change = kInf;
  for (long pass = 0; pass < max_passes; ++pass) {
    // Birgin-Raydan measure: the summed movement of the correction vectors
    // bounds the distance to the fixed point.
    change = 0.0;
    for (std::size_t s = 0; s < sets_.size(); ++s) {
      const Vector y = x + corrections[s];
      const Vector px = sets_[s]->project(y);
      const Vector corr_new = y - px;
      change += (corr_new - corrections[s]).squaredNorm();
      corrections[s] = corr_new;
      x = px;
    }
    change = std::sqrt(change);
    if (change <= tol && violation(x) <= tol) return x;
  }
  if (violation(x) <= 10.0 * tol) return x;
  throw NonConvergence("dykstra projection did not reach tolerance", max_passes, change);
}

double DykstraSet::violation(const Vector& z) const {
  double v = 0.0;
  for (const auto& s : sets_) v = std::max(v, s->violation(z));
  return v;
}

}  // namespace cpdual
