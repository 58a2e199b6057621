#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

#include "stackstep/core.hpp"

namespace stackstep {

enum class SetKind { box, frobenius_ball };

/// Convex compact constraint set supporting Euclidean projection of vectors
/// and matrices. Boxes use uniform per-entry bounds; balls are centered at
/// the origin in the Frobenius norm.
class ConstraintSet {
 public:
  static ConstraintSet box(double lo, double hi) {
    if (!(lo < hi)) throw std::invalid_argument("ConstraintSet::box: need lo < hi");
    ConstraintSet s;
    s.kind_ = SetKind::box;
    s.lo_ = lo;
    s.hi_ = hi;
    return s;
  }

  static ConstraintSet frobenius_ball(double radius) {
    if (!(radius > 0.0)) throw std::invalid_argument("ConstraintSet::frobenius_ball: need radius > 0");
    ConstraintSet s;
    s.kind_ = SetKind::frobenius_ball;
    s.radius_ = radius;
    return s;
  }

  /// Compact stand-in for an unconstrained set: a very large ball that
  /// leaves small-scale dynamics unaffected.
  static ConstraintSet large_ball(double scale) {
    return frobenius_ball(std::max(10.0 * scale, 1e3));
  }

  SetKind kind() const { return kind_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  double radius() const { return radius_; }

  template <typename Derived>
  typename Derived::PlainObject project(const Eigen::MatrixBase<Derived>& p) const {
    switch (kind_) {
      case SetKind::box:
        return p.cwiseMax(lo_).cwiseMin(hi_);
      case SetKind::frobenius_ball: {
        const double n = p.norm();
        if (n <= radius_) return p;
        return p * (radius_ / n);
      }
    }
    return p;
  }

  template <typename Derived>
  bool contains(const Eigen::MatrixBase<Derived>& p, double tol = 1e-12) const {
    switch (kind_) {
      case SetKind::box:
        return (p.array() >= lo_ - tol).all() && (p.array() <= hi_ + tol).all();
      case SetKind::frobenius_ball:
        return p.norm() <= radius_ * (1.0 + tol) + tol;
    }
    return false;
  }

  /// Hard upper bound on the norm of any member.
  double norm_bound(Index numel) const {
    switch (kind_) {
      case SetKind::box:
        return std::sqrt(static_cast<double>(numel)) * std::max(std::abs(lo_), std::abs(hi_));
      case SetKind::frobenius_ball:
        return radius_;
    }
    return std::numeric_limits<double>::infinity();
  }

 private:
  ConstraintSet() = default;
  SetKind kind_ = SetKind::frobenius_ball;
  double lo_ = 0.0, hi_ = 0.0, radius_ = 0.0;
};

}  // namespace stackstep
