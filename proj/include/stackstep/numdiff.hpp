#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>

#include "stackstep/core.hpp"

namespace stackstep {

/// Central-difference gradient of a scalar function of a vector.
inline Vec fd_grad(const std::function<double(const Vec&)>& f, const Vec& x,
                   double h = 1e-5) {
  if (h <= 0.0) throw std::invalid_argument("fd_grad: h must be positive");
  Vec g(x.size());
  Vec xp = x;
  for (Index i = 0; i < x.size(); ++i) {
    xp(i) = x(i) + h;
    const double fp = f(xp);
    xp(i) = x(i) - h;
    const double fm = f(xp);
    xp(i) = x(i);
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw std::runtime_error("fd_grad: non-finite function value at coordinate " +
                               std::to_string(i));
    g(i) = (fp - fm) / (2.0 * h);
  }
  return g;
}

/// Central-difference gradient of a scalar function of a matrix, entry-wise.
inline Mat fd_grad_mat(const std::function<double(const Mat&)>& f, const Mat& x,
                       double h = 1e-5) {
  if (h <= 0.0) throw std::invalid_argument("fd_grad_mat: h must be positive");
  Mat g(x.rows(), x.cols());
  Mat xp = x;
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = 0; j < x.cols(); ++j) {
      xp(i, j) = x(i, j) + h;
      const double fp = f(xp);
      xp(i, j) = x(i, j) - h;
      const double fm = f(xp);
      xp(i, j) = x(i, j);
      if (!std::isfinite(fp) || !std::isfinite(fm))
        throw std::runtime_error("fd_grad_mat: non-finite function value");
      g(i, j) = (fp - fm) / (2.0 * h);
    }
  }
  return g;
}

struct Hessian2d {
  Eigen::Matrix2d h;        // symmetrized second-difference matrix
  double lambda_max = 0.0;  // largest eigenvalue (closed form)
  double trace = 0.0;
  double asymmetry = 0.0;        // |h12 - h21| before symmetrization
  bool asymmetry_warning = false;  // asymmetry > 1e-4
};

/// Second differences of a scalar function of two slice coefficients,
/// evaluated at the origin of the slice.
inline Hessian2d fd_hessian_2d(const std::function<double(double, double)>& f,
                               double h = 1e-4) {
  if (h <= 0.0) throw std::invalid_argument("fd_hessian_2d: h must be positive");
  const double f00 = f(0.0, 0.0);
  const double h11 = (f(h, 0.0) - 2.0 * f00 + f(-h, 0.0)) / (h * h);
  const double h22 = (f(0.0, h) - 2.0 * f00 + f(0.0, -h)) / (h * h);
  // Two one-sided cross estimates; their mean is the symmetrized entry and
  // their spread measures stencil inconsistency (kinks, noise).
  const double h12_fwd = (f(h, h) - f(h, 0.0) - f(0.0, h) + f00) / (h * h);
  const double h12_bwd = (f(-h, -h) - f(-h, 0.0) - f(0.0, -h) + f00) / (h * h);
  const double h12 = 0.5 * (h12_fwd + h12_bwd);

  Hessian2d out;
  out.h << h11, h12, h12, h22;
  out.asymmetry = std::abs(h12_fwd - h12_bwd);
  out.asymmetry_warning = out.asymmetry > 1e-4;
  if (!out.h.allFinite())
    throw std::runtime_error("fd_hessian_2d: non-finite second difference");
  out.trace = h11 + h22;
  const double mean = 0.5 * (h11 + h22);
  const double disc = std::sqrt(0.25 * (h11 - h22) * (h11 - h22) + h12 * h12);
  out.lambda_max = mean + disc;
  return out;
}

}  // namespace stackstep
