#pragma once

#include <Eigen/Cholesky>
#include <stdexcept>

#include "stackstep/core.hpp"

namespace stackstep {

/// Dense product with an explicit dimension check.
inline Mat matmul(const Mat& a, const Mat& b) {
  if (a.cols() != b.rows())
    throw std::invalid_argument("matmul: inner dimensions disagree (" +
                                std::to_string(a.cols()) + " vs " +
                                std::to_string(b.rows()) + ")");
  return a * b;
}

/// Solve a*x = b for symmetric positive definite a via Cholesky.
inline Vec solve_spd(const Mat& a, const Vec& b) {
  if (a.rows() != a.cols()) throw std::invalid_argument("solve_spd: matrix not square");
  if (a.rows() != b.size()) throw std::invalid_argument("solve_spd: rhs size mismatch");
  Eigen::LLT<Mat> llt(a);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("solve_spd: Cholesky factorization failed, matrix not SPD");
  return llt.solve(b);
}

inline Mat solve_spd(const Mat& a, const Mat& b) {
  if (a.rows() != a.cols()) throw std::invalid_argument("solve_spd: matrix not square");
  if (a.rows() != b.rows()) throw std::invalid_argument("solve_spd: rhs size mismatch");
  Eigen::LLT<Mat> llt(a);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("solve_spd: Cholesky factorization failed, matrix not SPD");
  return llt.solve(b);
}

}  // namespace stackstep
