#include <algorithm>
#include <cmath>

#include "stackstep/problems.hpp"
#include "stackstep/stackelberg.hpp"

namespace stackstep {

namespace {

Mat sample_body(const StochasticObjective& obj, Rng& rng) {
  return obj.body_set().project(rng.normal_mat(obj.body_rows(), obj.body_cols()));
}

Vec sample_head(const StochasticObjective& obj, Rng& rng) {
  return obj.head_set().project(rng.normal_vec(obj.body_cols()));
}

}  // namespace

ProblemConstants estimate_constants(const StochasticObjective& obj, int n_samples, Rng& rng) {
  if (!std::isfinite(obj.body_set().norm_bound(obj.body_rows() * obj.body_cols())) ||
      !std::isfinite(obj.head_set().norm_bound(obj.body_cols())))
    throw std::invalid_argument("estimate_constants: constraint sets must be bounded");

  ProblemConstants c;
  c.empirical = true;
  c.samples = n_samples;

  // Lower-level strong convexity: the analytic floor when the instance has
  // one (a guaranteed bound), otherwise the smallest curvature of f(M, .)
  // observed along sampled segments.
  const int pairs = std::max(8, n_samples / 4);
  if (auto floor = obj.analytic_lambda()) {
    c.lambda = *floor;
  } else {
    double lambda_est = std::numeric_limits<double>::infinity();
    for (int i = 0; i < pairs; ++i) {
      const Mat M = sample_body(obj, rng);
      const Vec w1 = sample_head(obj, rng);
      const Vec w2 = sample_head(obj, rng);
      const double dist = (w1 - w2).norm();
      if (dist < 1e-10) continue;
      const double curv = (obj.grad_w(M, w1) - obj.grad_w(M, w2)).dot(w1 - w2) / (dist * dist);
      lambda_est = std::min(lambda_est, curv);
    }
    c.lambda = std::isfinite(lambda_est) ? std::max(lambda_est, 0.0) : 0.0;
  }

  // Gradient Lipschitz constant over sampled pairs: grad_w in both blocks,
  // G_M in the head.
  double L = 0.0;
  for (int i = 0; i < pairs; ++i) {
    const Mat M1 = sample_body(obj, rng);
    const Mat M2 = sample_body(obj, rng);
    const Vec w1 = sample_head(obj, rng);
    const Vec w2 = sample_head(obj, rng);
    const double dm = (M1 - M2).norm();
    const double dw = (w1 - w2).norm();
    if (dm > 1e-10)
      L = std::max(L, (obj.grad_w(M1, w1) - obj.grad_w(M2, w1)).norm() / dm);
    if (dw > 1e-10) {
      L = std::max(L, (obj.grad_w(M1, w1) - obj.grad_w(M1, w2)).norm() / dw);
      L = std::max(L, (obj.subgrad_M(M1, w1) - obj.subgrad_M(M1, w2)).norm() / dw);
    }
  }
  c.L = L;

  // Gradient-noise bound: spread of singleton-batch gradients around the
  // full-batch values at sampled points.
  double sigma2 = 0.0;
  const Index N = obj.data_size();
  if (N > 1) {
    const int points = std::max(4, n_samples / 16);
    const int draws = 16;
    for (int i = 0; i < points; ++i) {
      const Mat M = sample_body(obj, rng);
      const Vec w = sample_head(obj, rng);
      const Mat gm_full = obj.subgrad_M(M, w);
      const Vec gw_full = obj.grad_w(M, w);
      double s_m = 0.0, s_w = 0.0;
      for (int j = 0; j < draws; ++j) {
        auto [gm, gw] = obj.sample_grads(M, w, 1, rng);
        s_m += (gm - gm_full).squaredNorm();
        s_w += (gw - gw_full).squaredNorm();
      }
      sigma2 = std::max(sigma2, std::max(s_m, s_w) / draws);
    }
  }
  c.sigma2 = sigma2;

  // Curvature of Phi along sampled segments: the most negative second
  // difference bounds the weak-convexity modulus rho, the least bounds the
  // strong-convexity modulus lambda_phi.
  double min_curv = std::numeric_limits<double>::infinity();
  const int segs = std::max(8, n_samples / 8);
  for (int i = 0; i < segs; ++i) {
    const Mat A = sample_body(obj, rng);
    const Mat B = sample_body(obj, rng);
    const double dist = (A - B).norm();
    if (dist < 1e-8) continue;
    const Mat mid = 0.5 * (A + B);
    const double second =
        4.0 * (phi(obj, A) - 2.0 * phi(obj, mid) + phi(obj, B)) / (dist * dist);
    min_curv = std::min(min_curv, second);
  }
  if (std::isfinite(min_curv)) {
    c.rho = std::max(0.0, -min_curv);
    c.lambda_phi = std::max(0.0, min_curv);
  }
  // Default Moreau parameter: twice the observed weak convexity, floored so
  // that the prox problem is well posed even when no curvature was seen.
  c.rho_hat = std::max(2.0 * c.rho, 0.1);
  return c;
}

}  // namespace stackstep
