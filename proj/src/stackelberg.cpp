#include "stackstep/stackelberg.hpp"

#include <cmath>
#include <stdexcept>

#include "stackstep/linalg.hpp"

namespace stackstep {

namespace {

/// Projected gradient descent with backtracking on a strongly convex
/// function of the head vector. Returns the iterate and fills residual/iters.
struct InnerResult {
  Vec x;
  double residual;
  int iters;
};

InnerResult projected_gd_w(const StochasticObjective& obj, const Mat& M, Vec w0,
                           double tol, int max_iters) {
  const ConstraintSet& set = obj.head_set();
  Vec w = set.project(w0);
  double step = 1.0;
  double fw = obj.loss(M, w);
  int it = 0;
  double residual = std::numeric_limits<double>::infinity();
  for (; it < max_iters; ++it) {
    const Vec g = obj.grad_w(M, w);
    bool moved = false;
    for (int bt = 0; bt < 60; ++bt) {
      const Vec cand = set.project(w - step * g);
      const Vec diff = cand - w;
      residual = diff.norm() / step;
      if (residual <= tol) return {w, residual, it};
      const double fc = obj.loss(M, cand);
      // Sufficient decrease on the projected step.
      if (fc <= fw + g.dot(diff) + 0.5 / step * diff.squaredNorm()) {
        w = cand;
        fw = fc;
        step *= 1.5;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;  // step collapsed
  }
  // Final residual with the last step length.
  const Vec g = obj.grad_w(M, w);
  const Vec cand = set.project(w - step * g);
  residual = (w - cand).norm() / step;
  return {w, residual, it};
}

}  // namespace

BestResponse best_response(const StochasticObjective& obj, const Mat& M, double tol,
                           const Vec* warm_start, int max_iters) {
  BestResponse br;
  if (auto closed = obj.closed_form_best_response(M)) {
    if (obj.head_set().contains(*closed)) {
      br.w_star = *closed;
      br.method = BestResponseMethod::closed_form;
      br.residual = 0.0;
      return br;
    }
    // Unconstrained solution infeasible: seed the iterative path with its
    // projection.
    Vec w0 = obj.head_set().project(*closed);
    auto res = projected_gd_w(obj, M, std::move(w0), tol, max_iters);
    br.w_star = std::move(res.x);
    br.method = BestResponseMethod::inner_gd;
    br.inner_iters = res.iters;
    br.residual = res.residual;
  } else {
    Vec w0 = warm_start != nullptr ? *warm_start : Vec::Zero(obj.body_cols());
    auto res = projected_gd_w(obj, M, std::move(w0), tol, max_iters);
    br.w_star = std::move(res.x);
    br.method = BestResponseMethod::inner_gd;
    br.inner_iters = res.iters;
    br.residual = res.residual;
  }
  if (br.residual > std::max(tol, 1e-12) * 1e3 + 1e-9)
    throw std::runtime_error("best_response: inner solver did not reach tolerance, residual = " +
                             std::to_string(br.residual));
  return br;
}

double phi(const StochasticObjective& obj, const Mat& M, double tol, const Vec* warm_start) {
  const BestResponse br = best_response(obj, M, tol, warm_start);
  return obj.loss(M, br.w_star);
}

double phi_woodbury(const RegressionDataset& d, const Activation& act, const Mat& M) {
  if (!(d.lambda > 0.0)) throw std::invalid_argument("phi_woodbury: lambda must be > 0");
  const double ridge = 0.5 * d.lambda;  // effective ridge weight of (lambda/2)||w||^2
  const Mat feats = act.apply(d.X * M);
  Mat K = feats * feats.transpose() / ridge;
  K.diagonal().array() += 1.0;
  return d.Y.dot(solve_spd(K, d.Y)) * 1.0;
}

Mat phi_subgrad(const StochasticObjective& obj, const Mat& M, double tol,
                const Vec* warm_start) {
  const BestResponse br = best_response(obj, M, tol, warm_start);
  return obj.subgrad_M(M, br.w_star);
}

MoreauProbe moreau_prox(const StochasticObjective& obj, const Mat& M, double rho_hat,
                        double tol, int max_iters) {
  if (!(rho_hat > 0.0)) throw std::invalid_argument("moreau_prox: rho_hat must be > 0");
  const ConstraintSet& set = obj.body_set();
  const double inner_tol = std::min(tol * 1e-2, 1e-9);

  Vec warm = best_response(obj, M, inner_tol).w_star;
  auto prox_obj = [&](const Mat& Mp) {
    return phi(obj, Mp, inner_tol, &warm) + 0.5 * rho_hat * (Mp - M).squaredNorm();
  };
  auto prox_grad = [&](const Mat& Mp) -> Mat {
    const BestResponse br = best_response(obj, Mp, inner_tol, &warm);
    warm = br.w_star;
    return obj.subgrad_M(Mp, br.w_star) + rho_hat * (Mp - M);
  };

  Mat cur = set.project(M);
  double fcur = prox_obj(cur);
  double step = 1.0 / rho_hat;
  double residual = std::numeric_limits<double>::infinity();
  int it = 0;
  bool backtracking = true;
  for (; it < max_iters; ++it) {
    const Mat g = prox_grad(cur);
    if (backtracking) {
      bool moved = false;
      for (int bt = 0; bt < 60; ++bt) {
        const Mat cand = set.project(cur - step * g);
        const Mat diff = cand - cur;
        residual = diff.norm() / step;
        if (residual <= tol) {
          MoreauProbe probe;
          probe.rho_hat = rho_hat;
          probe.m_hat = cur;
          probe.envelope_value = prox_obj(cur);
          probe.envelope_grad_norm = rho_hat * (M - cur).norm();
          probe.residual = residual;
          probe.iters = it;
          return probe;
        }
        const double fc = prox_obj(cand);
        if (fc <= fcur + (g.array() * diff.array()).sum() + 0.5 / step * diff.squaredNorm()) {
          cur = cand;
          fcur = fc;
          step = std::min(step * 1.5, 10.0 / rho_hat);
          moved = true;
          break;
        }
        step *= 0.5;
      }
      if (!moved) backtracking = false;  // likely at a kink; switch to diminishing steps
    } else {
      const double gs = g.norm();
      if (gs == 0.0) break;
      const double s = (1.0 / rho_hat) / (10.0 + std::sqrt(static_cast<double>(it)));
      const Mat cand = set.project(cur - s * g);
      const double fc = prox_obj(cand);
      residual = (cur - cand).norm() / s;
      if (fc < fcur) {
        cur = cand;
        fcur = fc;
      }
      if (residual <= tol) break;
    }
  }
  if (!std::isfinite(fcur))
    throw std::runtime_error("moreau_prox: prox objective became non-finite, residual = " +
                             std::to_string(residual));
  MoreauProbe probe;
  probe.rho_hat = rho_hat;
  probe.m_hat = cur;
  probe.envelope_value = fcur;
  probe.envelope_grad_norm = rho_hat * (M - cur).norm();
  probe.residual = residual;
  probe.iters = it;
  return probe;
}

double stationarity(const StochasticObjective& obj, const Mat& M, double rho_hat, double tol) {
  const MoreauProbe probe = moreau_prox(obj, M, rho_hat, tol);
  return probe.envelope_grad_norm * probe.envelope_grad_norm;
}

}  // namespace stackstep
