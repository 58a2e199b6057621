#pragma once

#include "stackstep/objective.hpp"
#include "stackstep/problems.hpp"

namespace stackstep {

enum class BestResponseMethod { closed_form, inner_gd };

struct BestResponse {
  Vec w_star;
  BestResponseMethod method = BestResponseMethod::inner_gd;
  int inner_iters = 0;
  double residual = 0.0;  // projected-gradient norm of f(M, .) at w_star
};

/// w*(M) = argmin over the head set of f(M, .). Uses the instance's closed
/// form when the unconstrained solution is feasible, otherwise projected
/// gradient descent with backtracking. An optional warm start seeds the
/// iterative path.
BestResponse best_response(const StochasticObjective& obj, const Mat& M, double tol = 1e-9,
                           const Vec* warm_start = nullptr, int max_iters = 100000);

/// Reduced objective Phi(M) = f(M, w*(M)).
double phi(const StochasticObjective& obj, const Mat& M, double tol = 1e-9,
           const Vec* warm_start = nullptr);

/// Phi for the ridge regression instance through the Woodbury identity:
///   Phi(M) = Y^T (I + (1/c) Phi_M Phi_M^T)^{-1} Y,  c = lambda/2,
/// where Phi_M = phi(X M). Equals phi() on instances where w*(M) is interior.
double phi_woodbury(const RegressionDataset& d, const Activation& act, const Mat& M);

/// An element of the Clarke subdifferential of Phi at M: the full-batch body
/// subgradient evaluated at (M, w*(M)).
Mat phi_subgrad(const StochasticObjective& obj, const Mat& M, double tol = 1e-9,
                const Vec* warm_start = nullptr);

struct MoreauProbe {
  double rho_hat = 0.0;
  Mat m_hat;                      // prox point
  double envelope_value = 0.0;    // Phi(m_hat) + (rho_hat/2) ||M - m_hat||^2
  double envelope_grad_norm = 0.0;  // rho_hat * ||M - m_hat||
  double residual = 0.0;          // projected-gradient norm of the prox objective
  int iters = 0;
};

/// Solve the prox problem
///   min over the body set of  Phi(M') + (rho_hat/2) ||M - M'||^2
/// by projected (sub)gradient descent with backtracking, falling back to
/// diminishing steps near kinks of a nonsmooth Phi. The returned residual is
/// attached rather than raised unless the solver makes no progress at all.
MoreauProbe moreau_prox(const StochasticObjective& obj, const Mat& M, double rho_hat,
                        double tol = 1e-7, int max_iters = 2000);

/// Near-stationarity surrogate ||grad of the Moreau envelope||^2
/// = rho_hat^2 ||M - m_hat||^2.
double stationarity(const StochasticObjective& obj, const Mat& M, double rho_hat,
                    double tol = 1e-7);

}  // namespace stackstep
