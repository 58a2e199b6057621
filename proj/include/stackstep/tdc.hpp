#pragma once

#include "stackstep/activation.hpp"
#include "stackstep/core.hpp"
#include "stackstep/mdp.hpp"
#include "stackstep/schedule.hpp"
#include "stackstep/trace.hpp"

namespace stackstep {

/// Two-layer value-function approximator over raw state features:
///   psi_M(s) = act(M^T psi(s)),  V_{M,w}(s) = psi_M(s)^T w.
struct ValueFeatures {
  Mat psi;         // |S| x m raw state features, one row per state
  Activation act;  // elementwise, must be smooth for gradient work
  Mat M;           // m x n body
  Vec w;           // n head
};

/// |S| x n matrix of learned features: row s is psi_M(s)^T.
Mat feature_matrix(const ValueFeatures& feat);

/// Learned feature vector psi_M(s) for one state.
Vec state_features(const ValueFeatures& feat, Index s);

/// d/dM of psi_M(s)^T v for the two-layer form: psi(s) (v .* act'(M^T psi(s)))^T.
Mat feature_grad_M(const ValueFeatures& feat, Index s, const Vec& v);

/// Exact second moments under the stationary distribution:
///   C = E[psi_M(s) psi_M(s)^T],  b = E[delta psi_M(s)].
struct TDCMoments {
  Mat C;       // n x n
  Vec b;       // n
  Mat cross;   // E[psi_M(s') psi_M(s)^T], n x n
  Vec d_pi;    // stationary distribution used for the expectations
};
TDCMoments tdc_moments(const TabularMDP& mdp, const ValueFeatures& feat);

/// MSPBE: ||Psi_M w - Pi_M T^pi Psi_M w||^2_{d_pi}, computed both as the
/// weighted projected Bellman residual and as b^T C^{-1} b; the two forms
/// must agree to 1e-9 (relative). Throws if C(M) is singular.
double mspbe(const TabularMDP& mdp, const ValueFeatures& feat);

/// Auxiliary fixed point mu = C(M)^{-1} b(M, w).
Vec mu_fixed_point(const TabularMDP& mdp, const ValueFeatures& feat);

/// Exact population gradients of the MSPBE, given an auxiliary vector mu
/// (exact or a running estimate). Requires a smooth activation.
Mat tdc_grad_M(const TabularMDP& mdp, const ValueFeatures& feat, const Vec& mu);
Vec tdc_grad_w(const TabularMDP& mdp, const ValueFeatures& feat, const Vec& mu);

/// Single-loop three-variable iterate.
struct TDCState {
  Mat M;
  Vec w;
  Vec mu;
  long k = 0;
};

/// Per-sample increment directions (step sizes not applied). The expectation
/// of each sampled increment over (s ~ d_pi, a ~ pi, s' ~ P) equals the
/// output of expected_increments at the same state.
struct TDCIncrements {
  Mat dM;   // 2 [ gamma (psi_M(s)^T mu) dM(psi_M(s')^T w) - (psi_M(s)^T mu) dM(psi_M(s)^T w)
            //     + (delta - psi_M(s)^T mu) dM(psi_M(s)^T mu) ]
  Vec dw;   // 2 [ gamma psi_M(s') psi_M(s)^T mu - delta psi_M(s) ]
  Vec dmu;  // psi_M(s) psi_M(s)^T mu - delta psi_M(s)
};

/// Increment directions for one concrete transition (s, a, s').
TDCIncrements tdc_increments_at(const TDCState& state, const TabularMDP& mdp, const Mat& psi,
                                const Activation& act, Index s, Index a, Index s_next);

/// Exact expectation of the sampled increments: dM = grad_M f, dw = grad_w f
/// (both with the supplied mu), dmu = C mu - b.
TDCIncrements expected_increments(const TDCState& state, const TabularMDP& mdp, const Mat& psi,
                                  const Activation& act);

/// One Algorithm-1 step on a given transition: all three variables move from
/// the pre-update state using the same sample, with rates
/// (alpha_k, beta_k, zeta_k) read from the schedule.
TDCState tdc_apply(const TDCState& state, const TabularMDP& mdp, const Mat& psi,
                   const Activation& act, const StepSchedule& sched, Index s, Index a,
                   Index s_next);

/// One Algorithm-1 step with (s, a, s') sampled i.i.d. from d_pi, pi, P.
/// d_pi is passed in so long runs do not recompute the stationary
/// distribution every step.
TDCState tdc_step(const TDCState& state, const TabularMDP& mdp, const Mat& psi,
                  const Activation& act, const StepSchedule& sched, const Vec& d_pi, Rng& rng);

struct TDCRunOptions {
  long iters = 10000;
  long eval_period = 100;
  double lambda_a_floor = 1e-8;  // min eigenvalue of C(M) required at evals
  bool abort_on_floor = true;
};

/// Algorithm 1 with exact-expectation diagnostics. Trace columns:
/// k,mspbe,mu_err,value_err,alpha,beta,zeta where mu_err = ||mu_k - mu(M_k,w_k)||
/// and value_err = ||V_{M,w} - V^pi||_{d_pi}.
CsvTrace run_tdc(const TabularMDP& mdp, const ValueFeatures& feat_init, const StepSchedule& sched,
                 const TDCRunOptions& opt, Rng& rng);

/// Linear-FA TD fixed point for a fixed feature matrix Phi (|S| x n):
/// solves Phi^T D (I - gamma P_pi) Phi w = Phi^T D r_pi.
Vec solve_projected_bellman(const TabularMDP& mdp, const Mat& features);

}  // namespace stackstep
