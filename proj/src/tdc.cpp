#include "stackstep/tdc.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

#include "stackstep/linalg.hpp"

namespace stackstep {

namespace {

void require_smooth(const Activation& act, const char* where) {
  if (!act.smooth())
    throw std::invalid_argument(std::string(where) + ": activation '" + act.name() +
                                "' is not differentiable and smooth; value-function gradients "
                                "need a smooth activation");
}

Index sample_categorical(const Vec& probs, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (Index i = 0; i < probs.size(); ++i) {
    acc += probs(i);
    if (u < acc) return i;
  }
  return probs.size() - 1;
}

}  // namespace

Mat feature_matrix(const ValueFeatures& feat) { return feat.act.apply(Mat(feat.psi * feat.M)); }

Vec state_features(const ValueFeatures& feat, Index s) {
  return feat.act.apply(Vec(feat.M.transpose() * feat.psi.row(s).transpose()));
}

Mat feature_grad_M(const ValueFeatures& feat, Index s, const Vec& v) {
  const Vec pre = feat.M.transpose() * feat.psi.row(s).transpose();
  const Vec gate = feat.act.subgrad(pre);
  return feat.psi.row(s).transpose() * (v.cwiseProduct(gate)).transpose();
}

TDCMoments tdc_moments(const TabularMDP& mdp, const ValueFeatures& feat) {
  TDCMoments mom;
  mom.d_pi = stationary_dist(mdp);
  const Mat psi_m = feature_matrix(feat);        // |S| x n
  const Mat p_pi = mdp.chain();                  // |S| x |S|
  const Mat d = mom.d_pi.asDiagonal();           // |S| x |S|
  mom.C = psi_m.transpose() * d * psi_m;
  mom.cross = psi_m.transpose() * p_pi.transpose() * d * psi_m;
  // Expected TD error per state: delta_bar = r_pi + gamma P_pi V - V.
  const Vec v = psi_m * feat.w;
  const Vec delta_bar = mdp.reward_vector() + mdp.gamma * (p_pi * v) - v;
  mom.b = psi_m.transpose() * d.diagonal().cwiseProduct(delta_bar).eval();
  return mom;
}

double mspbe(const TabularMDP& mdp, const ValueFeatures& feat) {
  const TDCMoments mom = tdc_moments(mdp, feat);
  Vec mu;
  try {
    mu = solve_spd(mom.C, mom.b);
  } catch (const std::runtime_error&) {
    throw std::runtime_error(
        "mspbe: C(M) = E[psi_M psi_M^T] is singular; the MSPBE needs "
        "A(M) >= lambda_A I > 0 (non-degenerate learned features)");
  }
  const double quad_form = mom.b.dot(mu);

  // Independent computation as the d_pi-weighted projected Bellman residual
  // ||Psi_M w - Pi_M T^pi Psi_M w||^2_{d_pi} with Pi_M = Psi_M C^{-1} Psi_M^T D.
  const Mat psi_m = feature_matrix(feat);
  const Mat p_pi = mdp.chain();
  const Vec v = psi_m * feat.w;
  const Vec delta_bar = mdp.reward_vector() + mdp.gamma * (p_pi * v) - v;
  // v - Pi T v = -Pi delta_bar because Pi v = v for v in the feature span.
  const Vec proj_residual = psi_m * solve_spd(mom.C, Vec(psi_m.transpose() *
                                                         mom.d_pi.cwiseProduct(delta_bar).eval()));
  const double projected_form = proj_residual.dot(mom.d_pi.cwiseProduct(proj_residual));

  const double scale = std::max({1.0, std::abs(quad_form), std::abs(projected_form)});
  if (std::abs(quad_form - projected_form) > 1e-9 * scale)
    throw std::runtime_error("mspbe: projected-residual and b^T C^{-1} b forms disagree");
  return quad_form;
}

Vec mu_fixed_point(const TabularMDP& mdp, const ValueFeatures& feat) {
  const TDCMoments mom = tdc_moments(mdp, feat);
  try {
    return solve_spd(mom.C, mom.b);
  } catch (const std::runtime_error&) {
    throw std::runtime_error(
        "mu_fixed_point: C(M) is singular; the fixed-point equation C mu = b "
        "needs A(M) >= lambda_A I > 0");
  }
}

Mat tdc_grad_M(const TabularMDP& mdp, const ValueFeatures& feat, const Vec& mu) {
  require_smooth(feat.act, "tdc_grad_M");
  const Vec d_pi = stationary_dist(mdp);
  const Mat psi_m = feature_matrix(feat);
  const Index n_states = mdp.n_states;
  Mat grad = Mat::Zero(feat.M.rows(), feat.M.cols());
  for (Index s = 0; s < n_states; ++s) {
    const Vec fs = psi_m.row(s).transpose();
    const double corr = fs.dot(mu);
    const Mat grad_vs_w = feature_grad_M(feat, s, feat.w);
    const Mat grad_vs_mu = feature_grad_M(feat, s, mu);
    for (Index a = 0; a < mdp.n_actions; ++a) {
      const double pa = d_pi(s) * mdp.policy(s, a);
      if (pa == 0.0) continue;
      for (Index sp = 0; sp < n_states; ++sp) {
        const double p = pa * mdp.transition[static_cast<std::size_t>(a)](s, sp);
        if (p == 0.0) continue;
        const double delta =
            mdp.reward(s, a) + mdp.gamma * psi_m.row(sp).dot(feat.w) - fs.dot(feat.w);
        grad += p * 2.0 *
                (mdp.gamma * corr * feature_grad_M(feat, sp, feat.w) - corr * grad_vs_w +
                 (delta - corr) * grad_vs_mu);
      }
    }
  }
  return grad;
}

Vec tdc_grad_w(const TabularMDP& mdp, const ValueFeatures& feat, const Vec& mu) {
  require_smooth(feat.act, "tdc_grad_w");
  const TDCMoments mom = tdc_moments(mdp, feat);
  return -2.0 * mom.b + 2.0 * mdp.gamma * (mom.cross * mu);
}

TDCIncrements tdc_increments_at(const TDCState& state, const TabularMDP& mdp, const Mat& psi,
                                const Activation& act, Index s, Index a, Index s_next) {
  const ValueFeatures feat{psi, act, state.M, state.w};
  const Vec fs = state_features(feat, s);
  const Vec fsp = state_features(feat, s_next);
  const double delta = mdp.reward(s, a) + mdp.gamma * fsp.dot(state.w) - fs.dot(state.w);
  const double corr = fs.dot(state.mu);
  TDCIncrements inc;
  inc.dM = 2.0 * (mdp.gamma * corr * feature_grad_M(feat, s_next, state.w) -
                  corr * feature_grad_M(feat, s, state.w) +
                  (delta - corr) * feature_grad_M(feat, s, state.mu));
  inc.dw = 2.0 * (mdp.gamma * corr * fsp - delta * fs);
  inc.dmu = fs.dot(state.mu) * fs - delta * fs;
  return inc;
}

TDCIncrements expected_increments(const TDCState& state, const TabularMDP& mdp, const Mat& psi,
                                  const Activation& act) {
  const ValueFeatures feat{psi, act, state.M, state.w};
  const TDCMoments mom = tdc_moments(mdp, feat);
  TDCIncrements inc;
  inc.dM = tdc_grad_M(mdp, feat, state.mu);
  inc.dw = tdc_grad_w(mdp, feat, state.mu);
  inc.dmu = mom.C * state.mu - mom.b;
  return inc;
}

TDCState tdc_apply(const TDCState& state, const TabularMDP& mdp, const Mat& psi,
                   const Activation& act, const StepSchedule& sched, Index s, Index a,
                   Index s_next) {
  const TDCIncrements inc = tdc_increments_at(state, mdp, psi, act, s, a, s_next);
  TDCState next;
  next.M = state.M - sched.alpha(state.k) * inc.dM;
  next.w = state.w - sched.beta(state.k) * inc.dw;
  next.mu = state.mu - sched.zeta(state.k) * inc.dmu;
  next.k = state.k + 1;
  if (!next.M.allFinite() || !next.w.allFinite() || !next.mu.allFinite())
    throw std::runtime_error("tdc_apply: non-finite iterate at k = " + std::to_string(state.k));
  return next;
}

TDCState tdc_step(const TDCState& state, const TabularMDP& mdp, const Mat& psi,
                  const Activation& act, const StepSchedule& sched, const Vec& d_pi, Rng& rng) {
  const Index s = sample_categorical(d_pi, rng);
  const Index a = sample_categorical(mdp.policy.row(s).transpose(), rng);
  const Index s_next =
      sample_categorical(mdp.transition[static_cast<std::size_t>(a)].row(s).transpose(), rng);
  return tdc_apply(state, mdp, psi, act, sched, s, a, s_next);
}

CsvTrace run_tdc(const TabularMDP& mdp, const ValueFeatures& feat_init, const StepSchedule& sched,
                 const TDCRunOptions& opt, Rng& rng) {
  const Vec d_pi = stationary_dist(mdp);
  const Vec v_pi = value_function(mdp);

  CsvTrace trace;
  trace.columns = {"k", "mspbe", "mu_err", "value_err", "alpha", "beta", "zeta"};
  trace.meta["problem"] = "tdc";
  trace.meta["n_states"] = mdp.n_states;
  trace.meta["n_actions"] = mdp.n_actions;
  trace.meta["gamma"] = mdp.gamma;
  trace.meta["iters"] = opt.iters;
  trace.meta["eval_period"] = opt.eval_period;
  trace.meta["schedule"] = sched.kind_name();
  trace.meta["alpha0"] = sched.alpha0;
  trace.meta["beta0"] = sched.beta0;
  trace.meta["zeta0"] = sched.zeta0;
  trace.meta["seed"] = rng.seed();

  TDCState state{feat_init.M, feat_init.w, Vec::Zero(feat_init.M.cols()), 0};

  auto evaluate = [&](const TDCState& st) {
    const ValueFeatures feat{feat_init.psi, feat_init.act, st.M, st.w};
    const TDCMoments mom = tdc_moments(mdp, feat);
    const double lambda_min =
        Eigen::SelfAdjointEigenSolver<Mat>(mom.C).eigenvalues().minCoeff();
    if (lambda_min < opt.lambda_a_floor && opt.abort_on_floor)
      throw std::runtime_error(
          "run_tdc: min eigenvalue of C(M) fell below the lambda_A floor (" +
          std::to_string(lambda_min) + " < " + std::to_string(opt.lambda_a_floor) +
          ") at k = " + std::to_string(st.k) +
          "; the MSPBE analysis assumes A(M) >= lambda_A I");
    const double value = mspbe(mdp, feat);
    const Vec mu_star = solve_spd(mom.C, mom.b);
    const Vec v_err = feature_matrix(feat) * st.w - v_pi;
    const double value_err = std::sqrt(v_err.dot(d_pi.cwiseProduct(v_err)));
    trace.add_row({static_cast<double>(st.k), value, (st.mu - mu_star).norm(), value_err,
                   sched.alpha(st.k), sched.beta(st.k), sched.zeta(st.k)});
  };

  evaluate(state);
  for (long k = 0; k < opt.iters; ++k) {
    state = tdc_step(state, mdp, feat_init.psi, feat_init.act, sched, d_pi, rng);
    if (state.k % opt.eval_period == 0 || state.k == opt.iters) evaluate(state);
  }
  return trace;
}

Vec solve_projected_bellman(const TabularMDP& mdp, const Mat& features) {
  const Vec d_pi = stationary_dist(mdp);
  const Mat d = d_pi.asDiagonal();
  const Mat p_pi = mdp.chain();
  const Mat a = features.transpose() * d *
                (Mat::Identity(mdp.n_states, mdp.n_states) - mdp.gamma * p_pi) * features;
  const Vec b0 = features.transpose() * d * mdp.reward_vector();
  Eigen::PartialPivLU<Mat> lu(a);
  const Vec w = lu.solve(b0);
  if ((a * w - b0).norm() > 1e-8 * std::max(1.0, b0.norm()))
    throw std::runtime_error(
        "solve_projected_bellman: the TD matrix Psi^T D (I - gamma P_pi) Psi is singular");
  return w;
}

}  // namespace stackstep
