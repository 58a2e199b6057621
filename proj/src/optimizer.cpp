#include "stackstep/optimizer.hpp"

#include <cmath>
#include <stdexcept>

#include "stackstep/stackelberg.hpp"

namespace stackstep {

namespace {

void check_finite_update(const Mat& M, const Vec& w, long k) {
  if (!M.allFinite() || !w.allFinite())
    throw std::runtime_error("non-finite iterate at iteration " + std::to_string(k));
}

void apply_projected_step(OptimizerState& state, const StochasticObjective& obj,
                          const Mat& gm, const Vec& gw, double alpha, double beta) {
  check_finite_update(gm, gw, state.k);
  state.params.M = obj.body_set().project(state.params.M - alpha * gm);
  state.params.w = obj.head_set().project(state.params.w - beta * gw);
  check_finite_update(state.params.M, state.params.w, state.k);
  ++state.k;
}

}  // namespace

OptimizerState make_state(const StochasticObjective& obj, LayeredParams init) {
  OptimizerState s;
  s.params.M = obj.body_set().project(init.M);
  s.params.w = obj.head_set().project(init.w);
  s.v_body = Mat::Zero(obj.body_rows(), obj.body_cols());
  s.v_head = Vec::Zero(obj.body_cols());
  return s;
}

void step_two_timescale(OptimizerState& state, const StochasticObjective& obj,
                        const StepSchedule& sched, Index batch_size, Rng& rng) {
  // One sample, both blocks, pre-update iterate.
  const auto [gm, gw] = obj.sample_grads(state.params.M, state.params.w, batch_size, rng);
  apply_projected_step(state, obj, gm, gw, sched.alpha(state.k), sched.beta(state.k));
}

void step_uniform(OptimizerState& state, const StochasticObjective& obj, double lr,
                  Index batch_size, Rng& rng) {
  const auto [gm, gw] = obj.sample_grads(state.params.M, state.params.w, batch_size, rng);
  apply_projected_step(state, obj, gm, gw, lr, lr);
}

void step_rmsprop(OptimizerState& state, const StochasticObjective& obj,
                  const RmspropOptions& opt, Index batch_size, Rng& rng) {
  const auto [gm, gw] = obj.sample_grads(state.params.M, state.params.w, batch_size, rng);
  check_finite_update(gm, gw, state.k);
  state.v_body = opt.gamma * state.v_body + (1.0 - opt.gamma) * gm.cwiseProduct(gm);
  state.v_head = opt.gamma * state.v_head + (1.0 - opt.gamma) * gw.cwiseProduct(gw);
  const Mat scaled_m = (gm.array() / (state.v_body.array().sqrt() + opt.epsilon)).matrix();
  const Vec scaled_w = (gw.array() / (state.v_head.array().sqrt() + opt.epsilon)).matrix();
  apply_projected_step(state, obj, scaled_m, scaled_w, opt.lr_body, opt.lr_head);
}

RunResult run(const StochasticObjective& obj, const RunOptions& opt, LayeredParams init,
              Rng& rng) {
  if (opt.iters < 0) throw std::invalid_argument("run: iters must be >= 0");
  if (opt.eval_period < 1) throw std::invalid_argument("run: eval_period must be >= 1");

  OptimizerState state = make_state(obj, std::move(init));

  RunResult out;
  out.trace.columns = {"k", "loss", "phi", "w_track", "stationarity", "alpha", "beta"};
  out.trace.meta["seed"] = rng.seed();
  out.trace.meta["schedule"] = opt.sched.kind_name();
  out.trace.meta["alpha0"] = opt.sched.alpha0;
  out.trace.meta["beta0"] = opt.sched.beta0;
  out.trace.meta["h"] = opt.sched.h;
  out.trace.meta["rule"] = opt.rule == UpdateRule::two_timescale ? "two_timescale"
                           : opt.rule == UpdateRule::uniform     ? "uniform"
                                                                 : "rmsprop";
  out.trace.meta["problem"] = opt.problem_id;
  out.trace.meta["iters"] = opt.iters;
  out.trace.meta["batch_size"] = opt.batch_size;
  out.trace.meta["eval_period"] = opt.eval_period;
  out.trace.meta["rho_hat"] = opt.rho_hat;
  // Gradient scaling conventions of the shipped instances.
  out.trace.meta["gradient_convention"] =
      "regression: sum-form objective with N/|B| minibatch scaling; "
      "classification: mean-form objective with subsampled means";

  Vec warm;  // best-response warm start across evaluation points
  bool have_warm = false;
  auto evaluate = [&]() {
    const double loss = obj.loss(state.params.M, state.params.w);
    double phi_val = std::numeric_limits<double>::quiet_NaN();
    double w_track = std::numeric_limits<double>::quiet_NaN();
    double stat = std::numeric_limits<double>::quiet_NaN();
    if (opt.eval_phi) {
      const BestResponse br = best_response(obj, state.params.M, opt.inner_tol,
                                            have_warm ? &warm : nullptr);
      warm = br.w_star;
      have_warm = true;
      phi_val = obj.loss(state.params.M, br.w_star);
      w_track = (state.params.w - br.w_star).norm();
    }
    if (opt.eval_stationarity) {
      const MoreauProbe probe =
          moreau_prox(obj, state.params.M, opt.rho_hat, opt.prox_tol);
      stat = probe.envelope_grad_norm * probe.envelope_grad_norm;
    }
    out.trace.add_row({static_cast<double>(state.k), loss, phi_val, w_track, stat,
                       opt.sched.alpha(state.k), opt.sched.beta(state.k)});
  };

  evaluate();  // initial row
  for (long k = 0; k < opt.iters; ++k) {
    switch (opt.rule) {
      case UpdateRule::two_timescale:
        step_two_timescale(state, obj, opt.sched, opt.batch_size, rng);
        break;
      case UpdateRule::uniform:
        step_uniform(state, obj, opt.sched.alpha0, opt.batch_size, rng);
        break;
      case UpdateRule::rmsprop:
        step_rmsprop(state, obj, opt.rms, opt.batch_size, rng);
        break;
    }
    if (state.k % opt.eval_period == 0 || state.k == opt.iters) evaluate();
  }
  out.final_params = state.params;
  return out;
}

}  // namespace stackstep
