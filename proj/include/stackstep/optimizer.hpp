#pragma once

#include "stackstep/objective.hpp"
#include "stackstep/schedule.hpp"
#include "stackstep/trace.hpp"

namespace stackstep {

enum class UpdateRule { two_timescale, uniform, rmsprop };

struct OptimizerState {
  LayeredParams params;
  long k = 0;
  // RMSProp second-moment accumulators (rmsprop rule only).
  Mat v_body;
  Vec v_head;
};

struct RmspropOptions {
  double lr_body = 1e-3;
  double lr_head = 1e-3;
  double gamma = 0.99;
  double epsilon = 1e-8;
};

OptimizerState make_state(const StochasticObjective& obj, LayeredParams init);

/// One two-time-scale projected step of the simultaneous update: both blocks
/// read the pre-update (M_k, w_k) and the same minibatch sample.
void step_two_timescale(OptimizerState& state, const StochasticObjective& obj,
                        const StepSchedule& sched, Index batch_size, Rng& rng);

/// Uniform-rate baseline: the same step with alpha_k = beta_k = lr.
void step_uniform(OptimizerState& state, const StochasticObjective& obj, double lr,
                  Index batch_size, Rng& rng);

/// Constant-rate RMSProp with separate body and head rates.
void step_rmsprop(OptimizerState& state, const StochasticObjective& obj,
                  const RmspropOptions& opt, Index batch_size, Rng& rng);

struct RunOptions {
  UpdateRule rule = UpdateRule::two_timescale;
  StepSchedule sched;          // two_timescale / uniform (alpha0 is the uniform rate)
  RmspropOptions rms;          // rmsprop only
  long iters = 1000;
  Index batch_size = 1;
  long eval_period = 10;
  bool eval_phi = true;          // Phi and best-response tracking error
  bool eval_stationarity = false;  // Moreau surrogate (prox solves are costly)
  double rho_hat = 1.0;
  double inner_tol = 1e-9;
  double prox_tol = 1e-7;
  std::string problem_id = "unnamed";
};

struct RunResult {
  CsvTrace trace;  // columns: k,loss,phi,w_track,stationarity,alpha,beta
  LayeredParams final_params;
};

/// Deterministic training loop: evaluation rows every eval_period iterations
/// plus the initial row. Identical (seed, options) give byte-identical
/// traces.
RunResult run(const StochasticObjective& obj, const RunOptions& opt, LayeredParams init,
              Rng& rng);

}  // namespace stackstep
