#include <doctest.h>

#include <cmath>

#include "stackstep/optimizer.hpp"
#include "stackstep/problems.hpp"

using namespace stackstep;

namespace {

LayeredParams toy_params(double m, double w) {
  LayeredParams p;
  p.M = Mat::Constant(1, 1, m);
  p.w = Vec::Constant(1, w);
  return p;
}

StepSchedule constant_sched(double alpha, double beta) {
  StepSchedule s;
  s.kind = ScheduleKind::constant;
  s.alpha0 = alpha;
  s.beta0 = beta;
  return s;
}

}  // namespace

TEST_CASE("schedules") {
  SUBCASE("thm1 exponents") {
    StepSchedule s;
    s.kind = ScheduleKind::thm1;
    s.alpha0 = 0.1;
    s.beta0 = 0.5;
    // 32^{3/5} = 8 exactly, so alpha_31 = 0.1/8.
    CHECK(s.alpha(31) == doctest::Approx(0.0125).epsilon(1e-12));
    CHECK(s.beta(31) == doctest::Approx(0.5 / std::pow(32.0, 0.4)).epsilon(1e-12));
    CHECK(s.alpha(0) == doctest::Approx(0.1));
  }

  SUBCASE("thm2 exponents and h offset") {
    StepSchedule s;
    s.kind = ScheduleKind::thm2;
    s.alpha0 = 4.0;
    s.beta0 = 1.0;
    s.tune_h();
    CHECK(s.h >= 3.0);
    CHECK(s.alpha(0) <= 1.0 + 1e-12);
    CHECK(s.alpha(10) == doctest::Approx(4.0 / (10.0 + s.h + 1.0)));
    CHECK(s.beta(10) == doctest::Approx(1.0 / std::pow(10.0 + s.h + 1.0, 2.0 / 3.0)));
  }

  SUBCASE("monotone decay and timescale separation") {
    for (ScheduleKind kind : {ScheduleKind::thm1, ScheduleKind::thm2}) {
      StepSchedule s;
      s.kind = kind;
      s.alpha0 = 0.5;
      s.beta0 = 0.9;
      double prev_ratio = s.alpha(0) / s.beta(0);
      for (long k = 1; k < 200; ++k) {
        CHECK(s.alpha(k) < s.alpha(k - 1));
        CHECK(s.beta(k) < s.beta(k - 1));
        const double ratio = s.alpha(k) / s.beta(k);
        CHECK(ratio <= prev_ratio + 1e-15);
        prev_ratio = ratio;
      }
    }
  }

  SUBCASE("validate_schedule worked conditions") {
    ProblemConstants c;
    c.lambda = 1.0;
    c.L = 1.0;
    StepSchedule s;
    s.kind = ScheduleKind::thm1;
    s.alpha0 = 0.1;
    s.beta0 = 0.5;
    const ScheduleReport rep = validate_schedule(s, c, 100);
    CHECK(rep.all_satisfied());
    // beta0 = 0.5 = min{lambda/(2L^2), 2/lambda} exactly: margin 0.
    bool found = false;
    for (const auto& cond : rep.conditions) {
      if (cond.name.find("beta0") != std::string::npos && cond.margin == 0.0) found = true;
    }
    CHECK(found);
  }

  SUBCASE("thm2 infeasibility flagged with the h remedy") {
    ProblemConstants c;
    c.lambda = 1.0;
    c.L = 1.0;
    c.lambda_phi = 0.05;  // requires alpha0 >= 160
    StepSchedule s;
    s.kind = ScheduleKind::thm2;
    s.alpha0 = 0.5;
    s.beta0 = 1.0;
    const ScheduleReport rep = validate_schedule(s, c, 100);
    CHECK(!rep.all_satisfied());
    bool mentions_h = false;
    for (const auto& cond : rep.conditions)
      if (!cond.satisfied && cond.detail.find("h") != std::string::npos) mentions_h = true;
    CHECK(mentions_h);
  }
}

TEST_CASE("two-timescale step") {
  ToyObjective obj;
  Rng rng(1);

  SUBCASE("hand-computed simultaneous step") {
    // At (M, w) = (0.5, 0.5) with alpha = beta = 0.1:
    //   grad_w  = 2(Mw - 1)M = -0.75          -> w1 = 0.575
    //   G_M     = 2(Mw - 1)w + 0.2M = -0.65   -> M1 = 0.565
    // A Gauss-Seidel sweep would evaluate G_M at w1 and land elsewhere, so
    // this equality also pins the simultaneous-update contract.
    OptimizerState state = make_state(obj, toy_params(0.5, 0.5));
    step_two_timescale(state, obj, constant_sched(0.1, 0.1), 1, rng);
    CHECK(state.params.M(0, 0) == doctest::Approx(0.565).epsilon(1e-12));
    CHECK(state.params.w(0) == doctest::Approx(0.575).epsilon(1e-12));
    CHECK(state.k == 1);
  }

  SUBCASE("zero learning rates freeze the iterate") {
    OptimizerState state = make_state(obj, toy_params(2.0, 3.0));
    step_two_timescale(state, obj, constant_sched(0.0, 0.0), 1, rng);
    CHECK(state.params.M(0, 0) == 2.0);
    CHECK(state.params.w(0) == 3.0);
  }

  SUBCASE("projection keeps iterates feasible (box)") {
    OptimizerState state = make_state(obj, toy_params(0.011, 9.99));
    StepSchedule s = constant_sched(5.0, 5.0);
    for (int i = 0; i < 20; ++i) {
      step_two_timescale(state, obj, s, 1, rng);
      CHECK(state.params.M(0, 0) >= 0.01);
      CHECK(state.params.M(0, 0) <= 10.0);
      CHECK(state.params.w(0) >= 0.01);
      CHECK(state.params.w(0) <= 10.0);
    }
  }

  SUBCASE("ball projection lands exactly on the boundary") {
    const Activation act = Activation::identity();
    RegressionDataset d = make_synthetic_regression(8, 2, 2, act, 0.3, 4);
    const double radius = 0.05;
    RegressionObjective ball_obj(d, act, 2, ConstraintSet::frobenius_ball(radius),
                                 ConstraintSet::frobenius_ball(10.0));
    LayeredParams p;
    p.M = Mat::Constant(2, 2, 0.02);
    p.w = Vec::Constant(2, 1.0);
    OptimizerState state = make_state(ball_obj, p);
    Rng r2(8);
    step_two_timescale(state, ball_obj, constant_sched(10.0, 0.0), 8, r2);
    CHECK(state.params.M.norm() == doctest::Approx(radius).epsilon(1e-12));
  }
}

TEST_CASE("uniform and rmsprop steps") {
  ToyObjective obj;

  SUBCASE("uniform equals two-timescale with equal constant rates") {
    OptimizerState a = make_state(obj, toy_params(0.7, 1.3));
    OptimizerState b = make_state(obj, toy_params(0.7, 1.3));
    Rng ra(5), rb(5);
    for (int i = 0; i < 10; ++i) {
      step_uniform(a, obj, 0.05, 1, ra);
      step_two_timescale(b, obj, constant_sched(0.05, 0.05), 1, rb);
    }
    CHECK((a.params.M - b.params.M).norm() == 0.0);
    CHECK((a.params.w - b.params.w).norm() == 0.0);
  }

  SUBCASE("rmsprop normalizes a persistent gradient to ~lr") {
    // Far from the optimum the toy gradients keep their sign; after the
    // accumulator warms up, each step has magnitude close to lr.
    OptimizerState state = make_state(obj, toy_params(9.0, 9.0));
    RmspropOptions opt;
    opt.lr_body = 1e-3;
    opt.lr_head = 1e-3;
    Rng rng(6);
    for (int i = 0; i < 200; ++i) step_rmsprop(state, obj, opt, 1, rng);
    const double m_before = state.params.M(0, 0);
    step_rmsprop(state, obj, opt, 1, rng);
    const double step_size = std::abs(state.params.M(0, 0) - m_before);
    CHECK(step_size == doctest::Approx(opt.lr_body).epsilon(0.2));
  }
}

TEST_CASE("training loop") {
  ToyObjective obj;

  SUBCASE("trace shape and finiteness") {
    RunOptions opt;
    opt.sched = constant_sched(0.01, 0.05);
    opt.iters = 100;
    opt.eval_period = 10;
    opt.problem_id = "toy";
    Rng rng(12);
    const RunResult res = run(obj, opt, toy_params(2.0, 2.0), rng);
    CHECK(res.trace.columns ==
          std::vector<std::string>{"k", "loss", "phi", "w_track", "stationarity", "alpha", "beta"});
    CHECK(res.trace.rows.size() == 11);  // init row + 10 evals
    for (const auto& row : res.trace.rows) {
      CHECK(std::isfinite(row[1]));
      CHECK(std::isfinite(row[2]));
    }
  }

  SUBCASE("zero rates give a constant trace") {
    RunOptions opt;
    opt.sched = constant_sched(0.0, 0.0);
    opt.iters = 30;
    opt.eval_period = 10;
    Rng rng(13);
    const RunResult res = run(obj, opt, toy_params(1.5, 1.5), rng);
    for (const auto& row : res.trace.rows) CHECK(row[1] == res.trace.rows.front()[1]);
  }

  SUBCASE("same seed gives byte-identical traces") {
    const Activation act = Activation::tanh_act();
    RegressionDataset d = make_synthetic_regression(16, 3, 2, act, 0.3, 2);
    RegressionObjective robj(d, act, 2, ConstraintSet::large_ball(3.0),
                             ConstraintSet::large_ball(3.0));
    RunOptions opt;
    opt.sched = constant_sched(0.005, 0.02);
    opt.iters = 50;
    opt.eval_period = 5;
    opt.batch_size = 4;
    LayeredParams init;
    init.M = Mat::Ones(3, 2) * 0.1;
    init.w = Vec::Ones(2) * 0.1;
    Rng r1(77), r2(77);
    const RunResult a = run(robj, opt, init, r1);
    const RunResult b = run(robj, opt, init, r2);
    CHECK(a.trace.to_csv() == b.trace.to_csv());
    Rng r3(78);
    const RunResult c = run(robj, opt, init, r3);
    CHECK(a.trace.to_csv() != c.trace.to_csv());
  }

  SUBCASE("head tracks its best response under thm1") {
    const Activation act = Activation::tanh_act();
    RegressionDataset d = make_synthetic_regression(32, 4, 3, act, 0.5, 9);
    RegressionObjective robj(d, act, 3, ConstraintSet::large_ball(4.0),
                             ConstraintSet::large_ball(4.0));
    RunOptions opt;
    opt.sched.kind = ScheduleKind::thm1;
    opt.sched.alpha0 = 0.002;
    opt.sched.beta0 = 0.01;
    opt.iters = 2000;
    opt.eval_period = 20;
    opt.batch_size = 8;
    LayeredParams init;
    init.M = Mat::Ones(4, 3) * 0.3;
    init.w = Vec::Ones(3) * 0.3;
    Rng rng(21);
    const RunResult res = run(robj, opt, init, rng);
    const std::vector<double> track = res.trace.column("w_track");
    const std::size_t n = track.size();
    const std::size_t decile = n / 10;
    REQUIRE(decile >= 2);
    double head = 0.0, tail = 0.0;
    for (std::size_t i = 0; i < decile; ++i) {
      head += track[i] * track[i];
      tail += track[n - 1 - i] * track[n - 1 - i];
    }
    CHECK(tail < head);
  }
}
