#include "stackstep/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

namespace stackstep {

std::shared_ptr<RegressionObjective> make_paper_instance(std::uint64_t data_seed,
                                                         const Activation& act) {
  const Index n_samples = 128, m = 20, n = 10;
  const double lambda = 0.1;
  RegressionDataset data = make_synthetic_regression(n_samples, m, n, act, lambda, data_seed);
  const double scale = std::sqrt(static_cast<double>(m * n));
  return std::make_shared<RegressionObjective>(std::move(data), act, n,
                                               ConstraintSet::large_ball(scale),
                                               ConstraintSet::large_ball(std::sqrt(1.0 * n)));
}

std::shared_ptr<RegressionObjective> make_paper_instance(std::uint64_t data_seed) {
  return make_paper_instance(data_seed, Activation::relu());
}

LayeredParams random_init(const StochasticObjective& obj, std::uint64_t seed, double scale) {
  Rng rng(seed);
  LayeredParams p;
  p.M = obj.body_set().project(Mat(scale * rng.normal_mat(obj.body_rows(), obj.body_cols())));
  p.w = obj.head_set().project(Vec(scale * rng.normal_vec(obj.body_cols())));
  return p;
}

std::string params_hash(const LayeredParams& params) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const double* data, Index count) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(data);
    for (Index i = 0; i < count * static_cast<Index>(sizeof(double)); ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  };
  mix(params.M.data(), params.M.size());
  mix(params.w.data(), params.w.size());
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

RunOptions arm_options(const ThreeArmOptions& opt, UpdateRule rule, double alpha, double beta,
                       const std::string& id) {
  RunOptions ro;
  ro.rule = rule;
  ro.sched.kind = ScheduleKind::constant;
  ro.sched.alpha0 = alpha;
  ro.sched.beta0 = beta;
  ro.iters = opt.iters;
  ro.batch_size = opt.batch_size;
  ro.eval_period = opt.eval_period;
  ro.eval_phi = opt.eval_phi;
  ro.eval_stationarity = false;
  ro.problem_id = id;
  return ro;
}

}  // namespace

ThreeArmResult run_three_arm(const StochasticObjective& obj, const ThreeArmOptions& opt,
                             std::uint64_t seed) {
  const LayeredParams init = random_init(obj, seed);
  ThreeArmResult res;
  res.seed = seed;
  res.init_hash = params_hash(init);

  auto run_arm = [&](UpdateRule rule, double alpha, double beta, const std::string& id,
                     bool* diverged) {
    // Every arm restarts the sample stream and the init: the arms differ only
    // in their learning rates.
    if (params_hash(init) != res.init_hash)
      throw std::logic_error("run_three_arm: shared initialization was mutated");
    Rng rng(seed);
    if (diverged) *diverged = false;
    try {
      RunResult rr = run(obj, arm_options(opt, rule, alpha, beta, id), init, rng);
      return rr.trace;
    } catch (const std::runtime_error&) {
      if (!diverged) throw;
      *diverged = true;
      return CsvTrace{};
    }
  };

  const double large = opt.rate_ratio * opt.alpha;
  res.nonuniform = run_arm(UpdateRule::two_timescale, opt.alpha, large, "nonuniform", nullptr);
  res.uniform_small = run_arm(UpdateRule::uniform, opt.alpha, opt.alpha, "uniform_small", nullptr);
  res.uniform_large =
      run_arm(UpdateRule::uniform, large, large, "uniform_large", &res.uniform_large_diverged);
  return res;
}

nlohmann::json three_arm_summary(const std::vector<ThreeArmResult>& results) {
  nlohmann::json seeds = nlohmann::json::array();
  int nonuniform_wins = 0, uniform_large_worse = 0;
  for (const auto& r : results) {
    const double f_non = r.nonuniform.rows.back()[1];
    const double f_small = r.uniform_small.rows.back()[1];
    const double f_large = r.uniform_large_diverged
                               ? std::numeric_limits<double>::infinity()
                               : r.uniform_large.rows.back()[1];
    if (f_non <= f_small) ++nonuniform_wins;
    if (r.uniform_large_diverged || !(f_large <= f_non)) ++uniform_large_worse;
    seeds.push_back({{"seed", r.seed},
                     {"init_hash", r.init_hash},
                     {"final_loss_nonuniform", f_non},
                     {"final_loss_uniform_small", f_small},
                     {"final_loss_uniform_large", f_large},
                     {"uniform_large_diverged", r.uniform_large_diverged}});
  }
  return {{"seeds", seeds},
          {"n_seeds", results.size()},
          {"nonuniform_beats_uniform_small", nonuniform_wins},
          {"uniform_large_worse_or_diverged", uniform_large_worse}};
}

double toy_m_star() {
  // Golden-section search on the strongly convex reduced objective, then a
  // short bisection on the central difference for extra digits.
  double lo = 0.01, hi = 10.0;
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = hi - gr * (hi - lo), b = lo + gr * (hi - lo);
  double fa = toy_phi(a), fb = toy_phi(b);
  for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
    if (fa < fb) {
      hi = b;
      b = a;
      fb = fa;
      a = hi - gr * (hi - lo);
      fa = toy_phi(a);
    } else {
      lo = a;
      a = b;
      fa = fb;
      b = lo + gr * (hi - lo);
      fb = toy_phi(b);
    }
  }
  return 0.5 * (lo + hi);
}

ToyRateStudy toy_rate_study(const StepSchedule& sched, long iters, long eval_period, int n_seeds,
                            std::uint64_t base_seed, double tail_fraction) {
  ToyRateStudy study;
  study.m_star = toy_m_star();
  study.traces.resize(static_cast<std::size_t>(n_seeds));

  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < n_seeds; ++i) seeds.push_back(base_seed + static_cast<std::uint64_t>(i));

  parallel_for_seeds(seeds, [&](std::size_t i, std::uint64_t seed) {
    ToyObjective obj;
    Rng rng(seed);
    LayeredParams init;
    init.M = Mat::Constant(1, 1, 0.1 + 1.9 * rng.uniform());
    init.w = Vec::Constant(1, 0.1 + 1.9 * rng.uniform());
    OptimizerState state = make_state(obj, init);

    CsvTrace trace;
    trace.columns = {"k", "dist_sq", "alpha", "beta"};
    trace.meta["seed"] = seed;
    trace.meta["schedule"] = sched.kind_name();
    auto record = [&]() {
      const double d = state.params.M(0, 0) - study.m_star;
      trace.add_row({static_cast<double>(state.k), d * d, sched.alpha(state.k),
                     sched.beta(state.k)});
    };
    for (long k = 0; k < iters; ++k) {
      step_two_timescale(state, obj, sched, 1, rng);
      if (state.k % eval_period == 0 || state.k == iters) record();
    }
    study.traces[i] = std::move(trace);
  });

  study.k = study.traces.front().column("k");
  study.mean_dist_sq = mean_across_traces(study.traces, "dist_sq");
  study.fit = fit_rate(study.k, study.mean_dist_sq, tail_fraction);
  return study;
}

int max_threads() {
  int n = static_cast<int>(std::thread::hardware_concurrency());
  if (n < 1) n = 1;
  if (const char* env = std::getenv("STACKSTEP_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1 && cap < n) n = cap;
  }
  return n;
}

void parallel_for_seeds(const std::vector<std::uint64_t>& seeds,
                        const std::function<void(std::size_t, std::uint64_t)>& fn) {
  const int workers = std::min<int>(max_threads(), static_cast<int>(seeds.size()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < seeds.size(); ++i) fn(i, seeds[i]);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (int t = 0; t < workers; ++t) {
    pool.emplace_back([&]() {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= seeds.size()) return;
        try {
          fn(i, seeds[i]);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace stackstep
