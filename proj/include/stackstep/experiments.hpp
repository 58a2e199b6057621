#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "stackstep/optimizer.hpp"
#include "stackstep/problems.hpp"
#include "stackstep/ratefit.hpp"

namespace stackstep {

/// The synthetic regression study instance: X in R^{128 x 20} standard
/// normal, ground-truth body 20 x 10 and head 10, unit label noise, ridge
/// weight 0.1, relu activation (swap the activation for smooth-gradient
/// work).
std::shared_ptr<RegressionObjective> make_paper_instance(std::uint64_t data_seed,
                                                         const Activation& act);
std::shared_ptr<RegressionObjective> make_paper_instance(std::uint64_t data_seed);

/// Seeded standard-normal initialization, projected onto the feasible sets.
LayeredParams random_init(const StochasticObjective& obj, std::uint64_t seed, double scale = 0.1);

/// FNV-1a hash of the raw parameter bytes; pins that experiment arms share
/// their initialization exactly.
std::string params_hash(const LayeredParams& params);

/// One seed of the three-arm comparison protocol: plain SGD arms that differ
/// only in learning rates — non-uniform (body alpha, head rate_ratio*alpha),
/// uniform at alpha, uniform at rate_ratio*alpha — all from the same init.
struct ThreeArmResult {
  std::uint64_t seed = 0;
  std::string init_hash;
  CsvTrace nonuniform;
  CsvTrace uniform_small;
  CsvTrace uniform_large;
  bool uniform_large_diverged = false;
};

struct ThreeArmOptions {
  double alpha = 0.01;
  double rate_ratio = 5.0;
  long iters = 1000;
  Index batch_size = 16;
  long eval_period = 10;
  bool eval_phi = false;  // loss comparison only by default
};

ThreeArmResult run_three_arm(const StochasticObjective& obj, const ThreeArmOptions& opt,
                             std::uint64_t seed);

/// Per-seed final full-batch losses and the cross-seed ordering tallies.
nlohmann::json three_arm_summary(const std::vector<ThreeArmResult>& results);

/// Body-distance study on the toy instance under a decaying schedule:
/// records ||M_k - M*||^2 at every eval, averages across seeds, and fits the
/// tail slope. m_star defaults to the toy minimizer found by grid-refined
/// closed-form search.
struct ToyRateStudy {
  std::vector<CsvTrace> traces;  // per seed, columns k,dist_sq,alpha,beta
  std::vector<double> k;
  std::vector<double> mean_dist_sq;
  RateFit fit;
  double m_star = 0.0;
};

double toy_m_star();  // argmin of toy_phi by golden-section refinement

ToyRateStudy toy_rate_study(const StepSchedule& sched, long iters, long eval_period, int n_seeds,
                            std::uint64_t base_seed, double tail_fraction = 0.5);

/// Parallelism cap: hardware concurrency, reduced by STACKSTEP_THREADS when
/// set.
int max_threads();

/// Run fn(i, seeds[i]) for every seed, at most max_threads() at a time.
/// Exceptions are rethrown on the calling thread.
void parallel_for_seeds(const std::vector<std::uint64_t>& seeds,
                        const std::function<void(std::size_t, std::uint64_t)>& fn);

}  // namespace stackstep
