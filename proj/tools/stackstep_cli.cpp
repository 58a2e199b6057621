// Experiment driver: configuration parsing, experiment orchestration, and
// CSV/JSON artifact emission for the two-time-scale training library.

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "stackstep/experiments.hpp"
#include "stackstep/landscape.hpp"
#include "stackstep/mdp.hpp"
#include "stackstep/numdiff.hpp"
#include "stackstep/optimizer.hpp"
#include "stackstep/problems.hpp"
#include "stackstep/ratefit.hpp"
#include "stackstep/stackelberg.hpp"
#include "stackstep/tdc.hpp"

namespace {

using nlohmann::json;
using namespace stackstep;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitProperty = 4;

/// Configuration problems get their own type so main can map them to exit
/// code 2 while numerical failures map to 3.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config: cannot open " + path);
  json cfg;
  try {
    f >> cfg;
  } catch (const json::parse_error& e) {
    throw ConfigError("config: " + path + ": " + e.what());
  }
  if (!cfg.contains("schema_version") || cfg["schema_version"] != 1)
    throw ConfigError("config: " + path + ": schema_version must be 1");
  return cfg;
}

template <typename T>
T field_or(const json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("config: field '" + key + "': " + e.what());
  }
}

std::vector<std::uint64_t> resolve_seeds(const json& cfg, const std::string& seeds_flag) {
  std::vector<std::uint64_t> seeds;
  if (!seeds_flag.empty()) {
    std::stringstream ss(seeds_flag);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      try {
        seeds.push_back(std::stoull(tok));
      } catch (const std::exception&) {
        throw ConfigError("--seeds: cannot parse '" + tok + "' as an integer");
      }
    }
  } else {
    seeds = field_or<std::vector<std::uint64_t>>(cfg, "seeds", {});
  }
  if (seeds.empty()) throw ConfigError("config: seeds must be nonempty");
  return seeds;
}

StepSchedule schedule_from(const json& cfg) {
  StepSchedule sched;
  if (!cfg.contains("schedule")) return sched;
  const json& s = cfg.at("schedule");
  try {
    sched.kind = StepSchedule::parse_kind(field_or<std::string>(s, "kind", "thm1"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: schedule: ") + e.what());
  }
  sched.alpha0 = field_or<double>(s, "alpha0", sched.alpha0);
  sched.beta0 = field_or<double>(s, "beta0", sched.beta0);
  sched.zeta0 = field_or<double>(s, "zeta0", sched.zeta0);
  sched.h = field_or<double>(s, "h", sched.h);
  if (field_or<bool>(s, "tune_h", false)) sched.tune_h();
  return sched;
}

ProblemConstants constants_from(const json& cfg) {
  ProblemConstants c;
  if (!cfg.contains("constants")) return c;
  const json& j = cfg.at("constants");
  c.lambda = field_or<double>(j, "lambda", 0.0);
  c.L = field_or<double>(j, "L", 0.0);
  c.sigma2 = field_or<double>(j, "sigma2", 0.0);
  c.rho = field_or<double>(j, "rho", 0.0);
  c.rho_hat = field_or<double>(j, "rho_hat", 0.0);
  c.lambda_phi = field_or<double>(j, "lambda_phi", 0.0);
  return c;
}

struct BuiltProblem {
  std::shared_ptr<StochasticObjective> obj;
  std::string id;
};

BuiltProblem build_problem(const json& cfg) {
  if (!cfg.contains("problem")) throw ConfigError("config: missing 'problem'");
  const json& p = cfg.at("problem");
  const std::string kind = field_or<std::string>(p, "kind", "");
  const std::string act_name = field_or<std::string>(p, "activation", "relu");
  Activation act = Activation::identity();
  try {
    act = Activation::parse(act_name);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: problem: ") + e.what());
  }

  BuiltProblem built;
  built.id = kind;
  try {
    if (kind == "synthetic_regression") {
      const Index n_samples = field_or<Index>(p, "n_samples", 128);
      const Index m = field_or<Index>(p, "m", 20);
      const Index n = field_or<Index>(p, "n", 10);
      const double lambda = field_or<double>(p, "lambda", 0.1);
      const std::uint64_t data_seed = field_or<std::uint64_t>(p, "data_seed", 1);
      RegressionDataset data = make_synthetic_regression(n_samples, m, n, act, lambda, data_seed);
      const double scale = std::sqrt(static_cast<double>(m * n));
      built.obj = std::make_shared<RegressionObjective>(
          std::move(data), act, n, ConstraintSet::large_ball(scale),
          ConstraintSet::large_ball(std::sqrt(static_cast<double>(n))));
    } else if (kind == "synthetic_classification") {
      const Index n_samples = field_or<Index>(p, "n_samples", 128);
      const Index m = field_or<Index>(p, "m", 20);
      const Index n = field_or<Index>(p, "n", 10);
      const double lambda = field_or<double>(p, "lambda", 0.1);
      const std::uint64_t data_seed = field_or<std::uint64_t>(p, "data_seed", 1);
      ClassificationDataset data =
          make_synthetic_classification(n_samples, m, n, act, lambda, data_seed);
      const double scale = std::sqrt(static_cast<double>(m * n));
      built.obj = std::make_shared<ClassificationObjective>(
          std::move(data), act, n, ConstraintSet::large_ball(scale),
          ConstraintSet::large_ball(std::sqrt(static_cast<double>(n))));
    } else if (kind == "toy") {
      built.obj = std::make_shared<ToyObjective>();
    } else {
      throw ConfigError("config: unknown problem kind '" + kind + "'");
    }
  } catch (const std::invalid_argument& e) {
    // Construction rejected the configuration (e.g. a nonsmooth activation
    // where gradients are required).
    throw ConfigError(std::string("config: problem: ") + e.what());
  }
  return built;
}

TabularMDP mdp_from(const json& cfg) {
  const json& p = cfg.at("problem");
  if (p.contains("mdp_file")) {
    const std::string path = p.at("mdp_file").get<std::string>();
    if (!std::filesystem::exists(path)) throw ConfigError("config: mdp_file not found: " + path);
    return load_mdp_json(path);
  }
  if (field_or<std::string>(p, "instance", "") == "chain_walk_5") return make_chain_walk_5();
  const Index n_states = field_or<Index>(p, "n_states", 5);
  const Index n_actions = field_or<Index>(p, "n_actions", 2);
  const double gamma = field_or<double>(p, "gamma", 0.9);
  const std::uint64_t mdp_seed = field_or<std::uint64_t>(p, "mdp_seed", 1);
  return make_random_mdp(n_states, n_actions, gamma, mdp_seed);
}

void enforce_schedule(const StepSchedule& sched, const ProblemConstants& consts, long iters,
                      bool strict) {
  const ScheduleReport report = validate_schedule(sched, consts, iters);
  for (const auto& c : report.conditions) {
    std::fprintf(stderr, "[schedule] %-40s %s (margin %.3g) %s\n", c.name.c_str(),
                 c.satisfied ? "ok" : "VIOLATED", c.margin, c.detail.c_str());
  }
  if (strict && !report.all_satisfied())
    throw ConfigError("schedule: conditions violated under --strict-schedule");
}

std::filesystem::path prepare_out(const json& cfg, const std::string& out_flag) {
  std::string dir = out_flag.empty() ? field_or<std::string>(cfg, "output_dir", "out") : out_flag;
  std::filesystem::create_directories(dir);
  return dir;
}

// ---------------------------------------------------------------------------
// gradcheck
// ---------------------------------------------------------------------------

struct CheckOutcome {
  std::string name;
  double max_rel_err = 0.0;
  bool pass = false;
};

double rel_err(const Mat& got, const Mat& want) {
  return (got - want).norm() / std::max(1.0, want.norm());
}

int cmd_gradcheck(const json& cfg) {
  const int points = field_or<int>(cfg, "points", 20);
  const double tol = field_or<double>(cfg, "tolerance", 1e-5);
  std::vector<CheckOutcome> outcomes;

  auto check = [&](const std::string& name, const std::function<double(Rng&)>& one_point) {
    Rng rng(field_or<std::uint64_t>(cfg, "check_seed", 7));
    CheckOutcome out{name, 0.0, false};
    for (int i = 0; i < points; ++i) out.max_rel_err = std::max(out.max_rel_err, one_point(rng));
    out.pass = out.max_rel_err <= tol;
    outcomes.push_back(out);
  };

  const Activation tanh_act = Activation::tanh_act();
  RegressionDataset reg = make_synthetic_regression(24, 4, 3, tanh_act, 0.3, 11);
  ClassificationDataset clf = make_synthetic_classification(24, 4, 3, tanh_act, 0.3, 12);

  check("reg_grad_w", [&](Rng& rng) {
    const Mat M = rng.normal_mat(4, 3);
    const Vec w = rng.normal_vec(3);
    const Vec fd = fd_grad([&](const Vec& v) { return reg_loss(reg, tanh_act, M, v); }, w);
    return rel_err(reg_grad_w(reg, tanh_act, M, w), fd);
  });
  check("reg_subgrad_M", [&](Rng& rng) {
    const Mat M = rng.normal_mat(4, 3);
    const Vec w = rng.normal_vec(3);
    const Mat fd = fd_grad_mat([&](const Mat& A) { return reg_loss(reg, tanh_act, A, w); }, M);
    return rel_err(reg_subgrad_M(reg, tanh_act, M, w), fd);
  });
  check("clf_grad_w", [&](Rng& rng) {
    const Mat M = rng.normal_mat(4, 3);
    const Vec w = rng.normal_vec(3);
    const Vec fd = fd_grad([&](const Vec& v) { return clf_loss(clf, tanh_act, M, v); }, w);
    return rel_err(clf_grad_w(clf, tanh_act, M, w), fd);
  });
  check("clf_grad_M", [&](Rng& rng) {
    const Mat M = rng.normal_mat(4, 3);
    const Vec w = rng.normal_vec(3);
    const Mat fd = fd_grad_mat([&](const Mat& A) { return clf_loss(clf, tanh_act, A, w); }, M);
    return rel_err(clf_grad_M(clf, tanh_act, M, w), fd);
  });

  RegressionObjective reg_obj(reg, tanh_act, 3, ConstraintSet::large_ball(4.0),
                              ConstraintSet::large_ball(2.0));
  check("phi_subgrad", [&](Rng& rng) {
    const Mat M = rng.normal_mat(4, 3);
    const Mat fd = fd_grad_mat([&](const Mat& A) { return phi(reg_obj, A); }, M, 1e-5);
    return rel_err(phi_subgrad(reg_obj, M), fd);
  });

  const TabularMDP mdp = make_random_mdp(4, 2, 0.9, 21);
  const Mat psi = Mat::Identity(4, 4);
  check("tdc_grad_M", [&](Rng& rng) {
    ValueFeatures feat{psi, tanh_act, rng.normal_mat(4, 3), rng.normal_vec(3)};
    const Vec mu = mu_fixed_point(mdp, feat);
    const Mat fd = fd_grad_mat(
        [&](const Mat& A) {
          ValueFeatures f2{psi, tanh_act, A, feat.w};
          return mspbe(mdp, f2);
        },
        feat.M);
    return rel_err(tdc_grad_M(mdp, feat, mu), fd);
  });
  check("tdc_grad_w", [&](Rng& rng) {
    ValueFeatures feat{psi, tanh_act, rng.normal_mat(4, 3), rng.normal_vec(3)};
    const Vec fd = fd_grad(
        [&](const Vec& v) {
          ValueFeatures f2{psi, tanh_act, feat.M, v};
          return mspbe(mdp, f2);
        },
        feat.w);
    // mu must track w inside the fd stencil, so recompute it per probe via
    // the closure above; here the analytic side uses the exact mu at w.
    ValueFeatures f0 = feat;
    const Vec mu = mu_fixed_point(mdp, f0);
    return rel_err(tdc_grad_w(mdp, feat, mu), fd);
  });

  bool all_pass = true;
  for (const auto& out : outcomes) {
    std::printf("%-16s max_rel_err %.3e  %s\n", out.name.c_str(), out.max_rel_err,
                out.pass ? "pass" : "FAIL");
    all_pass = all_pass && out.pass;
  }
  return all_pass ? kExitOk : kExitProperty;
}

// ---------------------------------------------------------------------------
// train (three-arm protocol)
// ---------------------------------------------------------------------------

int cmd_train(const json& cfg, const std::string& out_flag, const std::string& seeds_flag,
              bool strict) {
  const BuiltProblem built = build_problem(cfg);
  const std::vector<std::uint64_t> seeds = resolve_seeds(cfg, seeds_flag);
  const std::filesystem::path out = prepare_out(cfg, out_flag);

  ThreeArmOptions opt;
  opt.alpha = field_or<double>(cfg, "alpha", 0.01);
  opt.rate_ratio = field_or<double>(cfg, "rate_ratio", 5.0);
  opt.iters = field_or<long>(cfg, "iters", 1000);
  opt.batch_size = field_or<Index>(cfg, "batch_size", 16);
  opt.eval_period = field_or<long>(cfg, "eval_period", 10);
  opt.eval_phi = field_or<bool>(cfg, "eval_phi", false);

  if (cfg.contains("constants")) {
    StepSchedule sched;
    sched.kind = ScheduleKind::constant;
    sched.alpha0 = opt.alpha;
    sched.beta0 = opt.rate_ratio * opt.alpha;
    enforce_schedule(sched, constants_from(cfg), opt.iters, strict);
  }

  std::vector<ThreeArmResult> results(seeds.size());
  parallel_for_seeds(seeds, [&](std::size_t i, std::uint64_t seed) {
    results[i] = run_three_arm(*built.obj, opt, seed);
  });

  for (const auto& r : results) {
    const std::string stem = "seed_" + std::to_string(r.seed) + "_";
    r.nonuniform.write_csv((out / (stem + "nonuniform.csv")).string());
    r.nonuniform.write_meta((out / (stem + "nonuniform.meta.json")).string());
    r.uniform_small.write_csv((out / (stem + "uniform_small.csv")).string());
    r.uniform_small.write_meta((out / (stem + "uniform_small.meta.json")).string());
    if (!r.uniform_large_diverged) {
      r.uniform_large.write_csv((out / (stem + "uniform_large.csv")).string());
      r.uniform_large.write_meta((out / (stem + "uniform_large.meta.json")).string());
    }
  }
  json summary = three_arm_summary(results);
  summary["problem"] = built.id;
  summary["alpha"] = opt.alpha;
  summary["rate_ratio"] = opt.rate_ratio;
  std::ofstream((out / "summary.json").string()) << summary.dump(2) << '\n';
  std::printf("train: %zu seeds -> %s\n", seeds.size(), out.string().c_str());
  return kExitOk;
}

// ---------------------------------------------------------------------------
// ratefit
// ---------------------------------------------------------------------------

int cmd_ratefit(const std::vector<std::string>& files, const std::string& quantity,
                double tail_fraction, const std::string& out_flag) {
  if (files.empty()) throw ConfigError("ratefit: no trace files given");
  std::vector<CsvTrace> traces;
  for (const auto& f : files) traces.push_back(read_csv_trace(f));
  // Average across seeds at each k before fitting.
  const std::vector<double> mean = mean_across_traces(traces, quantity);
  std::vector<double> k = traces.front().column("k");
  std::vector<double> kk, vv;
  for (std::size_t i = 0; i < k.size(); ++i) {
    if (std::isnan(mean[i])) continue;
    kk.push_back(k[i]);
    vv.push_back(mean[i]);
  }
  const RateFit fit = fit_rate(kk, vv, tail_fraction);
  json j = {{"quantity", quantity},
            {"tail_fraction", tail_fraction},
            {"n_traces", files.size()},
            {"n_tail_points", fit.k.size()},
            {"slope", fit.slope},
            {"stderr", fit.stderr_},
            {"intercept", fit.intercept}};
  std::cout << j.dump(2) << '\n';
  if (!out_flag.empty()) {
    std::filesystem::create_directories(out_flag);
    std::ofstream(std::filesystem::path(out_flag) / "ratefit.json") << j.dump(2) << '\n';
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// landscape
// ---------------------------------------------------------------------------

int cmd_landscape(const json& cfg, const std::string& out_flag, const std::string& seeds_flag,
                  bool strict) {
  const BuiltProblem built = build_problem(cfg);
  const std::vector<std::uint64_t> seeds = resolve_seeds(cfg, seeds_flag);
  const std::filesystem::path out = prepare_out(cfg, out_flag);
  const StepSchedule sched = schedule_from(cfg);
  if (cfg.contains("constants"))
    enforce_schedule(sched, constants_from(cfg), field_or<long>(cfg, "iters", 1000), strict);

  std::vector<long> checkpoints = field_or<std::vector<long>>(cfg, "checkpoints", {0, 100, 1000});
  std::sort(checkpoints.begin(), checkpoints.end());
  const long iters = std::max(field_or<long>(cfg, "iters", 1000), checkpoints.back());
  const Index batch_size = field_or<Index>(cfg, "batch_size", 16);

  SliceSpec spec_template;
  spec_template.eta_max = field_or<double>(cfg, "eta_max", 1.0);
  spec_template.resolution = field_or<Index>(cfg, "resolution", 41);
  const double inner_tol = field_or<double>(cfg, "inner_tol", 1e-9);

  json all = json::array();
  for (const std::uint64_t seed : seeds) {
    // Train, snapshotting the iterate at each checkpoint.
    Rng rng(seed);
    OptimizerState state = make_state(*built.obj, random_init(*built.obj, seed));
    std::vector<LayeredParams> snaps;
    std::size_t next_cp = 0;
    for (long k = 0; k <= iters && next_cp < checkpoints.size(); ++k) {
      if (k == checkpoints[next_cp]) {
        snaps.push_back(state.params);
        ++next_cp;
      }
      if (k < iters) step_two_timescale(state, *built.obj, sched, batch_size, rng);
    }
    Rng dir_rng(seed + 0x517cc1b727220a95ULL);
    const auto pairs =
        trajectory_study(*built.obj, snaps, checkpoints, spec_template, dir_rng, inner_tol);
    for (const auto& pair : pairs) {
      const std::string stem =
          "seed_" + std::to_string(seed) + "_k" + std::to_string(pair.k) + "_";
      pair.joint.surface_csv().write_csv((out / (stem + "joint.csv")).string());
      pair.stackelberg.surface_csv().write_csv((out / (stem + "stackelberg.csv")).string());
      json entry;
      entry["seed"] = seed;
      entry["joint"] = pair.joint.summary_json(pair.k);
      entry["stackelberg"] = pair.stackelberg.summary_json(pair.k);
      all.push_back(entry);
    }
  }
  std::ofstream((out / "summary.json").string()) << all.dump(2) << '\n';
  std::printf("landscape: %zu checkpoint slices -> %s\n", all.size(), out.string().c_str());
  return kExitOk;
}

// ---------------------------------------------------------------------------
// tdc
// ---------------------------------------------------------------------------

int cmd_tdc(const json& cfg, const std::string& out_flag, const std::string& seeds_flag) {
  if (!cfg.contains("problem")) throw ConfigError("config: missing 'problem'");
  TabularMDP mdp;
  try {
    mdp = mdp_from(cfg);
    mdp.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: mdp: ") + e.what());
  }
  const json& p = cfg.at("problem");
  const std::vector<std::uint64_t> seeds = resolve_seeds(cfg, seeds_flag);
  const std::filesystem::path out = prepare_out(cfg, out_flag);

  Activation act = Activation::identity();
  try {
    act = Activation::parse(field_or<std::string>(p, "activation", "identity"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: problem: ") + e.what());
  }
  const Index n = field_or<Index>(p, "n_features", mdp.n_states);
  const bool frozen_body = field_or<bool>(cfg, "frozen_body", false);

  StepSchedule sched = schedule_from(cfg);
  if (frozen_body) sched.alpha0 = 0.0;
  TDCRunOptions opt;
  opt.iters = field_or<long>(cfg, "iters", 10000);
  opt.eval_period = field_or<long>(cfg, "eval_period", 100);
  opt.lambda_a_floor = field_or<double>(cfg, "lambda_a_floor", 1e-8);

  const Mat psi = Mat::Identity(mdp.n_states, mdp.n_states);
  for (const std::uint64_t seed : seeds) {
    Rng rng(seed);
    ValueFeatures feat{psi, act,
                       Mat(Mat::Identity(mdp.n_states, n) + 0.01 * rng.normal_mat(mdp.n_states, n)),
                       Vec(Vec::Zero(n))};
    CsvTrace trace = run_tdc(mdp, feat, sched, opt, rng);
    const std::string stem = "seed_" + std::to_string(seed) + "_tdc";
    trace.write_csv((out / (stem + ".csv")).string());
    trace.write_meta((out / (stem + ".meta.json")).string());
  }
  std::printf("tdc: %zu seeds -> %s\n", seeds.size(), out.string().c_str());
  return kExitOk;
}

// ---------------------------------------------------------------------------
// constants
// ---------------------------------------------------------------------------

int cmd_constants(const json& cfg, const std::string& seeds_flag, bool strict) {
  const BuiltProblem built = build_problem(cfg);
  std::vector<std::uint64_t> seeds;
  try {
    seeds = resolve_seeds(cfg, seeds_flag);
  } catch (const ConfigError&) {
    seeds = {1};
  }
  Rng rng(seeds.front());
  const ProblemConstants consts =
      estimate_constants(*built.obj, field_or<int>(cfg, "constant_samples", 32), rng);
  json j = {{"problem", built.id},     {"lambda", consts.lambda},
            {"L", consts.L},           {"sigma2", consts.sigma2},
            {"rho", consts.rho},       {"rho_hat", consts.rho_hat},
            {"lambda_phi", consts.lambda_phi}, {"samples", consts.samples},
            {"empirical", consts.empirical},   {"L_phi", consts.L_phi()}};
  std::cout << j.dump(2) << '\n';
  if (cfg.contains("schedule"))
    enforce_schedule(schedule_from(cfg), consts, field_or<long>(cfg, "iters", 1000), strict);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"two-time-scale projected SGD experiment driver"};
  app.require_subcommand(1);

  std::string config_path, out_dir, seeds_flag, quantity = "dist_sq";
  double tail_fraction = 0.5;
  bool strict = false;
  std::vector<std::string> trace_files;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* opt = sub->add_option("--config", config_path, "JSON experiment config");
    if (needs_config) opt->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--seeds", seeds_flag, "comma-separated seed list (overrides config)");
    sub->add_flag("--strict-schedule", strict, "reject schedules that violate the conditions");
  };

  CLI::App* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient oracles");
  add_common(gradcheck, false);
  CLI::App* train = app.add_subcommand("train", "three-arm learning-rate comparison");
  add_common(train, true);
  CLI::App* ratefit_cmd = app.add_subcommand("ratefit", "log-log tail slope of a trace quantity");
  ratefit_cmd->add_option("files", trace_files, "trace CSV files")->required();
  ratefit_cmd->add_option("--quantity", quantity, "trace column to fit");
  ratefit_cmd->add_option("--tail-fraction", tail_fraction, "portion of the series used");
  ratefit_cmd->add_option("--out", out_dir, "output directory");
  CLI::App* landscape_cmd = app.add_subcommand("landscape", "paired 2-D objective slices");
  add_common(landscape_cmd, true);
  CLI::App* tdc_cmd = app.add_subcommand("tdc", "Algorithm-1 policy evaluation");
  add_common(tdc_cmd, true);
  CLI::App* constants_cmd = app.add_subcommand("constants", "estimate structural constants");
  add_common(constants_cmd, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    json cfg;
    if (!config_path.empty()) cfg = load_config(config_path);
    if (gradcheck->parsed()) return cmd_gradcheck(cfg);
    if (train->parsed()) return cmd_train(cfg, out_dir, seeds_flag, strict);
    if (ratefit_cmd->parsed()) return cmd_ratefit(trace_files, quantity, tail_fraction, out_dir);
    if (landscape_cmd->parsed()) return cmd_landscape(cfg, out_dir, seeds_flag, strict);
    if (tdc_cmd->parsed()) return cmd_tdc(cfg, out_dir, seeds_flag);
    if (constants_cmd->parsed()) return cmd_constants(cfg, seeds_flag, strict);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumerical;
  }
  return kExitOk;
}
