#include <doctest.h>

#include <cmath>
#include <vector>

#include "stackstep/constraints.hpp"
#include "stackstep/core.hpp"
#include "stackstep/landscape.hpp"
#include "stackstep/objective.hpp"
#include "stackstep/problems.hpp"
#include "stackstep/stackelberg.hpp"

using namespace stackstep;

namespace {

// f(M, w) = 0.1 ||M||_F^2 + 0.05 ||w||^2: every curvature statistic is known
// in closed form (body Hessian 0.2 I, best response w* = 0).
class QuadObjective final : public StochasticObjective {
 public:
  QuadObjective()
      : body_set_(ConstraintSet::frobenius_ball(100.0)),
        head_set_(ConstraintSet::frobenius_ball(100.0)) {}

  Index body_rows() const override { return 2; }
  Index body_cols() const override { return 2; }
  Index data_size() const override { return 1; }

  double loss(const Mat& M, const Vec& w) const override {
    return 0.1 * M.squaredNorm() + 0.05 * w.squaredNorm();
  }
  Vec grad_w(const Mat&, const Vec& w) const override { return 0.1 * w; }
  Mat subgrad_M(const Mat& M, const Vec&) const override { return 0.2 * M; }

  std::pair<Mat, Vec> sample_grads(const Mat& M, const Vec& w, Index, Rng&) const override {
    return {subgrad_M(M, w), grad_w(M, w)};
  }
  std::pair<Mat, Vec> batch_grads(const Mat& M, const Vec& w,
                                  const std::vector<Index>&) const override {
    return {subgrad_M(M, w), grad_w(M, w)};
  }

  const ConstraintSet& body_set() const override { return body_set_; }
  const ConstraintSet& head_set() const override { return head_set_; }

  std::optional<Vec> closed_form_best_response(const Mat&) const override {
    return Vec::Zero(2);
  }
  std::optional<double> analytic_lambda() const override { return 0.1; }

 private:
  ConstraintSet body_set_;
  ConstraintSet head_set_;
};

SliceSpec axis_spec(SliceMode mode, Index resolution = 11, double eta_max = 0.5) {
  SliceSpec spec;
  spec.center = Mat::Zero(2, 2);
  spec.d1 = Mat::Zero(2, 2);
  spec.d1(0, 0) = 1.0;
  spec.d2 = Mat::Zero(2, 2);
  spec.d2(1, 1) = 1.0;
  spec.eta_max = eta_max;
  spec.resolution = resolution;
  spec.mode = mode;
  return spec;
}


RegressionObjective small_regression(std::uint64_t seed) {
  const Activation act = Activation::tanh_act();
  RegressionDataset d = make_synthetic_regression(24, 4, 3, act, 0.1, seed);
  return RegressionObjective(d, act, 3, ConstraintSet::large_ball(3.0),
                             ConstraintSet::large_ball(3.0));
}

}  // namespace

TEST_CASE("quadratic slice: values, Hessian, trace, lambda_max in closed form") {
  const QuadObjective obj;
  const Vec w0 = Vec::Zero(2);
  for (SliceMode mode : {SliceMode::joint, SliceMode::stackelberg}) {
    const SliceSpec spec = axis_spec(mode);
    const SliceResult res = sweep(spec, obj, &w0);

    CHECK(res.values.rows() == 11);
    CHECK(res.values.cols() == 11);
    CHECK(res.invalid_count == 0);
    for (Index i = 0; i < 11; ++i)
      for (Index j = 0; j < 11; ++j) {
        const double e1 = res.etas(i), e2 = res.etas(j);
        CHECK(res.values(i, j) == doctest::Approx(0.1 * (e1 * e1 + e2 * e2)).epsilon(1e-9));
        CHECK(res.feasible(i, j) == 1.0);
      }

    CHECK(res.hessian2d(0, 0) == doctest::Approx(0.2).epsilon(1e-5));
    CHECK(res.hessian2d(1, 1) == doctest::Approx(0.2).epsilon(1e-5));
    CHECK(res.hessian2d(0, 1) == doctest::Approx(0.0).epsilon(1e-5));
    CHECK(res.trace == doctest::Approx(0.4).epsilon(1e-5));
    CHECK(res.lambda_max == doctest::Approx(0.2).epsilon(1e-5));
    CHECK(res.grad2d.norm() <= 1e-6);
    CHECK(res.mode == mode);
  }
}

TEST_CASE("slice statistics are invariant under swapping the two directions") {
  const RegressionObjective problem = small_regression(77);
  Rng rng(78);
  SliceSpec spec;
  spec.center = 0.3 * rng.normal_mat(4, 3);
  std::tie(spec.d1, spec.d2) = random_directions(4, 3, rng);
  spec.eta_max = 0.2;
  spec.resolution = 7;
  spec.mode = SliceMode::joint;
  const Vec w0 = rng.normal_vec(3);

  const SliceResult a = sweep(spec, problem, &w0);
  std::swap(spec.d1, spec.d2);
  const SliceResult b = sweep(spec, problem, &w0);

  CHECK(a.trace == doctest::Approx(b.trace).epsilon(1e-9));
  CHECK(a.lambda_max == doctest::Approx(b.lambda_max).epsilon(1e-9));
  // values transpose under the swap
  CHECK((a.values - b.values.transpose()).norm() <= 1e-9 * (1.0 + a.values.norm()));
}

TEST_CASE("center consistency: joint center is the loss, stackelberg center is phi") {
  const RegressionObjective problem = small_regression(80);
  Rng rng(81);
  SliceSpec spec;
  spec.center = 0.2 * rng.normal_mat(4, 3);
  std::tie(spec.d1, spec.d2) = random_directions(4, 3, rng);
  spec.eta_max = 0.1;
  spec.resolution = 5;
  const Vec w0 = rng.normal_vec(3);
  const Index mid = 2;  // etas are symmetric about zero

  spec.mode = SliceMode::joint;
  const SliceResult joint = sweep(spec, problem, &w0);
  CHECK(joint.etas(mid) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(joint.values(mid, mid) ==
        doctest::Approx(problem.loss(spec.center, w0)).epsilon(1e-12));

  spec.mode = SliceMode::stackelberg;
  const SliceResult stack = sweep(spec, problem, &w0);
  CHECK(stack.values(mid, mid) ==
        doctest::Approx(phi(problem, spec.center, 1e-10)).epsilon(1e-7));

  // Pointwise dominance: phi(M) <= f(M, w) for any fixed head.
  for (Index i = 0; i < 5; ++i)
    for (Index j = 0; j < 5; ++j)
      CHECK(stack.values(i, j) <= joint.values(i, j) + 1e-9);
}

TEST_CASE("joint slice at an exact head minimum has a flat head direction") {
  // With w fixed at the best response, the joint and stackelberg surfaces
  // touch at the center.
  const RegressionObjective problem = small_regression(90);
  Rng rng(91);
  const Mat center = 0.2 * rng.normal_mat(4, 3);
  const Vec w_star = best_response(problem, center, 1e-12).w_star;
  SliceSpec spec;
  spec.center = center;
  std::tie(spec.d1, spec.d2) = random_directions(4, 3, rng);
  spec.eta_max = 0.05;
  spec.resolution = 5;
  spec.mode = SliceMode::joint;
  const SliceResult joint = sweep(spec, problem, &w_star);
  spec.mode = SliceMode::stackelberg;
  const SliceResult stack = sweep(spec, problem, &w_star);
  CHECK(joint.values(2, 2) == doctest::Approx(stack.values(2, 2)).epsilon(1e-7));
}

TEST_CASE("infeasible raw grid points are flagged but projected values filled") {
  const QuadObjective obj;
  SliceSpec spec = axis_spec(SliceMode::joint, 5, 300.0);  // exceeds the radius-100 ball
  const Vec w0 = Vec::Zero(2);
  const SliceResult res = sweep(spec, obj, &w0);
  CHECK(res.feasible(0, 0) == 0.0);  // corner at (-300, -300) lies far outside
  CHECK(res.feasible(2, 2) == 1.0);  // center is inside
  for (Index i = 0; i < 5; ++i)
    for (Index j = 0; j < 5; ++j) CHECK(std::isfinite(res.values(i, j)));
  // Projected corner value: the ball clips ||M|| to 100.
  CHECK(res.values(0, 0) == doctest::Approx(0.1 * 100.0 * 100.0).epsilon(1e-9));
}

TEST_CASE("surface csv and summary json shapes") {
  const QuadObjective obj;
  const SliceSpec spec = axis_spec(SliceMode::stackelberg, 5);
  const Vec w0 = Vec::Zero(2);
  const SliceResult res = sweep(spec, obj, &w0);

  const CsvTrace csv = res.surface_csv();
  CHECK(csv.columns == std::vector<std::string>{"eta1", "eta2", "value", "feasible"});
  CHECK(csv.rows.size() == 25);

  const nlohmann::json js = res.summary_json(42);
  CHECK(js.at("k").get<long>() == 42);
  CHECK(js.at("mode").get<std::string>() == "stackelberg");
  CHECK(js.at("lambda_max").get<double>() == doctest::Approx(0.2).epsilon(1e-5));
  CHECK(js.at("trace").get<double>() == doctest::Approx(0.4).epsilon(1e-5));
  CHECK(js.at("grad_norm").get<double>() <= 1e-6);
  CHECK(js.at("invalid_points").get<Index>() == 0);
}

TEST_CASE("random directions are unit Frobenius norm and distinct") {
  Rng rng(7);
  const auto [d1, d2] = random_directions(6, 4, rng);
  CHECK(d1.norm() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(d2.norm() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK((d1 - d2).norm() > 1e-6);
}

TEST_CASE("trajectory study pairs directions per checkpoint") {
  const RegressionObjective problem = small_regression(95);
  Rng rng(96);
  std::vector<LayeredParams> params;
  for (int i = 0; i < 2; ++i)
    params.push_back({0.2 * rng.normal_mat(4, 3), rng.normal_vec(3)});
  SliceSpec tmpl;
  tmpl.eta_max = 0.1;
  tmpl.resolution = 5;

  const auto study = trajectory_study(problem, params, {0, 100}, tmpl, rng, 1e-9);
  REQUIRE(study.size() == 2);
  CHECK(study[0].k == 0);
  CHECK(study[1].k == 100);
  for (const auto& cp : study) {
    CHECK(cp.joint.mode == SliceMode::joint);
    CHECK(cp.stackelberg.mode == SliceMode::stackelberg);
    CHECK(cp.joint.values.rows() == 5);
    // The paired surfaces share the grid; dominance must hold pointwise.
    for (Index i = 0; i < 5; ++i)
      for (Index j = 0; j < 5; ++j)
        CHECK(cp.stackelberg.values(i, j) <= cp.joint.values(i, j) + 1e-9);
  }

  CHECK(trajectory_study(problem, {}, {}, tmpl, rng).empty());
  CHECK_THROWS_WITH_AS(trajectory_study(problem, params, {0}, tmpl, rng),
                       doctest::Contains("snapshot"), std::invalid_argument);
}

TEST_CASE("hutchinson trace is exact for the isotropic quadratic") {
  const QuadObjective obj;
  Rng rng(13);
  const Mat M = rng.normal_mat(2, 2);
  const Vec w = rng.normal_vec(2);
  const double tr = hutchinson_trace(obj, M, w, 8, rng);
  CHECK(tr == doctest::Approx(0.2 * 4.0).epsilon(1e-6));
}
