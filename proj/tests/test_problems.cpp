#include <doctest.h>

#include <cmath>
#include <vector>

#include "stackstep/numdiff.hpp"
#include "stackstep/problems.hpp"

using namespace stackstep;

namespace {

RegressionDataset one_point_dataset(double lambda) {
  RegressionDataset d;
  d.X = Mat::Constant(1, 1, 1.0);
  d.Y = Vec::Constant(1, 1.0);
  d.lambda = lambda;
  return d;
}

// All index sets of size k from {0, ..., n-1}, for exhaustive minibatch
// enumeration.
void enumerate_batches(Index n, Index k, std::vector<std::vector<Index>>& out,
                       std::vector<Index>& cur, Index start = 0) {
  if (static_cast<Index>(cur.size()) == k) {
    out.push_back(cur);
    return;
  }
  for (Index i = start; i < n; ++i) {
    cur.push_back(i);
    enumerate_batches(n, k, out, cur, i + 1);
    cur.pop_back();
  }
}

}  // namespace

TEST_CASE("regression loss and gradients") {
  SUBCASE("hand-computed 1-D value") {
    // f(1, w) = (w - 1)^2 + 0.05 w^2 at w = 1: 0 + 0.05.
    const RegressionDataset d = one_point_dataset(0.1);
    const Mat M = Mat::Constant(1, 1, 1.0);
    const Vec w = Vec::Constant(1, 1.0);
    CHECK(reg_loss(d, Activation::identity(), M, w) == doctest::Approx(0.05).epsilon(1e-12));
    // grad_w = 2(w - 1) + 0.1 w = 0.1; grad_M = 2(w - 1) w + 0 = 0 at M = 1, w = 1.
    CHECK(reg_grad_w(d, Activation::identity(), M, w)(0) == doctest::Approx(0.1));
    CHECK(reg_subgrad_M(d, Activation::identity(), M, w)(0, 0) == doctest::Approx(0.0));
  }

  SUBCASE("gradients match finite differences (smooth activations)") {
    for (const Activation& act :
         {Activation::identity(), Activation::tanh_act(), Activation::sigmoid_smooth()}) {
      const RegressionDataset d = make_synthetic_regression(12, 3, 2, act, 0.3, 5);
      Rng rng(17);
      for (int trial = 0; trial < 10; ++trial) {
        const Mat M = rng.normal_mat(3, 2);
        const Vec w = rng.normal_vec(2);
        const Vec gw = reg_grad_w(d, act, M, w);
        const Vec fw = fd_grad([&](const Vec& v) { return reg_loss(d, act, M, v); }, w);
        CHECK((gw - fw).norm() <= 1e-6 * (1.0 + fw.norm()));
        const Mat gm = reg_subgrad_M(d, act, M, w);
        const Mat fm = fd_grad_mat([&](const Mat& A) { return reg_loss(d, act, A, w); }, M);
        CHECK((gm - fm).norm() <= 1e-6 * (1.0 + fm.norm()));
      }
    }
  }

  SUBCASE("relu subgradient matches fd away from kinks") {
    const Activation act = Activation::relu();
    const RegressionDataset d = make_synthetic_regression(10, 3, 2, act, 0.2, 6);
    Rng rng(23);
    const Mat M = rng.normal_mat(3, 2);
    const Vec w = rng.normal_vec(2);
    // Generic random points have no pre-activation exactly at 0, so the fd
    // stencil stays on one side of each kink with overwhelming probability.
    const Mat pre = d.X * M;
    REQUIRE(pre.cwiseAbs().minCoeff() > 1e-3);
    const Mat gm = reg_subgrad_M(d, act, M, w);
    const Mat fm = fd_grad_mat([&](const Mat& A) { return reg_loss(d, act, A, w); }, M, 1e-6);
    CHECK((gm - fm).norm() <= 1e-5 * (1.0 + fm.norm()));
  }

  SUBCASE("dimension mismatches are named") {
    const RegressionDataset d = one_point_dataset(0.1);
    CHECK_THROWS_WITH_AS(reg_loss(d, Activation::identity(), Mat::Ones(2, 1), Vec::Ones(1)),
                         doctest::Contains("dimension mismatch"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(reg_loss(d, Activation::identity(), Mat::Ones(1, 2), Vec::Ones(1)),
                         doctest::Contains("dimension mismatch"), std::invalid_argument);
  }
}

TEST_CASE("regression minibatch estimator") {
  const Activation act = Activation::tanh_act();
  const RegressionDataset d = make_synthetic_regression(6, 2, 2, act, 0.4, 9);
  Rng rng(31);
  const Mat M = rng.normal_mat(2, 2);
  const Vec w = rng.normal_vec(2);

  SUBCASE("exhaustive enumeration is unbiased for every batch size") {
    const Mat full_m = reg_subgrad_M(d, act, M, w);
    const Vec full_w = reg_grad_w(d, act, M, w);
    for (Index b = 1; b <= 6; ++b) {
      std::vector<std::vector<Index>> batches;
      std::vector<Index> cur;
      enumerate_batches(6, b, batches, cur);
      Mat mean_m = Mat::Zero(2, 2);
      Vec mean_w = Vec::Zero(2);
      for (const auto& batch : batches) {
        const auto [gm, gw] = reg_batch_grads(d, act, M, w, batch);
        mean_m += gm;
        mean_w += gw;
      }
      mean_m /= static_cast<double>(batches.size());
      mean_w /= static_cast<double>(batches.size());
      CHECK((mean_m - full_m).norm() <= 1e-12 * (1.0 + full_m.norm()));
      CHECK((mean_w - full_w).norm() <= 1e-12 * (1.0 + full_w.norm()));
    }
  }

  SUBCASE("full batch reproduces the exact gradients") {
    const auto [gm, gw] = reg_batch_grads(d, act, M, w, {0, 1, 2, 3, 4, 5});
    CHECK((gm - reg_subgrad_M(d, act, M, w)).norm() <= 1e-14);
    CHECK((gw - reg_grad_w(d, act, M, w)).norm() <= 1e-14);
  }

  SUBCASE("empty batch rejected") {
    CHECK_THROWS_AS(reg_batch_grads(d, act, M, w, {}), std::invalid_argument);
  }
}

TEST_CASE("classification objective") {
  const Activation act = Activation::sigmoid_smooth();
  const ClassificationDataset d = make_synthetic_classification(14, 3, 2, act, 0.3, 8);

  SUBCASE("gradients match finite differences") {
    Rng rng(41);
    for (int trial = 0; trial < 10; ++trial) {
      const Mat M = rng.normal_mat(3, 2);
      const Vec w = rng.normal_vec(2);
      const Vec gw = clf_grad_w(d, act, M, w);
      const Vec fw = fd_grad([&](const Vec& v) { return clf_loss(d, act, M, v); }, w);
      CHECK((gw - fw).norm() <= 1e-6 * (1.0 + fw.norm()));
      const Mat gm = clf_grad_M(d, act, M, w);
      const Mat fm = fd_grad_mat([&](const Mat& A) { return clf_loss(d, act, A, w); }, M);
      CHECK((gm - fm).norm() <= 1e-6 * (1.0 + fm.norm()));
    }
  }

  SUBCASE("loss is stable at extreme logits") {
    ClassificationDataset big = d;
    big.X *= 100.0;
    Rng rng(3);
    const Mat M = 10.0 * rng.normal_mat(3, 2);
    const Vec w = 10.0 * rng.normal_vec(2);
    const double v = clf_loss(big, Activation::identity(), M, w);
    CHECK(std::isfinite(v));
    CHECK(v >= 0.0);
  }

  SUBCASE("nonsmooth activations rejected by name") {
    CHECK_THROWS_WITH_AS(clf_loss(d, Activation::relu(), Mat::Ones(3, 2), Vec::Ones(2)),
                         doctest::Contains("smooth"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(
        ClassificationObjective(d, Activation::leaky_relu(0.01), 2,
                                ConstraintSet::large_ball(1.0), ConstraintSet::large_ball(1.0)),
        doctest::Contains("smooth"), std::invalid_argument);
  }

  SUBCASE("non-binary labels rejected naming the row") {
    ClassificationDataset bad = d;
    bad.Y(3) = 0.5;
    CHECK_THROWS_WITH_AS(
        ClassificationObjective(bad, act, 2, ConstraintSet::large_ball(1.0),
                                ConstraintSet::large_ball(1.0)),
        doctest::Contains("row 3"), std::invalid_argument);
  }

  SUBCASE("lambda = 0 rejected") {
    ClassificationDataset bad = d;
    bad.lambda = 0.0;
    CHECK_THROWS_AS(ClassificationObjective(bad, act, 2, ConstraintSet::large_ball(1.0),
                                            ConstraintSet::large_ball(1.0)),
                    std::invalid_argument);
  }

  SUBCASE("minibatch mean-form unbiasedness by enumeration") {
    ClassificationObjective obj(d, act, 2, ConstraintSet::large_ball(1.0),
                                ConstraintSet::large_ball(1.0));
    Rng rng(5);
    const Mat M = rng.normal_mat(3, 2);
    const Vec w = rng.normal_vec(2);
    std::vector<std::vector<Index>> batches;
    std::vector<Index> cur;
    enumerate_batches(14, 2, batches, cur);
    Mat mean_m = Mat::Zero(3, 2);
    Vec mean_w = Vec::Zero(2);
    for (const auto& batch : batches) {
      const auto [gm, gw] = obj.batch_grads(M, w, batch);
      mean_m += gm;
      mean_w += gw;
    }
    mean_m /= static_cast<double>(batches.size());
    mean_w /= static_cast<double>(batches.size());
    CHECK((mean_m - clf_grad_M(d, act, M, w)).norm() <= 1e-12);
    CHECK((mean_w - clf_grad_w(d, act, M, w)).norm() <= 1e-12);
  }
}

TEST_CASE("toy convexification instance") {
  SUBCASE("joint Hessian is indefinite at (0.5, 0.5)") {
    const Eigen::Matrix2d h = toy_hessian(0.5, 0.5);
    CHECK(h.determinant() == doctest::Approx(-0.65).epsilon(1e-12));
    CHECK(h(0, 1) == h(1, 0));
  }

  SUBCASE("best response and reduced objective") {
    CHECK(toy_w_star(1.0) == doctest::Approx(1.0));
    CHECK(toy_w_star(0.05) == doctest::Approx(10.0));  // clipped at the box edge
    CHECK(toy_phi(1.0) == doctest::Approx(0.1));
    // For M < 0.1 the residual term wakes up: Phi(0.05) = (0.5 - 1)^2 + 0.1 * 0.0025.
    CHECK(toy_phi(0.05) == doctest::Approx(0.25 + 0.00025).epsilon(1e-12));
  }

  SUBCASE("reduced objective is 0.05-strongly convex by second differences") {
    const double h = 1e-3;
    for (double m = 0.02; m <= 9.9; m += 0.05) {
      const double second = (toy_phi(m + h) - 2.0 * toy_phi(m) + toy_phi(m - h)) / (h * h);
      CHECK(second >= 0.05 - 1e-6);
    }
  }

  SUBCASE("objective wrapper gradients match fd") {
    ToyObjective obj;
    Rng rng(13);
    for (int trial = 0; trial < 10; ++trial) {
      const Mat M = Mat::Constant(1, 1, 0.2 + 5.0 * rng.uniform());
      const Vec w = Vec::Constant(1, 0.2 + 5.0 * rng.uniform());
      const Vec fw = fd_grad([&](const Vec& v) { return obj.loss(M, v); }, w);
      CHECK(obj.grad_w(M, w)(0) == doctest::Approx(fw(0)).epsilon(1e-7));
      const Mat fm = fd_grad_mat([&](const Mat& A) { return obj.loss(A, w); }, M);
      CHECK(obj.subgrad_M(M, w)(0, 0) == doctest::Approx(fm(0, 0)).epsilon(1e-7));
    }
    CHECK(*obj.analytic_lambda() == doctest::Approx(2e-4));
    CHECK((*obj.closed_form_best_response(Mat::Constant(1, 1, 2.0)))(0) == doctest::Approx(0.5));
  }

  SUBCASE("box violations rejected") {
    CHECK_THROWS_AS(toy_f(0.001, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(toy_f(1.0, 11.0), std::invalid_argument);
    CHECK_THROWS_AS(toy_phi(10.5), std::invalid_argument);
  }
}

TEST_CASE("estimate_constants") {
  SUBCASE("toy instance uses the analytic strong-convexity floor") {
    ToyObjective obj;
    Rng rng(3);
    const ProblemConstants c = estimate_constants(obj, 16, rng);
    CHECK(c.lambda == doctest::Approx(2e-4));
    CHECK(c.L > 0.0);
    CHECK(c.rho_hat >= 2.0 * c.rho);
    CHECK(c.rho_hat >= 0.1);
    CHECK(c.empirical);
    CHECK(std::isfinite(c.L_phi()));
  }

  SUBCASE("regression instance yields finite positive constants") {
    const Activation act = Activation::tanh_act();
    RegressionDataset d = make_synthetic_regression(16, 3, 2, act, 0.5, 19);
    RegressionObjective obj(d, act, 2, ConstraintSet::frobenius_ball(3.0),
                            ConstraintSet::frobenius_ball(3.0));
    Rng rng(4);
    const ProblemConstants c = estimate_constants(obj, 12, rng);
    CHECK(c.lambda == doctest::Approx(0.5));
    CHECK(c.L > 0.0);
    CHECK(c.sigma2 > 0.0);
    CHECK(std::isfinite(c.rho));
    CHECK(c.samples == 12);
  }
}
