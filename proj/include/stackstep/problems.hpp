#pragma once

#include <memory>
#include <vector>

#include "stackstep/activation.hpp"
#include "stackstep/objective.hpp"

namespace stackstep {

// ---------------------------------------------------------------------------
// Regression (sum-form objective):
//   f(M, w) = ||phi(X M) w - Y||^2 + (lambda/2) ||w||^2
// Minibatch estimators follow the N/|B| sum-form scaling, so the full batch
// reproduces the exact gradients; the lambda*w term is deterministic and is
// always included.
// ---------------------------------------------------------------------------

struct RegressionDataset {
  Mat X;          // N x m
  Vec Y;          // N
  double lambda;  // >= 0
};

double reg_loss(const RegressionDataset& d, const Activation& act, const Mat& M, const Vec& w);
Vec reg_grad_w(const RegressionDataset& d, const Activation& act, const Mat& M, const Vec& w);
Mat reg_subgrad_M(const RegressionDataset& d, const Activation& act, const Mat& M, const Vec& w);
std::pair<Mat, Vec> reg_batch_grads(const RegressionDataset& d, const Activation& act,
                                    const Mat& M, const Vec& w,
                                    const std::vector<Index>& batch);

class RegressionObjective : public StochasticObjective {
 public:
  RegressionObjective(RegressionDataset data, Activation act, Index head_dim,
                      ConstraintSet body, ConstraintSet head);

  Index body_rows() const override { return data_.X.cols(); }
  Index body_cols() const override { return n_; }
  Index data_size() const override { return data_.X.rows(); }

  double loss(const Mat& M, const Vec& w) const override;
  Vec grad_w(const Mat& M, const Vec& w) const override;
  Mat subgrad_M(const Mat& M, const Vec& w) const override;
  std::pair<Mat, Vec> sample_grads(const Mat& M, const Vec& w, Index batch_size,
                                   Rng& rng) const override;
  std::pair<Mat, Vec> batch_grads(const Mat& M, const Vec& w,
                                  const std::vector<Index>& batch) const override;

  const ConstraintSet& body_set() const override { return body_; }
  const ConstraintSet& head_set() const override { return head_; }

  std::optional<Vec> closed_form_best_response(const Mat& M) const override;
  std::optional<double> analytic_lambda() const override { return data_.lambda; }

  const RegressionDataset& data() const { return data_; }
  const Activation& activation() const { return act_; }

 private:
  RegressionDataset data_;
  Activation act_;
  Index n_;
  ConstraintSet body_, head_;
};

/// The synthetic regression instance: X is N x m with i.i.d. standard normal
/// entries, ground-truth body m x n and head n likewise, labels
/// y_i = phi(x_i^T M*) w* + eps_i with unit-normal noise.
RegressionDataset make_synthetic_regression(Index n_samples, Index m, Index n,
                                            const Activation& act, double lambda,
                                            std::uint64_t seed);

// ---------------------------------------------------------------------------
// Binary classification (mean-form objective):
//   f(M, w) = (1/N) sum_i [ -y_i log o_i - (1 - y_i) log(1 - o_i) ]
//             + (lambda/2) ||w||^2,   o_i = sigmoid(phi(x_i^T M) w).
// Requires a smooth activation; relu and leaky_relu are rejected.
// ---------------------------------------------------------------------------

struct ClassificationDataset {
  Mat X;          // N x m
  Vec Y;          // N, entries in {0, 1}
  double lambda;  // > 0
};

double clf_loss(const ClassificationDataset& d, const Activation& act, const Mat& M, const Vec& w);
Vec clf_grad_w(const ClassificationDataset& d, const Activation& act, const Mat& M, const Vec& w);
Mat clf_grad_M(const ClassificationDataset& d, const Activation& act, const Mat& M, const Vec& w);

class ClassificationObjective : public StochasticObjective {
 public:
  ClassificationObjective(ClassificationDataset data, Activation act, Index head_dim,
                          ConstraintSet body, ConstraintSet head);

  Index body_rows() const override { return data_.X.cols(); }
  Index body_cols() const override { return n_; }
  Index data_size() const override { return data_.X.rows(); }

  double loss(const Mat& M, const Vec& w) const override;
  Vec grad_w(const Mat& M, const Vec& w) const override;
  Mat subgrad_M(const Mat& M, const Vec& w) const override;
  std::pair<Mat, Vec> sample_grads(const Mat& M, const Vec& w, Index batch_size,
                                   Rng& rng) const override;
  std::pair<Mat, Vec> batch_grads(const Mat& M, const Vec& w,
                                  const std::vector<Index>& batch) const override;

  const ConstraintSet& body_set() const override { return body_; }
  const ConstraintSet& head_set() const override { return head_; }
  std::optional<double> analytic_lambda() const override { return data_.lambda; }

  const ClassificationDataset& data() const { return data_; }
  const Activation& activation() const { return act_; }

 private:
  ClassificationDataset data_;
  Activation act_;
  Index n_;
  ConstraintSet body_, head_;
};

ClassificationDataset make_synthetic_classification(Index n_samples, Index m, Index n,
                                                    const Activation& act, double lambda,
                                                    std::uint64_t seed);

// ---------------------------------------------------------------------------
// Convexification toy instance: a 1-D two-layer network with one data point,
//   f(M, w) = (M w - 1)^2 + 0.1 M^2   on  [0.01, 10] x [0.01, 10],
// whose joint Hessian is indefinite while the reduced objective
//   Phi(M) = (M min(10, 1/M) - 1)^2 + 0.1 M^2
// is 0.05-strongly convex.
// ---------------------------------------------------------------------------

double toy_f(double m, double w);
double toy_phi(double m);
double toy_w_star(double m);
/// Joint Hessian of toy_f: [[2w^2 + 0.2, 4Mw - 2], [4Mw - 2, 2M^2]].
Eigen::Matrix2d toy_hessian(double m, double w);

class ToyObjective : public StochasticObjective {
 public:
  ToyObjective();

  Index body_rows() const override { return 1; }
  Index body_cols() const override { return 1; }
  Index data_size() const override { return 1; }

  double loss(const Mat& M, const Vec& w) const override { return toy_f(M(0, 0), w(0)); }
  Vec grad_w(const Mat& M, const Vec& w) const override;
  Mat subgrad_M(const Mat& M, const Vec& w) const override;
  std::pair<Mat, Vec> sample_grads(const Mat& M, const Vec& w, Index batch_size,
                                   Rng& rng) const override;
  std::pair<Mat, Vec> batch_grads(const Mat& M, const Vec& w,
                                  const std::vector<Index>& batch) const override;

  const ConstraintSet& body_set() const override { return box_; }
  const ConstraintSet& head_set() const override { return box_; }

  std::optional<Vec> closed_form_best_response(const Mat& M) const override;
  std::optional<double> analytic_lambda() const override;

 private:
  ConstraintSet box_;
};

// ---------------------------------------------------------------------------
// Empirical problem constants.
// ---------------------------------------------------------------------------

/// Sample-based estimates of the structural constants. lambda uses the
/// analytic floor when the instance provides one; L, sigma2, rho come from
/// difference quotients and batch spread over sampled feasible points.
/// Estimates are labeled empirical and never silently replace user values.
ProblemConstants estimate_constants(const StochasticObjective& obj, int n_samples, Rng& rng);

}  // namespace stackstep
