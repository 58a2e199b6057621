#include "stackstep/problems.hpp"

#include <cmath>
#include <stdexcept>

namespace stackstep {

namespace {

void check_dims(const Mat& X, const Vec& Y, const Mat& M, const Vec& w) {
  if (X.cols() != M.rows())
    throw std::invalid_argument("feature/body dimension mismatch: X has " +
                                std::to_string(X.cols()) + " columns, M has " +
                                std::to_string(M.rows()) + " rows");
  if (M.cols() != w.size())
    throw std::invalid_argument("body/head dimension mismatch: M has " +
                                std::to_string(M.cols()) + " columns, w has " +
                                std::to_string(w.size()) + " entries");
  if (X.rows() != Y.size())
    throw std::invalid_argument("feature/label count mismatch");
}

Mat take_rows(const Mat& X, const std::vector<Index>& rows) {
  Mat out(static_cast<Index>(rows.size()), X.cols());
  for (Index i = 0; i < out.rows(); ++i) out.row(i) = X.row(rows[static_cast<std::size_t>(i)]);
  return out;
}

Vec take_entries(const Vec& Y, const std::vector<Index>& rows) {
  Vec out(static_cast<Index>(rows.size()));
  for (Index i = 0; i < out.size(); ++i) out(i) = Y(rows[static_cast<std::size_t>(i)]);
  return out;
}

}  // namespace

// --- regression -------------------------------------------------------------

double reg_loss(const RegressionDataset& d, const Activation& act, const Mat& M, const Vec& w) {
  check_dims(d.X, d.Y, M, w);
  const Mat feats = act.apply(d.X * M);
  const Vec resid = feats * w - d.Y;
  return resid.squaredNorm() + 0.5 * d.lambda * w.squaredNorm();
}

Vec reg_grad_w(const RegressionDataset& d, const Activation& act, const Mat& M, const Vec& w) {
  check_dims(d.X, d.Y, M, w);
  const Mat feats = act.apply(d.X * M);
  return 2.0 * feats.transpose() * (feats * w - d.Y) + d.lambda * w;
}

Mat reg_subgrad_M(const RegressionDataset& d, const Activation& act, const Mat& M, const Vec& w) {
  check_dims(d.X, d.Y, M, w);
  const Mat pre = d.X * M;
  const Mat feats = act.apply(pre);
  const Vec resid = feats * w - d.Y;
  return 2.0 * d.X.transpose() * ((resid * w.transpose()).cwiseProduct(act.subgrad(pre)));
}

std::pair<Mat, Vec> reg_batch_grads(const RegressionDataset& d, const Activation& act,
                                    const Mat& M, const Vec& w,
                                    const std::vector<Index>& batch) {
  if (batch.empty()) throw std::invalid_argument("reg_batch_grads: empty batch");
  const Mat Xb = take_rows(d.X, batch);
  const Vec Yb = take_entries(d.Y, batch);
  const double scale = static_cast<double>(d.X.rows()) / static_cast<double>(batch.size());
  const Mat pre = Xb * M;
  const Mat feats = act.apply(pre);
  const Vec resid = feats * w - Yb;
  Mat gm = 2.0 * scale * Xb.transpose() * ((resid * w.transpose()).cwiseProduct(act.subgrad(pre)));
  Vec gw = 2.0 * scale * feats.transpose() * resid + d.lambda * w;
  return {std::move(gm), std::move(gw)};
}

RegressionObjective::RegressionObjective(RegressionDataset data, Activation act,
                                         Index head_dim, ConstraintSet body,
                                         ConstraintSet head)
    : data_(std::move(data)), act_(act), n_(head_dim), body_(body), head_(head) {
  if (data_.X.rows() < 1) throw std::invalid_argument("regression: need at least one sample");
  if (!data_.X.allFinite() || !data_.Y.allFinite())
    throw std::invalid_argument("regression: non-finite dataset entries");
  if (data_.lambda < 0.0) throw std::invalid_argument("regression: lambda must be >= 0");
}

double RegressionObjective::loss(const Mat& M, const Vec& w) const {
  return reg_loss(data_, act_, M, w);
}

Vec RegressionObjective::grad_w(const Mat& M, const Vec& w) const {
  return reg_grad_w(data_, act_, M, w);
}

Mat RegressionObjective::subgrad_M(const Mat& M, const Vec& w) const {
  return reg_subgrad_M(data_, act_, M, w);
}

std::pair<Mat, Vec> RegressionObjective::sample_grads(const Mat& M, const Vec& w,
                                                      Index batch_size, Rng& rng) const {
  return reg_batch_grads(data_, act_, M, w, rng.sample_indices(data_size(), batch_size));
}

std::pair<Mat, Vec> RegressionObjective::batch_grads(const Mat& M, const Vec& w,
                                                     const std::vector<Index>& batch) const {
  return reg_batch_grads(data_, act_, M, w, batch);
}

std::optional<Vec> RegressionObjective::closed_form_best_response(const Mat& M) const {
  // Normal equations of the ridge problem: (Phi^T Phi + (lambda/2) I) w = Phi^T Y.
  const Mat feats = act_.apply(data_.X * M);
  Mat gram = feats.transpose() * feats;
  gram.diagonal().array() += 0.5 * data_.lambda;
  Eigen::LLT<Mat> llt(gram);
  if (llt.info() != Eigen::Success) {
    if (data_.lambda <= 0.0)
      throw std::runtime_error(
          "best response: singular Gram matrix with lambda = 0; lower-level "
          "strong convexity requires lambda > 0 or full-rank features");
    throw std::runtime_error("best response: ridge normal equations not SPD");
  }
  return llt.solve(feats.transpose() * data_.Y);
}

RegressionDataset make_synthetic_regression(Index n_samples, Index m, Index n,
                                            const Activation& act, double lambda,
                                            std::uint64_t seed) {
  Rng rng(seed);
  RegressionDataset d;
  d.X = rng.normal_mat(n_samples, m);
  const Mat M_star = rng.normal_mat(m, n);
  const Vec w_star = rng.normal_vec(n);
  d.Y = act.apply(d.X * M_star) * w_star + rng.normal_vec(n_samples);
  d.lambda = lambda;
  return d;
}

// --- classification ----------------------------------------------------------

namespace {

void require_smooth(const Activation& act) {
  if (!act.smooth())
    throw std::invalid_argument(
        "classification requires a Lipschitz, differentiable, smooth activation; '" +
        act.name() + "' is not");
}

void require_binary(const Vec& Y) {
  for (Index i = 0; i < Y.size(); ++i)
    if (Y(i) != 0.0 && Y(i) != 1.0)
      throw std::invalid_argument("classification labels must be 0 or 1 (row " +
                                  std::to_string(i) + ")");
}

inline double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

/// Numerically stable -y log s(t) - (1-y) log(1 - s(t)).
inline double logistic_nll(double t, double y) {
  const double soft = t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
  return soft - y * t;
}

}  // namespace

double clf_loss(const ClassificationDataset& d, const Activation& act, const Mat& M, const Vec& w) {
  require_smooth(act);
  check_dims(d.X, d.Y, M, w);
  const Vec logits = act.apply(d.X * M) * w;
  double total = 0.0;
  for (Index i = 0; i < logits.size(); ++i) total += logistic_nll(logits(i), d.Y(i));
  return total / static_cast<double>(d.X.rows()) + 0.5 * d.lambda * w.squaredNorm();
}

Vec clf_grad_w(const ClassificationDataset& d, const Activation& act, const Mat& M, const Vec& w) {
  require_smooth(act);
  check_dims(d.X, d.Y, M, w);
  const Mat feats = act.apply(d.X * M);
  const Vec probs = (feats * w).unaryExpr([](double t) { return sigmoid(t); });
  return feats.transpose() * (probs - d.Y) / static_cast<double>(d.X.rows()) + d.lambda * w;
}

Mat clf_grad_M(const ClassificationDataset& d, const Activation& act, const Mat& M, const Vec& w) {
  require_smooth(act);
  check_dims(d.X, d.Y, M, w);
  const Mat pre = d.X * M;
  const Mat feats = act.apply(pre);
  const Vec err = (feats * w).unaryExpr([](double t) { return sigmoid(t); }) - d.Y;
  return d.X.transpose() * ((err * w.transpose()).cwiseProduct(act.subgrad(pre))) /
         static_cast<double>(d.X.rows());
}

ClassificationObjective::ClassificationObjective(ClassificationDataset data, Activation act,
                                                 Index head_dim, ConstraintSet body,
                                                 ConstraintSet head)
    : data_(std::move(data)), act_(act), n_(head_dim), body_(body), head_(head) {
  require_smooth(act_);
  require_binary(data_.Y);
  if (!(data_.lambda > 0.0))
    throw std::invalid_argument("classification: lambda must be > 0 for lower-level strong convexity");
}

double ClassificationObjective::loss(const Mat& M, const Vec& w) const {
  return clf_loss(data_, act_, M, w);
}

Vec ClassificationObjective::grad_w(const Mat& M, const Vec& w) const {
  return clf_grad_w(data_, act_, M, w);
}

Mat ClassificationObjective::subgrad_M(const Mat& M, const Vec& w) const {
  return clf_grad_M(data_, act_, M, w);
}

std::pair<Mat, Vec> ClassificationObjective::batch_grads(const Mat& M, const Vec& w,
                                                         const std::vector<Index>& batch) const {
  if (batch.empty()) throw std::invalid_argument("clf batch_grads: empty batch");
  ClassificationDataset sub;
  sub.X = take_rows(data_.X, batch);
  sub.Y = take_entries(data_.Y, batch);
  sub.lambda = data_.lambda;
  // Mean-form objective: the minibatch gradients are the subsampled means,
  // regularizer included deterministically.
  return {clf_grad_M(sub, act_, M, w), clf_grad_w(sub, act_, M, w)};
}

std::pair<Mat, Vec> ClassificationObjective::sample_grads(const Mat& M, const Vec& w,
                                                          Index batch_size, Rng& rng) const {
  return batch_grads(M, w, rng.sample_indices(data_size(), batch_size));
}

ClassificationDataset make_synthetic_classification(Index n_samples, Index m, Index n,
                                                    const Activation& act, double lambda,
                                                    std::uint64_t seed) {
  Rng rng(seed);
  ClassificationDataset d;
  d.X = rng.normal_mat(n_samples, m);
  const Mat M_star = rng.normal_mat(m, n);
  const Vec w_star = rng.normal_vec(n);
  const Vec logits = act.apply(d.X * M_star) * w_star;
  d.Y.resize(n_samples);
  for (Index i = 0; i < n_samples; ++i)
    d.Y(i) = rng.uniform() < sigmoid(logits(i)) ? 1.0 : 0.0;
  d.lambda = lambda;
  return d;
}

// --- toy instance -------------------------------------------------------------

namespace {
void check_toy_box(double v, const char* name) {
  if (v < 0.01 || v > 10.0)
    throw std::invalid_argument(std::string(name) + " outside [0.01, 10]");
}
}  // namespace

double toy_f(double m, double w) {
  check_toy_box(m, "M");
  check_toy_box(w, "w");
  return (m * w - 1.0) * (m * w - 1.0) + 0.1 * m * m;
}

double toy_w_star(double m) {
  check_toy_box(m, "M");
  return std::min(10.0, 1.0 / m);
}

double toy_phi(double m) {
  check_toy_box(m, "M");
  const double t = m * toy_w_star(m) - 1.0;
  return t * t + 0.1 * m * m;
}

Eigen::Matrix2d toy_hessian(double m, double w) {
  Eigen::Matrix2d h;
  h << 2.0 * w * w + 0.2, 4.0 * m * w - 2.0, 4.0 * m * w - 2.0, 2.0 * m * m;
  return h;
}

ToyObjective::ToyObjective() : box_(ConstraintSet::box(0.01, 10.0)) {}

Vec ToyObjective::grad_w(const Mat& M, const Vec& w) const {
  Vec g(1);
  g(0) = 2.0 * (M(0, 0) * w(0) - 1.0) * M(0, 0);
  return g;
}

Mat ToyObjective::subgrad_M(const Mat& M, const Vec& w) const {
  Mat g(1, 1);
  g(0, 0) = 2.0 * (M(0, 0) * w(0) - 1.0) * w(0) + 0.2 * M(0, 0);
  return g;
}

std::pair<Mat, Vec> ToyObjective::sample_grads(const Mat& M, const Vec& w, Index, Rng&) const {
  // Single data point: the stochastic gradients are the exact ones.
  return {subgrad_M(M, w), grad_w(M, w)};
}

std::pair<Mat, Vec> ToyObjective::batch_grads(const Mat& M, const Vec& w,
                                              const std::vector<Index>&) const {
  return {subgrad_M(M, w), grad_w(M, w)};
}

std::optional<Vec> ToyObjective::closed_form_best_response(const Mat& M) const {
  Vec w(1);
  w(0) = 1.0 / M(0, 0);  // unconstrained minimizer; caller projects onto [0.01, 10]
  return w;
}

std::optional<double> ToyObjective::analytic_lambda() const {
  // d^2 f / dw^2 = 2 M^2 >= 2 * 0.01^2 on the box.
  return 2.0 * 0.01 * 0.01;
}

}  // namespace stackstep
