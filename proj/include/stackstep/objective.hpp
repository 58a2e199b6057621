#pragma once

#include <memory>
#include <optional>
#include <utility>

#include "stackstep/constraints.hpp"
#include "stackstep/core.hpp"

namespace stackstep {

/// Partitioned network parameters: body matrix M (m x n) and head vector w (n).
struct LayeredParams {
  Mat M;
  Vec w;
};

/// Structural constants of a problem instance (Assumptions 1-4 as numbers).
/// Estimated values carry the sample count they were measured with; analytic
/// values have samples = 0.
struct ProblemConstants {
  double lambda = 0.0;      // lower-level strong convexity
  double L = 0.0;           // gradient Lipschitz constant
  double sigma2 = 0.0;      // stochastic gradient variance bound
  double rho = 0.0;         // weak convexity of Phi
  double rho_hat = 0.0;     // Moreau parameter, > rho
  double lambda_phi = 0.0;  // strong convexity of Phi (0 when absent)
  int samples = 0;
  bool empirical = false;

  double L_phi() const { return lambda > 0.0 ? L * (lambda + 1.0) / lambda : 0.0; }
};

/// A layered stochastic objective: exposes the exact loss f(M, w), the
/// full-batch (sub)gradients, minibatch samplers, constraint sets, and an
/// optional closed-form best response.
class StochasticObjective {
 public:
  virtual ~StochasticObjective() = default;

  virtual Index body_rows() const = 0;  // m
  virtual Index body_cols() const = 0;  // n
  virtual Index data_size() const = 0;  // N (1 for deterministic instances)

  virtual double loss(const Mat& M, const Vec& w) const = 0;
  virtual Vec grad_w(const Mat& M, const Vec& w) const = 0;
  virtual Mat subgrad_M(const Mat& M, const Vec& w) const = 0;

  /// Minibatch (sub)gradients (G_M, grad_w of the sample loss) from a batch
  /// of the given size drawn with rng. Unbiased for the full-batch pair.
  virtual std::pair<Mat, Vec> sample_grads(const Mat& M, const Vec& w,
                                           Index batch_size, Rng& rng) const = 0;

  /// Deterministic minibatch gradients for an explicit index set (used by
  /// enumeration tests).
  virtual std::pair<Mat, Vec> batch_grads(const Mat& M, const Vec& w,
                                          const std::vector<Index>& batch) const = 0;

  virtual const ConstraintSet& body_set() const = 0;
  virtual const ConstraintSet& head_set() const = 0;

  /// Unconstrained minimizer of f(M, .) when available in closed form.
  virtual std::optional<Vec> closed_form_best_response(const Mat&) const {
    return std::nullopt;
  }

  /// Analytic strong-convexity floor for f(M, .), when known.
  virtual std::optional<double> analytic_lambda() const { return std::nullopt; }
};

}  // namespace stackstep
