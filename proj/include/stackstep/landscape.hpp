#pragma once

#include <string>
#include <vector>

#include "stackstep/numdiff.hpp"
#include "stackstep/objective.hpp"
#include "stackstep/trace.hpp"

namespace stackstep {

enum class SliceMode { joint, stackelberg };

std::string slice_mode_name(SliceMode mode);

/// 2-D slice specification: evaluate the objective at
/// proj(center + eta1 d1 + eta2 d2) over a uniform grid.
struct SliceSpec {
  Mat center;
  Mat d1;
  Mat d2;
  double eta_max = 1.0;
  Index resolution = 41;  // points per axis, >= 3
  SliceMode mode = SliceMode::joint;
};

/// Two i.i.d. standard-normal directions, Frobenius-normalized; re-sampled in
/// the (measure-zero) event they coincide.
std::pair<Mat, Mat> random_directions(Index rows, Index cols, Rng& rng);

struct SliceResult {
  Mat values;                 // resolution x resolution, values(i, j) at (eta1_i, eta2_j)
  Mat feasible;               // 1 if the raw grid point lies in the body set
  Vec etas;                   // shared axis grid
  Eigen::Matrix2d hessian2d;  // slice Hessian at the center
  double lambda_max = 0.0;
  double trace = 0.0;
  Eigen::Vector2d grad2d = Eigen::Vector2d::Zero();
  Index invalid_count = 0;    // grid points where the inner solve failed
  double inner_tol = 0.0;
  SliceMode mode = SliceMode::joint;

  CsvTrace surface_csv() const;
  nlohmann::json summary_json(long k) const;
};

/// Fill the grid and the center curvature statistics. Joint mode evaluates
/// f(., w_fixed); stackelberg mode evaluates Phi with per-scanline warm
/// starts. Inner-solver failures mark the point invalid and the sweep
/// continues.
SliceResult sweep(const SliceSpec& spec, const StochasticObjective& obj,
                  const Vec* w_fixed = nullptr, double inner_tol = 1e-9);

/// Paired joint/stackelberg slices along a trajectory: each checkpoint uses
/// the SAME direction pair for both modes so curvature comparisons are
/// paired.
struct CheckpointSlices {
  long k = 0;
  SliceResult joint;
  SliceResult stackelberg;
};

std::vector<CheckpointSlices> trajectory_study(const StochasticObjective& obj,
                                               const std::vector<LayeredParams>& params,
                                               const std::vector<long>& checkpoints,
                                               const SliceSpec& spec_template, Rng& rng,
                                               double inner_tol = 1e-9);

/// Hutchinson estimate of the full-Hessian trace of M -> f(M, w) at fixed w,
/// using central-difference Hessian-vector products on the body gradient.
/// Smooth activations only.
double hutchinson_trace(const StochasticObjective& obj, const Mat& M, const Vec& w,
                        int probes, Rng& rng, double h = 1e-5);

}  // namespace stackstep
