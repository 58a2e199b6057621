#include "stackstep/landscape.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <tuple>

#include "stackstep/stackelberg.hpp"

namespace stackstep {

std::string slice_mode_name(SliceMode mode) {
  return mode == SliceMode::joint ? "joint" : "stackelberg";
}

std::pair<Mat, Mat> random_directions(Index rows, Index cols, Rng& rng) {
  for (int attempt = 0; attempt < 16; ++attempt) {
    Mat d1 = rng.normal_mat(rows, cols);
    Mat d2 = rng.normal_mat(rows, cols);
    if (d1.norm() == 0.0 || d2.norm() == 0.0) continue;
    d1 /= d1.norm();
    d2 /= d2.norm();
    if ((d1 - d2).norm() > 1e-8) return {d1, d2};
  }
  throw std::runtime_error("random_directions: could not draw distinct directions");
}

CsvTrace SliceResult::surface_csv() const {
  CsvTrace trace;
  trace.columns = {"eta1", "eta2", "value", "feasible"};
  for (Index i = 0; i < values.rows(); ++i)
    for (Index j = 0; j < values.cols(); ++j)
      trace.add_row({etas(i), etas(j), values(i, j), feasible(i, j)});
  trace.meta = summary_json(0);
  return trace;
}

nlohmann::json SliceResult::summary_json(long k) const {
  nlohmann::json j;
  j["k"] = k;
  j["mode"] = slice_mode_name(mode);
  j["lambda_max"] = lambda_max;
  j["trace"] = trace;
  j["grad_norm"] = grad2d.norm();
  j["invalid_points"] = invalid_count;
  j["inner_tol"] = inner_tol;
  j["eta_max"] = etas.size() ? etas(etas.size() - 1) : 0.0;
  j["resolution"] = values.rows();
  return j;
}

SliceResult sweep(const SliceSpec& spec, const StochasticObjective& obj, const Vec* w_fixed,
                  double inner_tol) {
  if (spec.resolution < 3) throw std::invalid_argument("sweep: grid resolution must be >= 3");
  if ((spec.d1 - spec.d2).norm() == 0.0)
    throw std::invalid_argument("sweep: slice directions must be distinct");
  if (spec.mode == SliceMode::joint && w_fixed == nullptr)
    throw std::invalid_argument("sweep: joint mode needs a fixed head vector");

  SliceResult res;
  res.mode = spec.mode;
  res.inner_tol = inner_tol;
  res.etas = Vec::LinSpaced(spec.resolution, -spec.eta_max, spec.eta_max);
  res.values = Mat::Zero(spec.resolution, spec.resolution);
  res.feasible = Mat::Zero(spec.resolution, spec.resolution);

  // Evaluate at the projected point; warm starts hold per scanline so
  // stackelberg mode reuses the neighboring best response.
  Vec warm;
  bool have_warm = false;
  auto value_at = [&](double eta1, double eta2, bool* failed) {
    const Mat raw = spec.center + eta1 * spec.d1 + eta2 * spec.d2;
    const Mat point = obj.body_set().project(raw);
    *failed = false;
    if (spec.mode == SliceMode::joint) return obj.loss(point, *w_fixed);
    try {
      const BestResponse br =
          best_response(obj, point, inner_tol, have_warm ? &warm : nullptr);
      warm = br.w_star;
      have_warm = true;
      return obj.loss(point, br.w_star);
    } catch (const std::runtime_error&) {
      *failed = true;
      have_warm = false;
      return std::numeric_limits<double>::quiet_NaN();
    }
  };

  for (Index i = 0; i < spec.resolution; ++i) {
    have_warm = false;  // warm starts are per scanline
    for (Index j = 0; j < spec.resolution; ++j) {
      const Mat raw = spec.center + res.etas(i) * spec.d1 + res.etas(j) * spec.d2;
      res.feasible(i, j) = obj.body_set().contains(raw) ? 1.0 : 0.0;
      bool failed = false;
      res.values(i, j) = value_at(res.etas(i), res.etas(j), &failed);
      if (failed) {
        res.invalid_count += 1;
        res.feasible(i, j) = 0.0;
      }
    }
  }

  // Center statistics on the restricted two-variable function.
  have_warm = false;
  auto center_fn = [&](double eta1, double eta2) {
    bool failed = false;
    const double v = value_at(eta1, eta2, &failed);
    if (failed) throw std::runtime_error("sweep: inner solve failed at the slice center stencil");
    return v;
  };
  const double fd_h = std::max(1e-4, 1e-4 * spec.eta_max);
  const Hessian2d hess = fd_hessian_2d(center_fn, fd_h);
  res.hessian2d = hess.h;
  res.lambda_max = hess.lambda_max;
  res.trace = hess.trace;
  res.grad2d(0) = (center_fn(fd_h, 0.0) - center_fn(-fd_h, 0.0)) / (2.0 * fd_h);
  res.grad2d(1) = (center_fn(0.0, fd_h) - center_fn(0.0, -fd_h)) / (2.0 * fd_h);
  return res;
}

std::vector<CheckpointSlices> trajectory_study(const StochasticObjective& obj,
                                               const std::vector<LayeredParams>& params,
                                               const std::vector<long>& checkpoints,
                                               const SliceSpec& spec_template, Rng& rng,
                                               double inner_tol) {
  if (params.size() != checkpoints.size())
    throw std::invalid_argument("trajectory_study: one parameter snapshot per checkpoint");
  std::vector<CheckpointSlices> out;
  out.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    SliceSpec spec = spec_template;
    spec.center = params[i].M;
    std::tie(spec.d1, spec.d2) = random_directions(spec.center.rows(), spec.center.cols(), rng);

    CheckpointSlices pair;
    pair.k = checkpoints[i];
    spec.mode = SliceMode::joint;
    pair.joint = sweep(spec, obj, &params[i].w, inner_tol);
    spec.mode = SliceMode::stackelberg;
    pair.stackelberg = sweep(spec, obj, nullptr, inner_tol);
    out.push_back(std::move(pair));
  }
  return out;
}

double hutchinson_trace(const StochasticObjective& obj, const Mat& M, const Vec& w, int probes,
                        Rng& rng, double h) {
  if (probes < 1) throw std::invalid_argument("hutchinson_trace: need at least one probe");
  double acc = 0.0;
  for (int p = 0; p < probes; ++p) {
    // Rademacher probe; v^T H v by a central difference of the body gradient.
    Mat v = rng.normal_mat(M.rows(), M.cols());
    v = v.unaryExpr([](double x) { return x >= 0.0 ? 1.0 : -1.0; });
    const Mat gp = obj.subgrad_M(M + h * v, w);
    const Mat gm = obj.subgrad_M(M - h * v, w);
    acc += ((gp - gm) / (2.0 * h)).cwiseProduct(v).sum();
  }
  return acc / probes;
}

}  // namespace stackstep
