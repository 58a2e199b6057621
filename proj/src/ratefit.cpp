#include "stackstep/ratefit.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace stackstep {

RateFit fit_rate(const std::vector<double>& k, const std::vector<double>& value,
                 double tail_fraction) {
  if (k.size() != value.size())
    throw std::invalid_argument("fit_rate: k and value lengths differ");
  if (!(tail_fraction > 0.0 && tail_fraction <= 1.0))
    throw std::invalid_argument("fit_rate: tail_fraction must lie in (0, 1]");

  const std::size_t n = k.size();
  const std::size_t tail = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(tail_fraction * static_cast<double>(n))));
  const std::size_t start = n - tail;
  if (tail < 10)
    throw std::invalid_argument("fit_rate: tail has " + std::to_string(tail) +
                                " points; need at least 10 for a slope estimate");

  RateFit fit;
  fit.tail_fraction = tail_fraction;
  std::vector<double> lx, ly;
  lx.reserve(tail);
  ly.reserve(tail);
  for (std::size_t i = start; i < n; ++i) {
    if (!(k[i] > 0.0))
      throw std::invalid_argument("fit_rate: row " + std::to_string(i) + " has k = " +
                                  std::to_string(k[i]) + "; log fit needs k > 0");
    if (!(value[i] > 0.0))
      throw std::invalid_argument("fit_rate: row " + std::to_string(i) + " has value = " +
                                  std::to_string(value[i]) + "; log fit needs value > 0");
    fit.k.push_back(k[i]);
    fit.value.push_back(value[i]);
    lx.push_back(std::log(k[i]));
    ly.push_back(std::log(value[i]));
  }

  const double m = static_cast<double>(tail);
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < tail; ++i) {
    sx += lx[i];
    sy += ly[i];
  }
  const double mx = sx / m, my = sy / m;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < tail; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  const auto [lx_min, lx_max] = std::minmax_element(lx.begin(), lx.end());
  if (*lx_min == *lx_max)
    throw std::invalid_argument("fit_rate: all tail k values coincide; slope undefined");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;

  double sse = 0.0;
  for (std::size_t i = 0; i < tail; ++i) {
    const double r = ly[i] - (fit.intercept + fit.slope * lx[i]);
    sse += r * r;
  }
  fit.stderr_ = tail > 2 ? std::sqrt(sse / (m - 2.0) / sxx) : 0.0;
  return fit;
}

RateFit fit_rate(const CsvTrace& trace, const std::string& quantity, double tail_fraction) {
  const std::vector<double> ks = trace.column("k");
  const std::vector<double> vals = trace.column(quantity);
  std::vector<double> k, v;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (std::isnan(vals[i])) continue;
    k.push_back(ks[i]);
    v.push_back(vals[i]);
  }
  return fit_rate(k, v, tail_fraction);
}

std::vector<double> mean_across_traces(const std::vector<CsvTrace>& traces,
                                       const std::string& quantity) {
  if (traces.empty()) throw std::invalid_argument("mean_across_traces: no traces");
  const std::vector<double> k0 = traces.front().column("k");
  std::vector<double> acc(k0.size(), 0.0);
  for (const auto& trace : traces) {
    const std::vector<double> ks = trace.column("k");
    if (ks != k0)
      throw std::invalid_argument("mean_across_traces: traces do not share a k grid");
    const std::vector<double> vals = trace.column(quantity);
    for (std::size_t i = 0; i < vals.size(); ++i) acc[i] += vals[i];
  }
  for (double& v : acc) v /= static_cast<double>(traces.size());
  return acc;
}

}  // namespace stackstep
