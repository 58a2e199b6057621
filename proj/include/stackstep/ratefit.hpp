#pragma once

#include <string>
#include <vector>

#include "stackstep/core.hpp"
#include "stackstep/trace.hpp"

namespace stackstep {

/// Least-squares power-law fit value ~ c * k^slope on the tail of a series.
struct RateFit {
  std::vector<double> k;      // tail iteration numbers actually used
  std::vector<double> value;  // tail values actually used
  double tail_fraction = 0.5;
  double slope = 0.0;       // fitted log-log exponent
  double stderr_ = 0.0;     // standard error of the slope
  double intercept = 0.0;   // log-space intercept
};

/// Fit log(value) vs log(k) by least squares on the final tail_fraction of
/// the series. Requires at least 10 tail points, k > 0 and value > 0 on the
/// tail; the error names the first offending row.
RateFit fit_rate(const std::vector<double>& k, const std::vector<double>& value,
                 double tail_fraction = 0.5);

/// Convenience: pull (k, quantity) out of a trace and fit. Rows where the
/// quantity is NaN (skipped evaluations) are dropped before fitting.
RateFit fit_rate(const CsvTrace& trace, const std::string& quantity,
                 double tail_fraction = 0.5);

/// Average a quantity across seeds at each k (traces must share their k
/// grid), mirroring the expectation in the convergence statements.
std::vector<double> mean_across_traces(const std::vector<CsvTrace>& traces,
                                       const std::string& quantity);

}  // namespace stackstep
