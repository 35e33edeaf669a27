#pragma once

#include <span>

namespace awd {

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;  // standard error of the slope, 0 with two points
};

/// Ordinary least squares y = intercept + slope * x.
LinearFit fit_line(std::span<const double> x, std::span<const double> y);

/// Least squares on (log x, log y).
LinearFit fit_loglog(std::span<const double> x, std::span<const double> y);

}  // namespace awd
