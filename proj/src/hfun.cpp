#include "awd/hfun.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "awd/error.hpp"

namespace awd {

namespace {

constexpr double kParamTol = 1e-12;

// H per unit of (l + u).
double unit(const HParams& h, double y) {
  return (h.lambda - h.kappa) * std::abs(1.0 - h.b * y) +
         2.0 * h.kappa * (h.a * std::min(1.0, y) - std::min(1.0, h.b * y));
}

}  // namespace

HParams HParams::make(double l, double c, double lambda, double kappa, double a, double b) {
  auto finite = [](double x) { return std::isfinite(x); };
  require(finite(l) && finite(c) && finite(lambda) && finite(kappa) && finite(a) && finite(b), ErrorKind::InvalidParams,
          "H parameters must be finite");
  require(l >= 0.0, ErrorKind::InvalidParams, "l must be >= 0");
  require(c >= 0.0, ErrorKind::InvalidParams, "c must be >= 0");
  require(kappa >= 0.0, ErrorKind::InvalidParams, "kappa must be >= 0");
  require(lambda >= kappa, ErrorKind::InvalidParams, "lambda must be >= kappa");
  require(b >= 0.0, ErrorKind::InvalidParams, "b must be >= 0");
  require(a >= -kParamTol && a <= std::min(1.0, b) + kParamTol, ErrorKind::InvalidParams,
          "a must lie in [0, min(1, b)]");
  return HParams{l, c, lambda, kappa, std::clamp(a, 0.0, std::min(1.0, b)), b};
}

double h_eval(const HParams& h, double u, double y) { return (h.l + u) * unit(h, y); }

double h_inf_branch(const HParams& h, HBranch branch) {
  const double lk = h.lambda - h.kappa;
  if (branch == HBranch::Low) {
    return h.l * (std::abs(1.0 - h.b) * lk + 2.0 * h.kappa * (h.b + h.c) * (h.a - 1.0));
  }
  return h.l * (std::abs(1.0 - h.b) * lk + 2.0 * h.kappa * (1.0 + h.c) * (h.a / h.b - 1.0));
}

double h_inf_closed(const HParams& h) { return h_inf_branch(h, h.b <= 1.0 ? HBranch::Low : HBranch::High); }

double h_lower_cor(const HParams& h) {
  const double k1 = 2.0 * h.kappa * (h.c + 1.0);
  return h.l * (std::abs(1.0 - h.b) * (h.lambda - h.kappa - k1) + k1 * (h.a - std::min(h.b, 1.0)));
}

HOracle h_inf_oracle_detail(const HParams& h, int resolution) {
  require(resolution >= 50, ErrorKind::ResolutionTooCoarse,
          "oracle resolution " + std::to_string(resolution) + " is below 50");
  const double ymax = h.b > 0.0 ? std::max(4.0, 4.0 / h.b) : 4.0;
  std::vector<double> ys;
  ys.reserve(static_cast<std::size_t>(resolution) + 2);
  for (int k = 0; k <= resolution; ++k) ys.push_back(ymax * k / resolution);
  ys.push_back(1.0);
  std::sort(ys.begin(), ys.end());
  ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
  std::vector<double> g(ys.size());
  for (std::size_t k = 0; k < ys.size(); ++k) g[k] = unit(h, ys[k]);
  const double budget = h.c * h.l;

  HOracle best;
  best.value = std::numeric_limits<double>::infinity();
  auto consider = [&](double value, double y1, double y2, double q) {
    if (value < best.value) best = HOracle{value, y1, y2, q};
  };
  const auto one = static_cast<std::size_t>(std::lower_bound(ys.begin(), ys.end(), 1.0) - ys.begin());
  consider(h.l * g[one] + budget * std::min(0.0, g[one]), 1.0, 1.0, 1.0);
  for (std::size_t i = 0; i < one; ++i) {
    for (std::size_t j = one + 1; j < ys.size(); ++j) {
      const double q = (ys[j] - 1.0) / (ys[j] - ys[i]);
      const double mean = q * g[i] + (1.0 - q) * g[j];
      consider(h.l * mean + budget * std::min({0.0, g[i], g[j]}), ys[i], ys[j], q);
    }
  }

  // y2 -> infinity: mass on y2 vanishes while (1-q) y2 -> 1 - y1.
  const double far = 1e6 * ymax;
  const double slope = (unit(h, 2.0 * far) - unit(h, far)) / far;
  const double g_far = unit(h, far);
  for (std::size_t i = 0; i < one; ++i) {
    const double u_gain = slope == 0.0 ? std::min({0.0, g[i], g_far}) : std::min(0.0, g[i]);
    consider(h.l * (g[i] + slope * (1.0 - ys[i])) + budget * u_gain, ys[i],
             std::numeric_limits<double>::infinity(), 1.0);
  }
  return best;
}

double h_inf_oracle(const HParams& h, int resolution) { return h_inf_oracle_detail(h, resolution).value; }

}  // namespace awd
