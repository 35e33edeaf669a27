#pragma once

// Bicausal transport on scenario trees, weighted (adapted) total variation,
// the conditional weighting constants c_t and the bound chain between them.

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "awd/measures.hpp"
#include "awd/ot_exact.hpp"

namespace awd {

/// TV_w via inf over Cpl(mu,nu) of int (w(x)+w(y)) 1{x != y} dpi, in closed form.
double tv_weighted(const PathMeasure& mu, const PathMeasure& nu, const WeightSpec& w);
/// ATV_w, the same cost over bicausal couplings, in closed form through the density process.
double atv_weighted(const PathMeasure& mu, const PathMeasure& nu, const WeightSpec& w);

/// Cost functional for the bicausal dynamic program. Either part may be empty.
struct BicausalCost {
  /// Additive cost of moving from x_t to y_t at stage t (1-based).
  std::function<double(int t, std::span<const double> x, std::span<const double> y)> stage;
  /// Cost on full paths, charged at the leaves.
  std::function<double(std::span<const double> x, std::span<const double> y)> terminal;
  /// If set, the stage cost is |x-y|^p on R and the last-stage subproblems
  /// are solved by quantile matching.
  std::optional<double> quantile_power;
};

/// Optimal one-step coupling of two kernels, indexed by branch positions.
using PairPlans = std::map<std::pair<int, int>, Coupling>;

struct BicausalResult {
  double value = 0.0;
  PairPlans plans;  // filled only on request
};

BicausalResult bicausal_dp(const PathMeasure& mu, const PathMeasure& nu, const BicausalCost& cost,
                           bool keep_plans = false);

struct AdaptedResult {
  double value = 0.0;      // AW_p
  double value_pow = 0.0;  // AW_p^p
  PairPlans plans;
};

/// AW_p by backward induction over node pairs.
AdaptedResult adapted_wasserstein_dp(const PathMeasure& mu, const PathMeasure& nu, double p, bool keep_plans = false);

/// Joint coupling assembled from stagewise plans, over (mu leaf, nu leaf) indices.
Coupling assemble_coupling(const PathMeasure& mu, const PathMeasure& nu, const PairPlans& plans);

/// inf over first-stage couplings of int W_p^p(mu_{x_1}, nu_{y_1}) dpi_1, where the
/// kernels are the conditional laws of x_{2:T}. A lower bound for AW_p^p.
double first_stage_kernel_bound(const PathMeasure& mu, const PathMeasure& nu, double p);

struct CtVector {
  struct Ratio {
    int t = 0;
    int node = 0;  // node id in nu at depth t-1
    double ratio = 0.0;
  };
  int T = 1;
  std::vector<double> c;  // c[t] for t = 0..T; c[0] = c[1] = 0
  std::vector<Ratio> ratios;
  std::vector<int> mu_only_nodes;  // per t: mu-charged prefixes at depth t-1 that nu does not charge

  [[nodiscard]] double at(int t) const { return c.at(static_cast<std::size_t>(t)); }
};

/// c_t = max over nu-charged nodes at depth t-1 of E[w_t | prefix] / w_{t-1}(prefix) - 1,
/// clamped at 0. With PPower(p) this is the conditional moment ratio.
CtVector compute_ct(const PathMeasure& nu, const WeightSpec& w, const PathMeasure* mu = nullptr);
CtVector compute_ct(const PathMeasure& nu, double p, const PathMeasure* mu = nullptr);

/// 1 + 2 sum_{t=1}^{T-1} prod_{s=t+1}^{T} (1 + c_s).
double lambda_constant(const CtVector& ct);
double lambda_constant(std::span<const double> c_from_2, int T);

struct BoundCheck {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  [[nodiscard]] double slack() const { return rhs - lhs; }
  bool pass = true;
};

struct BoundReport {
  int T = 1;
  double p = 1.0;
  double tv = 0.0;
  double atv = 0.0;
  double tv_p_pow = 0.0;
  double atv_p_pow = 0.0;
  double aw_p_pow = 0.0;
  double w_p_pow = 0.0;
  CtVector ct;
  double lambda_plain = 1.0;
  double lambda_weighted = 1.0;
  double diam_pow = 0.0;  // max |x-y|_p^p over the joint support
  double tolerance = 1e-9;
  std::vector<BoundCheck> checks;

  [[nodiscard]] bool all_pass() const;
};

BoundReport bound_report(const PathMeasure& mu, const PathMeasure& nu, double p, double tolerance = 1e-9);

}  // namespace awd
