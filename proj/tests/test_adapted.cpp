#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "awd/adapted.hpp"
#include "awd/error.hpp"
#include "awd/ot_exact.hpp"
#include "support/oracles.hpp"

using namespace awd;

namespace {

std::pair<PathMeasure, PathMeasure> random_pair(std::mt19937_64& rng, int T, int d, bool lattice) {
  oracle::TreeShape s;
  s.T = T;
  s.d = d;
  s.lattice = lattice;
  auto mu = oracle::random_tree(rng, s);
  auto nu = oracle::random_tree(rng, s);
  return {std::move(mu), std::move(nu)};
}

}  // namespace

TEST(AdaptedDp, MatchesExhaustiveBicausalLp) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 25; ++trial) {
    const int T = 1 + trial % 3;
    auto [mu, nu] = random_pair(rng, T, 1, trial % 2 == 0);
    if (mu.leaf_count() * nu.leaf_count() > 60) continue;
    const double p = trial % 2 == 0 ? 1.0 : 2.0;
    const auto lp = oracle::bicausal_lp(mu, nu, [p](const std::vector<double>& x, const std::vector<double>& y) {
      return path_cost(x, y, p);
    });
    ASSERT_TRUE(lp.feasible);
    EXPECT_NEAR(adapted_wasserstein_dp(mu, nu, p).value_pow, lp.value, 1e-9);
  }
}

TEST(AdaptedDp, DominatesWassersteinAndEqualsItForOneStage) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 40; ++trial) {
    const int T = 1 + trial % 3;
    auto [mu, nu] = random_pair(rng, T, 1 + trial % 2, trial % 2 == 0);
    for (double p : {1.0, 2.0}) {
      const double aw = adapted_wasserstein_dp(mu, nu, p).value_pow;
      const double w = wasserstein_pow(mu, nu, p);
      EXPECT_GE(aw, w - 1e-10);
      if (T == 1) EXPECT_NEAR(aw, w, 1e-10);
      EXPECT_GE(aw, first_stage_kernel_bound(mu, nu, p) - 1e-10);
    }
  }
}

TEST(AdaptedDp, SymmetricAndZeroOnDiagonal) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    auto [mu, nu] = random_pair(rng, 3, 1, false);
    EXPECT_NEAR(adapted_wasserstein_dp(mu, mu, 1.0).value, 0.0, 1e-12);
    EXPECT_NEAR(adapted_wasserstein_dp(mu, nu, 2.0).value, adapted_wasserstein_dp(nu, mu, 2.0).value, 1e-10);
  }
}

TEST(AdaptedDp, PlansAssembleToABicausalCoupling) {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 15; ++trial) {
    auto [mu, nu] = random_pair(rng, 2 + trial % 2, 1, trial % 2 == 0);
    const auto r = adapted_wasserstein_dp(mu, nu, 1.0, true);
    const auto pi = assemble_coupling(mu, nu, r.plans);
    const auto pm = mu.paths();
    const auto pn = nu.paths();
    const auto rows = pi.row_sums();
    const auto cols = pi.col_sums();
    for (std::size_t i = 0; i < pm.size(); ++i) EXPECT_NEAR(rows[i], pm[i].prob, 1e-12);
    for (std::size_t j = 0; j < pn.size(); ++j) EXPECT_NEAR(cols[j], pn[j].prob, 1e-12);
    double cost = 0.0;
    for (const auto& e : pi.entries) {
      cost += e.mass * path_cost(pm[static_cast<std::size_t>(e.i)].x, pn[static_cast<std::size_t>(e.j)].x, 1.0);
    }
    EXPECT_NEAR(cost, r.value_pow, 1e-10);
  }
}

TEST(AdaptedDp, QuantileShortcutAgreesWithGenericSolver) {
  std::mt19937_64 rng(15);
  for (int trial = 0; trial < 20; ++trial) {
    auto [mu, nu] = random_pair(rng, 2, 1, false);
    const double p = 1.0 + trial % 3;
    BicausalCost generic;
    generic.stage = [p](int, std::span<const double> x, std::span<const double> y) { return path_cost(x, y, p); };
    BicausalCost quant;
    quant.quantile_power = p;
    EXPECT_NEAR(bicausal_dp(mu, nu, generic).value, bicausal_dp(mu, nu, quant).value, 1e-10);
  }
}

TEST(TotalVariation, ClosedFormsAgainstOptimizers) {
  std::mt19937_64 rng(16);
  for (int trial = 0; trial < 40; ++trial) {
    auto [mu, nu] = random_pair(rng, 1 + trial % 3, 1, trial % 2 == 0);
    const auto w = WeightSpec::ppower(1.0 + trial % 2);
    auto cost = [&](std::span<const double> x, std::span<const double> y) {
      return std::equal(x.begin(), x.end(), y.begin(), y.end()) ? 0.0 : w.eval(x) + w.eval(y);
    };
    BicausalCost bc;
    bc.terminal = cost;
    EXPECT_NEAR(atv_weighted(mu, nu, w), bicausal_dp(mu, nu, bc).value, 1e-9);
    EXPECT_LE(tv_weighted(mu, nu, w), atv_weighted(mu, nu, w) + 1e-12);
  }
}

TEST(TotalVariation, UnweightedTvIsTwiceTheMassMismatch) {
  const auto mu = PathMeasure::from_paths(1, 1, {{{0.0}, 0.5}, {{1.0}, 0.5}});
  const auto nu = PathMeasure::from_paths(1, 1, {{{0.0}, 0.2}, {{2.0}, 0.8}});
  EXPECT_NEAR(tv_weighted(mu, nu, WeightSpec::one()), 2.0 * 0.8, 1e-12);
  EXPECT_NEAR(atv_weighted(mu, nu, WeightSpec::one()), 2.0 * 0.8, 1e-12);
}

TEST(TotalVariation, AdaptedSeesDifferentFiltrations) {
  // Same law of (x1, x2) up to relabelling of stage one, different information.
  const auto mu = PathMeasure::from_paths(2, 1, {{{0.0, 1.0}, 0.5}, {{0.0, -1.0}, 0.5}});
  const auto nu = PathMeasure::from_paths(2, 1, {{{0.001, 1.0}, 0.5}, {{-0.001, -1.0}, 0.5}});
  EXPECT_NEAR(tv_weighted(mu, nu, WeightSpec::one()), 2.0, 1e-12);
  EXPECT_NEAR(wasserstein_p(mu, nu, 1.0), 0.001, 1e-12);
  EXPECT_GT(adapted_wasserstein_dp(mu, nu, 1.0).value, 0.9);
}

TEST(Constants, LambdaFormula) {
  const std::vector<double> zero{0.0, 0.0, 0.0};
  EXPECT_DOUBLE_EQ(lambda_constant(zero, 4), 7.0);
  const std::vector<double> one{1.0, 1.0};
  EXPECT_DOUBLE_EQ(lambda_constant(one, 3), 13.0);
  EXPECT_DOUBLE_EQ(lambda_constant(std::vector<double>{}, 1), 1.0);
}

TEST(Constants, CtIsNonnegativeAndZeroForOneWeight) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    auto [mu, nu] = random_pair(rng, 3, 1, trial % 2 == 0);
    const auto ct = compute_ct(nu, WeightSpec::one());
    for (double c : ct.c) EXPECT_NEAR(c, 0.0, 1e-12);
    const auto cp = compute_ct(nu, 2.0, &mu);
    ASSERT_EQ(cp.c.size(), 4u);
    for (double c : cp.c) EXPECT_GE(c, 0.0);
    EXPECT_GE(lambda_constant(cp), 5.0);
  }
}

TEST(BoundReport, HoldsOnRandomTrees) {
  std::mt19937_64 rng(18);
  for (int trial = 0; trial < 60; ++trial) {
    auto [mu, nu] = random_pair(rng, 1 + trial % 3, 1 + trial % 2, trial % 2 == 0);
    for (double p : {1.0, 2.0, 3.0}) {
      const auto r = bound_report(mu, nu, p);
      EXPECT_TRUE(r.all_pass());
      EXPECT_LE(r.w_p_pow, r.aw_p_pow + 1e-10);
      EXPECT_LE(r.tv, r.atv + 1e-12);
    }
  }
}

TEST(RefinePair, DensityProcessIntegratesToOne) {
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 20; ++trial) {
    auto [mu, nu] = random_pair(rng, 3, 1, true);
    const auto r = refine_pair(mu, nu);
    double m = 0.0;
    double n = 0.0;
    for (int leaf : r.tree.leaves()) {
      m += r.tree.nodes[static_cast<std::size_t>(leaf)].mass_mu;
      n += r.tree.nodes[static_cast<std::size_t>(leaf)].mass_nu;
    }
    EXPECT_NEAR(m, 1.0, 1e-12);
    EXPECT_NEAR(n, 1.0, 1e-12);
  }
}

TEST(AdaptedDp, ShapeMismatchIsRejected) {
  const auto a = PathMeasure::dirac(2, 1, std::vector<double>{0.0, 0.0});
  const auto b = PathMeasure::dirac(3, 1, std::vector<double>{0.0, 0.0, 0.0});
  EXPECT_THROW(adapted_wasserstein_dp(a, b, 1.0), Error);
  EXPECT_THROW(tv_weighted(a, b, WeightSpec::one()), Error);
}
