#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "awd/adapted.hpp"
#include "awd/error.hpp"
#include "awd/examples.hpp"
#include "awd/ot_exact.hpp"

using namespace awd;

namespace {

double transport_tv(const PathMeasure& mu, const PathMeasure& nu, const WeightSpec& w) {
  const auto pm = mu.paths();
  const auto pn = nu.paths();
  std::vector<double> a;
  std::vector<double> b;
  DenseMatrix c(pm.size(), pn.size());
  for (std::size_t i = 0; i < pm.size(); ++i) {
    a.push_back(pm[i].prob);
    for (std::size_t j = 0; j < pn.size(); ++j) c(i, j) = pm[i].x == pn[j].x ? 0.0 : w.eval(pm[i].x) + w.eval(pn[j].x);
  }
  for (const auto& q : pn) b.push_back(q.prob);
  return transport_lp(a, b, c).value;
}

double dp_atv(const PathMeasure& mu, const PathMeasure& nu, const WeightSpec& w) {
  BicausalCost bc;
  bc.terminal = [&](std::span<const double> x, std::span<const double> y) {
    return std::equal(x.begin(), x.end(), y.begin(), y.end()) ? 0.0 : w.eval(x) + w.eval(y);
  };
  return bicausal_dp(mu, nu, bc).value;
}

}  // namespace

TEST(BranchingExample, DefaultProbabilityIsRejectedBeyondTwoStages) {
  for (int T : {3, 4, 5}) {
    try {
      (void)gen_example35({T, 0.01, std::nullopt, {}});
      FAIL() << T;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::InvalidEpsilon);
    }
  }
  EXPECT_NO_THROW(gen_example35({2, 0.01, std::nullopt, {}}));
}

TEST(BranchingExample, ClosedFormsAtValidProbabilities) {
  for (int T : {2, 3, 4, 5}) {
    for (double eps : {0.2, 0.05, 0.001}) {
      const double p0 = example35_minimal_p(T, eps);
      for (double p : {p0, 0.5 * (p0 + 1.0)}) {
        const auto ex = gen_example35({T, eps, p, {}});
        const auto w = WeightSpec::one();
        EXPECT_NEAR(tv_weighted(ex.mu, ex.nu, w), example35_tv(eps), 1e-12);
        EXPECT_NEAR(atv_weighted(ex.mu, ex.nu, w), example35_atv(T, eps, p), 1e-12);
        EXPECT_NEAR(ex.gamma1_mass + ex.gamma2_mass, 1.0, 1e-15);
        EXPECT_NEAR(std::accumulate(ex.gamma1_leaf.begin(), ex.gamma1_leaf.end(), 0.0), ex.gamma1_mass, 1e-12);
        EXPECT_NEAR(std::accumulate(ex.gamma2_leaf.begin(), ex.gamma2_leaf.end(), 0.0), ex.gamma2_mass, 1e-12);
      }
    }
  }
}

TEST(BranchingExample, ClosedFormsAgreeWithOptimizers) {
  const auto ex = gen_example35({3, 0.1, example35_minimal_p(3, 0.1), {}});
  const auto w = WeightSpec::one();
  EXPECT_NEAR(transport_tv(ex.mu, ex.nu, w), example35_tv(0.1), 1e-10);
  EXPECT_NEAR(dp_atv(ex.mu, ex.nu, w), example35_atv(3, 0.1, ex.p), 1e-10);
}

TEST(BranchingExample, RatioApproachesTwoTMinusOne) {
  for (int T : {2, 3}) {
    double prev = 0.0;
    for (double eps : {1e-2, 1e-4, 1e-6}) {
      const double p = example35_minimal_p(T, eps);
      const double ratio = example35_atv(T, eps, p) / example35_tv(eps);
      EXPECT_GT(ratio, prev);
      EXPECT_LT(ratio, 2.0 * T - 1.0 + 1e-12);
      prev = ratio;
    }
    EXPECT_GT(prev, 2.0 * T - 1.0 - 0.1);
  }
}

TEST(BranchingExample, WeightedVariantIsMonotone) {
  const std::vector<double> c{1.0, 1.0};
  const auto ex = gen_example35({3, 1e-3, example35_minimal_p(3, 1e-3), c});
  EXPECT_TRUE(check_monotone(ex.weight, ex.mu).empty());
  EXPECT_TRUE(check_monotone(ex.weight, ex.nu).empty());
  EXPECT_NEAR(atv_weighted(ex.mu, ex.nu, ex.weight), dp_atv(ex.mu, ex.nu, ex.weight), 1e-10);
  const auto ct = compute_ct(ex.nu, ex.weight, &ex.mu);
  EXPECT_NEAR(ct.at(3), 1.0, 1e-9);
  EXPECT_LE(ct.at(2), 1.0 + 1e-9);
}

TEST(BranchingExample, RejectsBadParameters) {
  EXPECT_THROW(gen_example35({3, 0.0, std::nullopt, {}}), Error);
  EXPECT_THROW(gen_example35({3, 1.0, std::nullopt, {}}), Error);
  EXPECT_THROW(gen_example35({3, 0.1, 0.01, {}}), Error);
  EXPECT_THROW(gen_example35({3, 0.1, example35_minimal_p(3, 0.1), {1.0}}), Error);
}

TEST(WeightedPairExample, ExactValuesCheckedByOptimizers) {
  const auto w = WeightSpec::ppower(1.0);
  for (double eps : {0.3, 0.1, 0.01}) {
    const auto ex = gen_example36(eps);
    const double tv = tv_weighted(ex.mu, ex.nu, w);
    const double atv = atv_weighted(ex.mu, ex.nu, w);
    EXPECT_NEAR(tv, transport_tv(ex.mu, ex.nu, w), 1e-12);
    EXPECT_NEAR(atv, dp_atv(ex.mu, ex.nu, w), 1e-12);
    EXPECT_NEAR(tv, 3.0 * eps * eps, 1e-12);
    EXPECT_NEAR(atv, 2.0 * eps + 5.0 * eps * eps - 4.0 * eps * eps * eps, 1e-12);
  }
  EXPECT_THROW(gen_example36(0.0), Error);
  EXPECT_THROW(gen_example36(1.0), Error);
}

TEST(BandExample, DensitiesAreProbabilities) {
  for (int k : {1, 2}) {
    const auto ex = gen_example43(0.1, k, 0.005);
    EXPECT_EQ(ex.mu.cells(0), 200);
    EXPECT_TRUE(ex.mu.same_grid(ex.nu));
    EXPECT_NEAR(ex.mu.mass(), 1.0, 1e-12);
    EXPECT_NEAR(ex.nu.mass(), 1.0, 1e-12);
    for (double v : ex.mu.values()) EXPECT_GE(v, 0.0);
    for (double v : ex.nu.values()) EXPECT_GE(v, 0.0);
  }
}

TEST(BandExample, FirstCoordinateMarginalsAgreeWithinMesh) {
  const auto ex = gen_example43(0.1, 1, 0.005);
  const int n = ex.mu.cells(0);
  double gap = 0.0;
  for (int i = 0; i < n; ++i) {
    double a = 0.0;
    double b = 0.0;
    for (int j = 0; j < n; ++j) {
      const std::size_t flat = static_cast<std::size_t>(i) * ex.mu.stride(0) + static_cast<std::size_t>(j) * ex.mu.stride(1);
      a += ex.mu[flat];
      b += ex.nu[flat];
    }
    gap = std::max(gap, std::abs(a - b) * ex.mu.cell_volume());
  }
  EXPECT_LT(gap, 1e-3);
}

TEST(BandExample, ParameterErrors) {
  auto kind = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::Io;
  };
  EXPECT_EQ(kind([] { gen_example43(0.2, 1, 0.001); }), ErrorKind::InvalidEpsilon);
  EXPECT_EQ(kind([] { gen_example43(0.1, 1, 0.01); }), ErrorKind::MeshTooCoarse);
}
