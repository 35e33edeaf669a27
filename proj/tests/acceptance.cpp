// Acceptance checks, one per criterion: `acceptance --criterion N` prints a
// single PASS/FAIL line (plus indented diagnostics) and exits nonzero on FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <unistd.h>

#include "awd/adapted.hpp"
#include "awd/error.hpp"
#include "awd/estimators.hpp"
#include "awd/examples.hpp"
#include "awd/hfun.hpp"
#include "awd/measures.hpp"
#include "awd/ot_exact.hpp"
#include "awd/smoothing.hpp"
#include "support/oracles.hpp"

namespace {

using namespace awd;
namespace fs = std::filesystem;

struct Verdict {
  bool pass = true;
  std::string summary;
  std::vector<std::string> notes;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      notes.push_back("violated: " + what);
    }
  }
  void note(const std::string& s) { notes.push_back(s); }
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// 1. Branching pair: closed forms for TV and ATV.
Verdict criterion1() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  int ok = 0;
  for (int T : {2, 3, 5}) {
    for (double eps : {0.1, 0.01, 0.001}) {
      try {
        const auto ex = gen_example35({T, eps, std::nullopt, {}});
        const double tv = tv_weighted(ex.mu, ex.nu, WeightSpec::one());
        const double atv = atv_weighted(ex.mu, ex.nu, WeightSpec::one());
        const double atv_closed = example35_atv(T, eps, ex.p);
        const bool good = std::abs(tv - 2.0 * eps) <= 1e-10 && std::abs(atv - atv_closed) <= 1e-10;
        v.require(good, fmt("T=%d eps=%g: TV=%.12g (2eps=%.12g) ATV=%.12g (closed %.12g)", T, eps, tv, 2.0 * eps, atv,
                            atv_closed));
        ok += good;
        if (T == 5 && eps == 0.001) {
          const double ratio = atv / tv;
          v.require(std::abs(ratio - 9.0) <= 0.005 * 9.0, fmt("ratio at T=5 eps=0.001 is %.6g, not within 0.5%% of 9", ratio));
        }
      } catch (const Error& e) {
        v.require(false, fmt("T=%d eps=%g: %s", T, eps, e.what()));
        const auto ex = gen_example35({T, eps, example35_minimal_p(T, eps), {}});
        const double tv = tv_weighted(ex.mu, ex.nu, WeightSpec::one());
        const double atv = atv_weighted(ex.mu, ex.nu, WeightSpec::one());
        v.note(fmt("  with the smallest valid p=%.6g: TV=%.12g ATV=%.12g closed=%.12g ratio=%.6g", ex.p, tv, atv,
                   example35_atv(T, eps, ex.p), atv / tv));
      }
    }
  }
  const double secs = seconds_since(t0);
  v.require(secs < 1.0, fmt("runtime %.3fs exceeds 1s", secs));
  v.summary = fmt("%d/9 (T, eps) cases match the closed forms, %.3fs", ok, secs);
  return v;
}

// 2. Weighted branching pair with c = 1: ratio near 13 and lambda_constant exact.
Verdict criterion2() {
  Verdict v;
  const std::vector<double> c{1.0, 1.0};
  const double lambda = lambda_constant(c, 3);
  v.require(lambda == 13.0, fmt("lambda_constant(c=1, T=3) = %.17g", lambda));
  const double eps = 1e-4;
  double ratio = std::nan("");
  try {
    const auto ex = gen_example35({3, eps, std::nullopt, c});
    ratio = atv_weighted(ex.mu, ex.nu, ex.weight) / tv_weighted(ex.mu, ex.nu, ex.weight);
    v.require(std::abs(ratio - 13.0) <= 0.13, fmt("weighted ratio %.6g not within 1%% of 13", ratio));
  } catch (const Error& e) {
    v.require(false, std::string("generator: ") + e.what());
    const auto ex = gen_example35({3, eps, example35_minimal_p(3, eps), c});
    const double r = atv_weighted(ex.mu, ex.nu, ex.weight) / tv_weighted(ex.mu, ex.nu, ex.weight);
    const auto ct = compute_ct(ex.nu, ex.weight, &ex.mu);
    v.note(fmt("  with the smallest valid p=%.6g: ratio=%.6g (%.2f%% below 13), engine c=(%.6g, %.6g)", ex.p, r,
               100.0 * (13.0 - r) / 13.0, ct.at(2), ct.at(3)));
  }
  v.summary = fmt("lambda=%.17g, weighted ratio=%.6g", lambda, ratio);
  return v;
}

// 3. Weighted two-stage pair against the published values.
Verdict criterion3() {
  Verdict v;
  const auto w = WeightSpec::ppower(1.0);
  auto ratio_at = [&](double eps) {
    const auto ex = gen_example36(eps);
    return atv_weighted(ex.mu, ex.nu, w) / tv_weighted(ex.mu, ex.nu, w);
  };
  for (double eps : {0.3, 0.1, 0.01}) {
    const auto ex = gen_example36(eps);
    const double tv = tv_weighted(ex.mu, ex.nu, w);
    const double atv = atv_weighted(ex.mu, ex.nu, w);
    v.require(std::abs(tv - 2.0 * eps * eps) <= 1e-12, fmt("eps=%g: TV_1=%.12g, expected 2eps^2=%.12g", eps, tv, 2.0 * eps * eps));
    v.require(std::abs(atv - (2.0 + eps - eps * eps)) <= 1e-12,
              fmt("eps=%g: ATV_1=%.12g, expected 2+eps-eps^2=%.12g", eps, atv, 2.0 + eps - eps * eps));
    v.note(fmt("  eps=%g: engine TV_1=%.12g (3eps^2=%.12g), ATV_1=%.12g (2eps+5eps^2-4eps^3=%.12g)", eps, tv,
               3.0 * eps * eps, atv, 2.0 * eps + 5.0 * eps * eps - 4.0 * eps * eps * eps));
  }
  const double growth = ratio_at(0.005) / ratio_at(0.01);
  v.require(std::abs(growth - 4.0) <= 0.04, fmt("ratio grows by %.6g when eps halves, not 4", growth));
  v.summary = fmt("ratio growth when eps halves: %.6g", growth);
  return v;
}

// 4. Closed forms against optimizers on random trees.
Verdict criterion4() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20240404);
  std::uniform_int_distribution<int> stages(1, 3);
  double gap_tv = 0.0;
  double gap_atv = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    oracle::TreeShape shape;
    shape.T = stages(rng);
    shape.lattice = trial % 2 == 0;
    const auto mu = oracle::random_tree(rng, shape);
    const auto nu = oracle::random_tree(rng, shape);
    const WeightSpec w = trial % 3 == 0 ? WeightSpec::one() : WeightSpec::ppower(trial % 3 == 1 ? 1.0 : 2.0);
    auto cost = [&](std::span<const double> x, std::span<const double> y) {
      const bool same = std::equal(x.begin(), x.end(), y.begin(), y.end());
      return same ? 0.0 : w.eval(x) + w.eval(y);
    };
    const auto pm = mu.paths();
    const auto pn = nu.paths();
    std::vector<double> a;
    std::vector<double> b;
    DenseMatrix c(pm.size(), pn.size());
    for (std::size_t i = 0; i < pm.size(); ++i) {
      a.push_back(pm[i].prob);
      for (std::size_t j = 0; j < pn.size(); ++j) c(i, j) = cost(pm[i].x, pn[j].x);
    }
    for (const auto& q : pn) b.push_back(q.prob);
    const double lp = transport_lp(a, b, c).value;
    gap_tv = std::max(gap_tv, std::abs(lp - tv_weighted(mu, nu, w)));
    BicausalCost bc;
    bc.terminal = cost;
    const double dp = bicausal_dp(mu, nu, bc).value;
    gap_atv = std::max(gap_atv, std::abs(dp - atv_weighted(mu, nu, w)));
  }
  const double secs = seconds_since(t0);
  v.require(gap_tv <= 1e-8, fmt("TV closed form vs transport LP gap %.3g", gap_tv));
  v.require(gap_atv <= 1e-8, fmt("ATV closed form vs bicausal DP gap %.3g", gap_atv));
  v.require(secs < 30.0, fmt("runtime %.2fs exceeds 30s", secs));
  v.summary = fmt("200 pairs, max gap TV %.3g, ATV %.3g, %.2fs", gap_tv, gap_atv, secs);
  return v;
}

// 5. The bound chain on random trees.
Verdict criterion5() {
  Verdict v;
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> stages(1, 3);
  int violations = 0;
  double worst = std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < 500; ++trial) {
    oracle::TreeShape shape;
    shape.T = stages(rng);
    shape.lattice = trial % 2 == 0;
    const auto mu = oracle::random_tree(rng, shape);
    const auto nu = oracle::random_tree(rng, shape);
    for (double p : {1.0, 2.0}) {
      const auto r = bound_report(mu, nu, p, 1e-9);
      for (const auto& c : r.checks) {
        worst = std::min(worst, c.slack());
        if (c.slack() < -1e-9) {
          ++violations;
          if (violations <= 5) v.note(fmt("  trial %d p=%g %s: lhs=%.12g rhs=%.12g", trial, p, c.name.c_str(), c.lhs, c.rhs));
        }
      }
    }
  }
  v.require(violations == 0, fmt("%d bound violations", violations));
  v.summary = fmt("500 pairs x p in {1,2}, %d violations, smallest slack %.3g", violations, worst);
  return v;
}

// 6. Bicausal DP against the exhaustive bicausal LP.
Verdict criterion6() {
  Verdict v;
  std::mt19937_64 rng(606);
  double gap = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    oracle::TreeShape shape;
    shape.T = 2;
    shape.lattice = trial % 2 == 0;
    const auto mu = oracle::random_tree(rng, shape);
    const auto nu = oracle::random_tree(rng, shape);
    const double p = trial % 2 == 0 ? 1.0 : 2.0;
    const double dp = adapted_wasserstein_dp(mu, nu, p).value_pow;
    const auto lp = oracle::bicausal_lp(mu, nu, [p](const std::vector<double>& x, const std::vector<double>& y) {
      return path_cost(x, y, p);
    });
    v.require(lp.feasible && lp.bounded, fmt("trial %d: oracle LP failed", trial));
    gap = std::max(gap, std::abs(dp - lp.value));
  }
  v.require(gap <= 1e-9, fmt("max gap %.3g", gap));
  v.summary = fmt("50 instances, max |DP - exhaustive| = %.3g", gap);
  return v;
}

// 7. H-function closed form between the relaxed bound and the brute force.
Verdict criterion7() {
  Verdict v;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int bad = 0;
  double worst_upper = -std::numeric_limits<double>::infinity();
  double worst_lower = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < 1000; ++i) {
    const double l = 2.0 * u(rng);
    const double c = 2.0 * u(rng);
    const double lambda = 3.0 * u(rng);
    const double kappa = lambda * u(rng);
    const double b = 3.0 * u(rng);
    const double a = std::min(1.0, b) * u(rng);
    const auto h = HParams::make(l, c, lambda, kappa, a, b);
    const double lo = h_lower_cor(h);
    const double closed = h_inf_closed(h);
    const double orc = h_inf_oracle(h, 400);
    worst_lower = std::max(worst_lower, lo - closed);
    worst_upper = std::max(worst_upper, closed - orc);
    if (!(lo <= closed + 1e-12 && closed <= orc + 5e-3)) {
      ++bad;
      if (bad <= 5) v.note(fmt("  l=%g c=%g lambda=%g kappa=%g a=%g b=%g: lower=%g closed=%g oracle=%g", l, c, lambda, kappa, a, b, lo, closed, orc));
    }
  }
  v.require(bad == 0, fmt("%d of 1000 parameter sets out of order", bad));
  double jump = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double kappa = u(rng);
    const auto h = HParams::make(2.0 * u(rng), 2.0 * u(rng), kappa + u(rng), kappa, u(rng), 1.0);
    jump = std::max(jump, std::abs(h_inf_branch(h, HBranch::Low) - h_inf_branch(h, HBranch::High)));
  }
  v.require(jump <= 1e-12, fmt("branches differ by %.3g at b=1", jump));
  v.summary = fmt("max(lower-closed)=%.3g, max(closed-oracle)=%.3g, branch jump at b=1 %.3g", worst_lower, worst_upper, jump);
  return v;
}

// 8. Smoothing error of order h^k.
Verdict criterion8() {
  Verdict v;
  const std::vector<GridDensity> suite{
      oracle::bump2d(0.0, 0.0, 1.0, 1.0, 0.0, -5.0, 5.0, 256),
      oracle::bump2d(0.4, -0.3, 0.8, 1.1, 0.5, -5.0, 5.0, 256),
      [] {
        auto a = oracle::bump2d(-1.0, 0.5, 0.7, 0.7, 0.0, -5.0, 5.0, 256);
        const auto b = oracle::bump2d(1.0, -0.5, 0.9, 0.6, -0.3, -5.0, 5.0, 256);
        for (std::size_t i = 0; i < a.size(); ++i) a[i] = 0.5 * (a[i] + b[i]);
        return a;
      }()};
  const auto k1 = make_custom_kernel([](double z) { return z >= 0.0 && z <= 1.0 ? 1.0 : 0.0; }, 1.0, 1, 2);
  const auto k2 = make_kernel(KernelFamily::Gaussian, 2, 2);
  const std::vector<double> hs{0.5, 0.25, 0.125};
  std::string orders;
  for (std::size_t s = 0; s < suite.size(); ++s) {
    const auto& f = suite[s];
    for (int k : {1, 2}) {
      const auto t = lemma41_check(f, k == 1 ? k1 : k2, k, hs);
      for (const auto& r : t.rows) {
        const double allowed = r.rhs * (1.0 + 5.0 * f.max_spacing() / r.h);
        v.require(r.lhs <= allowed, fmt("density %zu k=%d h=%g: %.6g > %.6g", s, k, r.h, r.lhs, allowed));
      }
      v.require(std::abs(t.decay_order - k) <= 0.3, fmt("density %zu k=%d: decay order %.3f", s, k, t.decay_order));
      orders += fmt(" %.2f", t.decay_order);
    }
  }
  v.summary = "decay orders (k=1,2 per density):" + orders;
  return v;
}

// 9. Band-perturbed densities: W_1 small, AW_1 large.
Verdict criterion9() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  for (int k : {1, 2}) {
    for (double eps : {0.1, 1.0 / 16.0}) {
      const auto ex = gen_example43(eps, k, eps / 20.0);
      const double cell = ex.mu.cell_diameter(2.0);
      const double w1 = grid_w1(ex.mu, ex.nu);
      const double aw1 = grid_aw1(ex.mu, ex.nu);
      const double first = first_stage_kernel_bound(quantize(ex.mu), quantize(ex.nu), 1.0);
      const double w_bound = 2.0 * std::numbers::sqrt2 * std::pow(eps, k + 1) + cell;
      const double aw_bound = std::pow(eps, k) / std::numbers::pi - cell;
      const double ratio = aw1 / std::pow(w1, k / (k + 1.0));
      v.require(w1 <= w_bound, fmt("k=%d eps=%g: W_1=%.6g > %.6g", k, eps, w1, w_bound));
      v.require(aw1 >= aw_bound, fmt("k=%d eps=%g: AW_1=%.6g < eps^k/pi - cell = %.6g", k, eps, aw1, aw_bound));
      v.require(ratio >= 0.15, fmt("k=%d eps=%g: AW_1/W_1^(k/(k+1)) = %.4g", k, eps, ratio));
      v.note(fmt("  k=%d eps=%g: W_1=%.6g AW_1=%.6g first-stage bound=%.6g 4eps^(k+1)(1-2eps)/pi=%.6g ratio=%.4g", k,
                 eps, w1, aw1, first, 4.0 * std::pow(eps, k + 1) * (1.0 - 2.0 * eps) / std::numbers::pi, ratio));
    }
  }
  const double secs = seconds_since(t0);
  v.require(secs < 300.0, fmt("runtime %.1fs exceeds 5 min", secs));
  v.summary = fmt("4 (k, eps) cases, %.1fs", secs);
  return v;
}

// 10. The main W -> AW inequality on grid densities.
Verdict criterion10() {
  Verdict v;
  std::mt19937_64 rng(1010);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const auto gauss = make_kernel(KernelFamily::Gaussian, 2, 2);
  const auto box = make_kernel(KernelFamily::Box, 1, 2);
  double worst = std::numeric_limits<double>::infinity();
  double tightest = 0.0;
  for (int i = 0; i < 20; ++i) {
    const double lo = -3.0;
    const double hi = 3.0;
    const auto f = oracle::bump2d(0.5 * u(rng), 0.5 * u(rng), 0.7 + 0.2 * u(rng), 0.7 + 0.2 * u(rng), 0.6 * u(rng), lo, hi, 48);
    const auto g = oracle::bump2d(0.5 * u(rng), 0.5 * u(rng), 0.7 + 0.2 * u(rng), 0.7 + 0.2 * u(rng), 0.6 * u(rng), lo, hi, 48);
    TransferOptions o;
    o.k = i % 2 == 0 ? 2 : 1;
    o.p = i % 4 < 2 ? 1.0 : 2.0;
    o.q = 2.0;
    const auto r = theorem29_bound(f, g, o.k == 2 ? gauss : box, o);
    const auto& c = r.checks.front();
    worst = std::min(worst, c.rhs + 1e-6 - c.lhs);
    tightest = std::max(tightest, c.lhs / c.rhs);
    v.require(c.lhs <= c.rhs + 1e-6, fmt("pair %d: AW_p^p=%.6g > rhs=%.6g", i, c.lhs, c.rhs));
  }
  v.summary = fmt("20 pairs, smallest slack %.4g, largest lhs/rhs %.4g", worst, tightest);
  return v;
}

// 11. Monte-Carlo convergence of the kernel estimator.
Verdict criterion11() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  RateConfig cfg;
  cfg.target = GridDensity::from_function({0.0, 0.0}, {1.0, 1.0}, {32, 32}, [](std::span<const double>) { return 1.0; });
  cfg.target.normalize();
  cfg.estimator = EstimatorKind::Kde;
  cfg.ns = {250, 500, 1000, 2000, 4000};
  cfg.reps = 10;
  cfg.seed = 11;
  cfg.backend_cells = {32, 32};
  cfg.threads = std::max(1u, std::thread::hardware_concurrency());
  const auto t = rate_experiment(cfg);
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& r = t.rows[i];
    v.note(fmt("  n=%zu mean=%.6g sd=%.6g", r.n, r.mean, r.sd));
    if (i > 0) {
      const auto& p = t.rows[i - 1];
      v.require(r.mean < p.mean + 2.0 * p.sd, fmt("mean at n=%zu not below previous mean + 2 sd", r.n));
    }
  }
  v.require(t.slope < 0.0 && std::abs(t.slope) >= 0.1, fmt("slope %.4g", t.slope));
  const double secs = seconds_since(t0);
  v.require(secs < 600.0, fmt("runtime %.1fs exceeds 10 min", secs));
  v.summary = fmt("slope %.4g +- %.4g, %.1fs", t.slope, t.slope_se, secs);
  return v;
}

// 12. CLI determinism across thread counts.
std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Verdict criterion12() {
  Verdict v;
  const fs::path dir = fs::temp_directory_path() / ("awcli_det_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const std::string cli = AWCLI_PATH;
  const auto d = dir.string();
  const std::vector<std::pair<std::string, std::vector<std::string>>> runs{
      {"example " + std::string("--id 3.6 --eps 0.1 --emit ") + d + "/mu36.json " + d + "/nu36.json", {"mu36.json", "nu36.json"}},
      {"example --id 3.5 --eps 0.01 --T 5 --minimal-p --emit " + d + "/mu35.json " + d + "/nu35.json", {"mu35.json", "nu35.json"}},
      {"report --p 1 " + d + "/mu35.json " + d + "/nu35.json", {}},
      {"aw --p 2 --plans " + d + "/mu36.json " + d + "/nu36.json", {}},
      {"w --p 1 " + d + "/mu35.json " + d + "/nu35.json", {}},
      {"hfun --l 1 --c 0.5 --lambda 2 --kappa 1 --a 0.3 --b 1.5", {}},
      {"rate --ns 100,200,400 --reps 4 --cells 16 --seed 5", {}},
      {"rate --estimator wavelet --ns 256,1024 --reps 3 --cells 16 --seed 9", {}},
  };
  int idx = 0;
  for (const auto& [args, files] : runs) {
    std::string out[2];
    std::vector<std::string> emitted[2];
    int rc[2];
    const char* threads[2] = {"1", "8"};
    for (int r = 0; r < 2; ++r) {
      const auto out_path = dir / fmt("out_%d_%d", idx, r);
      const std::string cmd = cli + " --threads " + threads[r] + " --out " + out_path.string() + " " + args;
      rc[r] = std::system(cmd.c_str());
      out[r] = slurp(out_path);
      for (const auto& f : files) emitted[r].push_back(slurp(dir / f));
    }
    v.require(rc[0] == 0 && rc[1] == 0, "command failed: " + args);
    v.require(!out[0].empty() && out[0] == out[1], "output differs between --threads 1 and 8: " + args);
    v.require(emitted[0] == emitted[1], "emitted files differ: " + args);
    ++idx;
  }
  fs::remove_all(dir);
  v.summary = fmt("%d CLI runs byte-identical across thread counts", idx);
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  int which = 0;
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--criterion") which = std::atoi(argv[i + 1]);
  }
  const std::vector<std::function<Verdict()>> all{criterion1, criterion2, criterion3, criterion4,
                                                  criterion5, criterion6, criterion7, criterion8,
                                                  criterion9, criterion10, criterion11, criterion12};
  if (which < 1 || which > static_cast<int>(all.size())) {
    std::cerr << "usage: acceptance --criterion N (1.." << all.size() << ")\n";
    return 2;
  }
  Verdict v;
  try {
    v = all[static_cast<std::size_t>(which - 1)]();
  } catch (const std::exception& e) {
    v.pass = false;
    v.summary = std::string("exception: ") + e.what();
  }
  std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << which << ": " << v.summary << '\n';
  for (const auto& n : v.notes) std::cout << "    " << n << '\n';
  return v.pass ? 0 : 1;
}
