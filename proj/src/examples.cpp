#include "awd/examples.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace awd {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// Integral of 1 - cos(pi y / eps) over [a, b] intersected with [0, 2eps].
double band_integral(double a, double b, double eps) {
  a = std::max(a, 0.0);
  b = std::min(b, 2.0 * eps);
  if (b <= a) return 0.0;
  const double w = std::numbers::pi / eps;
  return (b - a) - (std::sin(w * b) - std::sin(w * a)) / w;
}

}  // namespace

double example35_minimal_p(int T, double eps) {
  require(T >= 2, ErrorKind::InvalidParams, "T must be >= 2");
  return std::pow(2.0 * eps / (1.0 + eps), 1.0 / (T - 1));
}

double example35_tv(double eps) { return 2.0 * eps; }

double example35_atv(int T, double eps, double p) { return 2.0 * eps * ((2.0 * T - 2.0) * (1.0 - p) + 1.0); }

Example35 gen_example35(const Example35Params& params) {
  const int T = params.T;
  const double eps = params.eps;
  require(T >= 2, ErrorKind::InvalidParams, "T must be >= 2");
  require(eps > 0.0 && eps < 0.5, ErrorKind::InvalidEpsilon, "eps must lie in (0, 1/2), got " + num(eps));
  require(params.c.empty() || static_cast<int>(params.c.size()) == T - 1, ErrorKind::InvalidParams,
          "c needs T-1 entries (c_2..c_T)");
  for (double c : params.c) require(c >= 0.0 && std::isfinite(c), ErrorKind::InvalidParams, "c_t must be >= 0");

  Example35 ex;
  const double base = 2.0 * eps / (1.0 + eps);
  const double p = params.p.value_or(base);
  require(p > 0.0 && p < 1.0, ErrorKind::InvalidEpsilon, "p must lie in (0, 1), got " + num(p));
  ex.p = p;
  constexpr double tol = 1e-12;
  for (int t = 1; t <= T - 1; ++t) {
    const double d = base / std::pow(p, t - 1);
    require(d < 1.0, ErrorKind::InvalidEpsilon,
            "d_" + std::to_string(t) + " = " + num(d) + " is not below 1 (eps = " + num(eps) + ", p = " + num(p) + ")");
    const double r = 1.0 / (1.0 - d);
    const double up = r * (1.0 - p);
    require(up >= -tol && up <= 1.0 + tol, ErrorKind::InvalidEpsilon,
            "r_" + std::to_string(t) + "(1-p) = " + num(up) + " is outside [0, 1] (eps = " + num(eps) +
                ", p = " + num(p) + ")");
    ex.d.push_back(d);
    ex.r.push_back(r);
    ex.u.push_back(std::max(0.0, p - d));
  }
  ex.gamma1_mass = (1.0 - eps) / 2.0;
  ex.gamma2_mass = (1.0 + eps) / 2.0;

  // gamma_k({x^i}) by running the Markov kernels along the all-zero spine.
  double stay1 = ex.gamma1_mass;
  double stay2 = ex.gamma2_mass;
  for (int i = 1; i <= T - 1; ++i) {
    const double up1 = std::min(1.0, ex.r[static_cast<std::size_t>(i - 1)] * (1.0 - p));
    ex.gamma1_leaf.push_back(stay1 * up1);
    ex.gamma2_leaf.push_back(stay2 * (1.0 - p));
    stay1 *= std::max(0.0, 1.0 - up1);
    stay2 *= p;
  }
  ex.gamma1_leaf.push_back(stay1);
  ex.gamma2_leaf.push_back(stay2);

  auto leaf = [&](int i, double shift) {
    std::vector<double> x(static_cast<std::size_t>(T));
    for (int t = 1; t <= T; ++t) x[static_cast<std::size_t>(t - 1)] = (t > i ? 1.0 : 0.0) + shift;
    return x;
  };
  std::vector<WeightedPath> mu_paths;
  std::vector<WeightedPath> nu_paths;
  for (int i = 1; i <= T; ++i) {
    const auto k = static_cast<std::size_t>(i - 1);
    mu_paths.push_back({leaf(i, 1.0), ex.gamma1_leaf[k]});
    mu_paths.push_back({leaf(i, -1.0), ex.gamma2_leaf[k]});
    nu_paths.push_back({leaf(i, 1.0), ex.gamma2_leaf[k]});
    nu_paths.push_back({leaf(i, -1.0), ex.gamma1_leaf[k]});
  }
  ex.mu = PathMeasure::from_paths(T, 1, mu_paths);
  ex.nu = PathMeasure::from_paths(T, 1, nu_paths);

  if (params.c.empty()) {
    ex.weight = WeightSpec::one();
    return ex;
  }
  WeightSpec::Table table;
  for (int i = 1; i <= T; ++i) {
    for (double shift : {1.0, -1.0}) {
      const auto x = leaf(i, shift);
      double w = 1.0;
      for (int t = 1; t <= T; ++t) {
        if (t > i) w *= 1.0 + params.c[static_cast<std::size_t>(t - 2)];
        std::vector<double> prefix(x.begin(), x.begin() + t);
        for (double& v : prefix) v = canonical_coord(v);
        table[prefix] = w;
      }
    }
  }
  ex.weight = WeightSpec::tabulated(std::move(table));
  return ex;
}

Example36 gen_example36(double eps) {
  require(eps > 0.0 && eps < 1.0, ErrorKind::InvalidEpsilon, "eps must lie in (0, 1), got " + num(eps));
  Example36 ex;
  ex.mu = PathMeasure::from_paths(2, 1,
                                  {{{1.0, 1.0 / eps}, eps * (1.0 - eps)}, {{1.0, 0.0}, eps * eps}, {{0.0, 0.0}, 1.0 - eps}});
  ex.nu = PathMeasure::from_paths(2, 1, {{{1.0, 1.0 / eps}, eps * (1.0 - eps)}, {{0.0, 0.0}, 1.0 - eps + eps * eps}});
  return ex;
}

Example43 gen_example43(double eps, int k, double mesh) {
  require(eps > 0.0 && eps < 0.125, ErrorKind::InvalidEpsilon, "eps must lie in (0, 1/8), got " + num(eps));
  require(k >= 1, ErrorKind::InvalidParams, "k must be >= 1");
  require(mesh > 0.0 && mesh <= eps / 20.0 * (1.0 + 1e-12), ErrorKind::MeshTooCoarse,
          "mesh " + num(mesh) + " exceeds eps/20 = " + num(eps / 20.0));
  const int n = static_cast<int>(std::ceil(1.0 / mesh - 1e-9));
  Example43 ex;
  ex.mu = GridDensity({0.0, 0.0}, {1.0, 1.0}, {n, n});
  ex.nu = ex.mu;
  const double h = 1.0 / n;
  const double w = std::numbers::pi / eps;
  const double amp = std::pow(eps, k);
  std::vector<double> sin_avg(static_cast<std::size_t>(n));
  std::vector<double> band_avg(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double a = i * h;
    const double b = (i + 1) * h;
    sin_avg[static_cast<std::size_t>(i)] = (std::cos(w * a) - std::cos(w * b)) / (w * h);
    // Upper band mirrors the lower one under x2 -> 1 - x2.
    band_avg[static_cast<std::size_t>(i)] = (band_integral(a, b, eps) - band_integral(1.0 - b, 1.0 - a, eps)) / h;
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const auto flat = static_cast<std::size_t>(i) * static_cast<std::size_t>(n) + static_cast<std::size_t>(j);
      ex.mu[flat] = 1.0;
      ex.nu[flat] = 1.0 + amp * sin_avg[static_cast<std::size_t>(i)] * band_avg[static_cast<std::size_t>(j)];
    }
  }
  ex.mu.set_normalized(true);
  ex.nu.set_normalized(true);
  return ex;
}

}  // namespace awd
