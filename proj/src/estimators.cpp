#include "awd/estimators.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <bit>
#include <exception>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <thread>

#include "awd/adapted.hpp"
#include "awd/stats.hpp"

namespace awd {

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

// Mass of N(center, h^2) in each cell of one axis.
std::vector<double> axis_masses(const GridDensity& g, int axis, double center, double h) {
  const int n = g.cells(axis);
  std::vector<double> m(static_cast<std::size_t>(n), 0.0);
  const double dx = g.spacing(axis);
  const double lo = g.lo(axis);
  const int first = std::max(0, static_cast<int>(std::floor((center - 9.0 * h - lo) / dx)));
  const int last = std::min(n - 1, static_cast<int>(std::ceil((center + 9.0 * h - lo) / dx)));
  for (int i = first; i <= last; ++i) {
    const double a = lo + i * dx;
    m[static_cast<std::size_t>(i)] = normal_cdf((a + dx - center) / h) - normal_cdf((a - center) / h);
  }
  return m;
}

// Adds scale * (outer product of per-axis masses) into g, divided by the cell volume.
void add_product(GridDensity& g, const std::vector<std::vector<double>>& axes, double scale) {
  std::vector<double> acc{scale / g.cell_volume()};
  for (const auto& a : axes) {
    std::vector<double> next;
    next.reserve(acc.size() * a.size());
    for (double v : acc) {
      for (double w : a) next.push_back(v * w);
    }
    acc = std::move(next);
  }
  for (std::size_t i = 0; i < acc.size(); ++i) g[i] += acc[i];
}

GridDensity gaussian_bump(const GridDensity& grid, const std::vector<double>& center, double h, double& clipped) {
  GridDensity out = grid;
  std::fill(out.values().begin(), out.values().end(), 0.0);
  std::vector<std::vector<double>> axes;
  for (int a = 0; a < grid.dims(); ++a) axes.push_back(axis_masses(grid, a, center[static_cast<std::size_t>(a)], h));
  add_product(out, axes, 1.0);
  const double m = out.mass();
  clipped = 1.0 - m;
  out.normalize();
  return out;
}

std::size_t ipow2(int e) { return std::size_t{1} << e; }

// One orthonormal Haar step along every axis on the leading block of side 2^j.
void haar_step(std::vector<double>& v, int dims, int J, int j, bool inverse) {
  const std::size_t side = ipow2(J);
  const std::size_t half = ipow2(j - 1);
  const double s = std::numbers::sqrt2 / 2.0;
  std::vector<std::size_t> stride(static_cast<std::size_t>(dims));
  for (int a = 0; a < dims; ++a) {
    std::size_t st = 1;
    for (int b = a + 1; b < dims; ++b) st *= side;
    stride[static_cast<std::size_t>(a)] = st;
  }
  const std::size_t block = ipow2(j);
  std::vector<double> tmp(block);
  for (int a = 0; a < dims; ++a) {
    // Iterate over all lines along axis a inside the leading block.
    std::size_t lines = 1;
    for (int b = 0; b < dims; ++b) {
      if (b != a) lines *= block;
    }
    for (std::size_t line = 0; line < lines; ++line) {
      std::size_t rest = line;
      std::size_t base = 0;
      for (int b = dims - 1; b >= 0; --b) {
        if (b == a) continue;
        base += (rest % block) * stride[static_cast<std::size_t>(b)];
        rest /= block;
      }
      const std::size_t st = stride[static_cast<std::size_t>(a)];
      if (!inverse) {
        for (std::size_t k = 0; k < half; ++k) {
          const double x = v[base + 2 * k * st];
          const double y = v[base + (2 * k + 1) * st];
          tmp[k] = s * (x + y);
          tmp[half + k] = s * (x - y);
        }
      } else {
        for (std::size_t k = 0; k < half; ++k) {
          const double c = v[base + k * st];
          const double d = v[base + (half + k) * st];
          tmp[2 * k] = s * (c + d);
          tmp[2 * k + 1] = s * (c - d);
        }
      }
      for (std::size_t k = 0; k < block; ++k) v[base + k * st] = tmp[k];
    }
  }
}

GridDensity unit_grid(int dims, int J) {
  return GridDensity(std::vector<double>(static_cast<std::size_t>(dims), 0.0),
                     std::vector<double>(static_cast<std::size_t>(dims), 1.0),
                     std::vector<int>(static_cast<std::size_t>(dims), static_cast<int>(ipow2(J))));
}

}  // namespace

PathMeasure empirical_measure(const Samples& samples, int T, int d) {
  require(!samples.empty(), ErrorKind::InvalidParams, "need at least one sample");
  std::vector<WeightedPath> paths;
  paths.reserve(samples.size());
  const double w = 1.0 / static_cast<double>(samples.size());
  for (const auto& x : samples) paths.push_back({x, w});
  return PathMeasure::from_paths(T, d, std::move(paths));
}

double kde_bandwidth(std::size_t n, int dims, double scale) {
  return scale * std::pow(static_cast<double>(n), -1.0 / (dims + 2.0));
}

KdeResult kde(const Samples& samples, double h, const std::vector<double>& lo, const std::vector<double>& hi,
              const std::vector<int>& cells) {
  require(!samples.empty(), ErrorKind::InvalidParams, "need at least one sample");
  require(h > 0.0 && std::isfinite(h), ErrorKind::InvalidParams, "bandwidth must be positive");
  KdeResult out{GridDensity(lo, hi, cells), 0.0};
  GridDensity& g = out.density;
  require(h >= g.max_spacing(), ErrorKind::BandwidthTooSmall,
          "bandwidth " + std::to_string(h) + " is below the cell size " + std::to_string(g.max_spacing()));
  const double scale = 1.0 / static_cast<double>(samples.size());
  for (const auto& x : samples) {
    require(static_cast<int>(x.size()) == g.dims(), ErrorKind::ShapeMismatch, "sample dimension differs from grid");
    std::vector<std::vector<double>> axes;
    for (int a = 0; a < g.dims(); ++a) axes.push_back(axis_masses(g, a, x[static_cast<std::size_t>(a)], h));
    add_product(g, axes, scale);
  }
  out.clipped_mass = 1.0 - g.mass();
  g.normalize();
  return out;
}

int wavelet_level(std::size_t n, const WaveletConfig& cfg) {
  if (cfg.level) return std::max(*cfg.level, cfg.j0);
  const double raw = std::round(std::log2(static_cast<double>(n)) / (2.0 * cfg.smoothness + cfg.dims));
  const int cap = 12 / cfg.dims;
  return std::clamp(static_cast<int>(raw), cfg.j0, std::max(cfg.j0, cap));
}

HaarCoefficients haar_decompose(const GridDensity& f, int j0) {
  const int dims = f.dims();
  const int side = f.cells(0);
  const int J = std::countr_zero(static_cast<unsigned>(side));
  require(side >= 1 && ipow2(J) == static_cast<std::size_t>(side), ErrorKind::ShapeMismatch,
          "Haar grids need 2^J cells per axis");
  for (int a = 0; a < dims; ++a) {
    require(f.cells(a) == side && f.lo(a) == 0.0 && f.hi(a) == 1.0, ErrorKind::ShapeMismatch,
            "Haar grids live on the unit cube with equal sides");
  }
  require(j0 >= 0 && j0 <= J, ErrorKind::InvalidParams, "j0 must lie in [0, J]");
  HaarCoefficients c{dims, j0, J, f.values()};
  // Scaling coefficient of a level-J cell is its value times 2^{-DJ/2}.
  const double norm = std::pow(2.0, -0.5 * dims * J);
  for (double& v : c.values) v *= norm;
  for (int j = J; j > j0; --j) haar_step(c.values, dims, J, j, false);
  return c;
}

GridDensity haar_reconstruct(const HaarCoefficients& c) {
  GridDensity g = unit_grid(c.dims, c.level);
  require(c.values.size() == g.size(), ErrorKind::ShapeMismatch, "coefficient count does not match the level");
  std::vector<double> v = c.values;
  for (int j = c.j0 + 1; j <= c.level; ++j) haar_step(v, c.dims, c.level, j, true);
  const double norm = std::pow(2.0, 0.5 * c.dims * c.level);
  for (double& x : v) x *= norm;
  g.values() = std::move(v);
  return g;
}

WaveletEstimate wavelet_estimator(const Samples& samples, const WaveletConfig& cfg) {
  require(!samples.empty(), ErrorKind::InvalidParams, "need at least one sample");
  require(cfg.dims >= 1 && cfg.j0 >= 0, ErrorKind::InvalidParams, "invalid wavelet configuration");
  const int J = wavelet_level(samples.size(), cfg);
  GridDensity hist = unit_grid(cfg.dims, J);
  const auto side = static_cast<double>(ipow2(J));
  const double w = 1.0 / (static_cast<double>(samples.size()) * hist.cell_volume());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& x = samples[i];
    require(static_cast<int>(x.size()) == cfg.dims, ErrorKind::ShapeMismatch, "sample dimension differs from config");
    std::size_t flat = 0;
    for (int a = 0; a < cfg.dims; ++a) {
      const double v = x[static_cast<std::size_t>(a)];
      require(v >= 0.0 && v <= 1.0, ErrorKind::SampleOutOfBox,
              "sample " + std::to_string(i) + " has coordinate " + std::to_string(v) + " outside [0, 1]");
      const auto k = static_cast<std::size_t>(std::min(side - 1.0, std::floor(v * side)));
      flat = flat * static_cast<std::size_t>(side) + k;
    }
    hist[flat] += w;
  }
  WaveletEstimate out;
  out.coefficients = haar_decompose(hist, cfg.j0);
  out.density = haar_reconstruct(out.coefficients);
  return out;
}

MuHat mu_hat(const HaarCoefficients& c, const std::vector<double>& first_sample) {
  MuHat out;
  out.density = haar_reconstruct(c);
  const double lowest = *std::min_element(out.density.values().begin(), out.density.values().end());
  if (lowest >= 0.0) {
    out.density.set_normalized(true);
    return out;
  }
  require(static_cast<int>(first_sample.size()) == c.dims, ErrorKind::ShapeMismatch,
          "first sample dimension differs from the coefficients");
  out.fallback = true;
  out.density = gaussian_bump(out.density, first_sample, 1.0, out.clipped_mass);
  return out;
}

MuHat mu_hat(const Samples& samples, const WaveletConfig& cfg) {
  const auto est = wavelet_estimator(samples, cfg);
  return mu_hat(est.coefficients, samples.front());
}

Samples sample_grid(const GridDensity& f, std::size_t n, std::uint64_t seed) {
  std::vector<double> cum(f.size());
  double run = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    require(f[i] >= 0.0, ErrorKind::NonProbability, "grid density has a negative cell");
    run += f[i];
    cum[i] = run;
  }
  require(run > 0.0, ErrorKind::Degenerate, "grid density has no mass");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Samples out(n);
  for (auto& x : out) {
    const double u = unif(rng) * run;
    auto it = std::upper_bound(cum.begin(), cum.end(), u);
    const auto cell = static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - cum.begin(), static_cast<std::ptrdiff_t>(f.size() - 1)));
    const auto idx = f.unflatten(cell);
    x.resize(idx.size());
    for (std::size_t a = 0; a < idx.size(); ++a) {
      const int ax = static_cast<int>(a);
      x[a] = f.lo(ax) + (idx[a] + unif(rng)) * f.spacing(ax);
    }
  }
  return out;
}

double grid_aw1(const GridDensity& f, const GridDensity& g, int d) {
  require(f.same_grid(g), ErrorKind::GridMismatch, "AW needs densities on the same grid");
  return adapted_wasserstein_dp(quantize(f, d), quantize(g, d), 1.0).value;
}

RateTable rate_experiment(const RateConfig& cfg) {
  require(!cfg.ns.empty(), ErrorKind::InvalidParams, "need at least one sample size");
  for (std::size_t i = 1; i < cfg.ns.size(); ++i) {
    require(cfg.ns[i] > cfg.ns[i - 1], ErrorKind::InvalidParams, "sample sizes must be strictly increasing");
  }
  require(cfg.reps >= 3, ErrorKind::InvalidParams, "need at least 3 replications");
  const GridDensity target = cfg.backend_cells.empty() ? cfg.target : regrid(cfg.target, cfg.backend_cells);
  GridDensity target_n = target;
  target_n.normalize();
  std::vector<double> lo;
  std::vector<double> hi;
  for (int a = 0; a < target.dims(); ++a) {
    lo.push_back(target.lo(a));
    hi.push_back(target.hi(a));
  }

  const std::size_t tasks = cfg.ns.size() * static_cast<std::size_t>(cfg.reps);
  std::vector<double> results(tasks, 0.0);
  std::vector<std::exception_ptr> errors(tasks);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t task = next++; task < tasks; task = next++) {
      try {
        const std::size_t i = task / static_cast<std::size_t>(cfg.reps);
        const std::size_t r = task % static_cast<std::size_t>(cfg.reps);
        std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                          static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(r)};
        std::uint64_t sub = 0;
        std::array<std::uint32_t, 2> words{};
        seq.generate(words.begin(), words.end());
        sub = (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
        const std::size_t n = cfg.ns[i];
        const auto xs = sample_grid(cfg.target, n, sub);
        GridDensity est;
        if (cfg.estimator == EstimatorKind::Kde) {
          est = kde(xs, kde_bandwidth(n, target.dims(), cfg.kde_scale), lo, hi, target.shape()).density;
        } else {
          est = regrid(mu_hat(xs, cfg.wavelet).density, target.shape());
          est.normalize();
        }
        results[task] = grid_aw1(target_n, est, cfg.d);
      } catch (...) {
        errors[task] = std::current_exception();
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(cfg.threads, static_cast<unsigned>(tasks)));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  RateTable table;
  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t i = 0; i < cfg.ns.size(); ++i) {
    RateRow row;
    row.n = cfg.ns[i];
    const auto begin = results.begin() + static_cast<std::ptrdiff_t>(i * static_cast<std::size_t>(cfg.reps));
    row.values.assign(begin, begin + cfg.reps);
    double sum = 0.0;
    for (double v : row.values) sum += v;
    row.mean = sum / cfg.reps;
    double ss = 0.0;
    for (double v : row.values) ss += (v - row.mean) * (v - row.mean);
    row.sd = std::sqrt(ss / (cfg.reps - 1));
    xs.push_back(static_cast<double>(row.n));
    ys.push_back(row.mean);
    table.rows.push_back(std::move(row));
  }
  if (xs.size() >= 2) {
    const auto fit = fit_loglog(xs, ys);
    table.slope = fit.slope;
    table.slope_se = fit.slope_se;
  }
  return table;
}

}  // namespace awd
