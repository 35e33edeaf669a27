#include "awd/smoothing.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <numeric>

#include <nlohmann/json.hpp>

#include "awd/ot_exact.hpp"
#include "awd/stats.hpp"

namespace awd {

namespace {

using nlohmann::json;

struct Tap {
  int offset;
  double weight;
};

// out[o, j, i] = sum_taps in[o, j - offset, i] * weight, along one axis with zero padding.
std::vector<double> stencil_axis(const std::vector<double>& in, const std::vector<int>& shape, int axis,
                                 const std::vector<Tap>& taps) {
  const auto a = static_cast<std::size_t>(axis);
  std::size_t inner = 1;
  for (std::size_t k = a + 1; k < shape.size(); ++k) inner *= static_cast<std::size_t>(shape[k]);
  const auto n = static_cast<std::size_t>(shape[a]);
  const std::size_t outer = in.size() / (n * inner);
  std::vector<double> out(in.size(), 0.0);
  for (std::size_t o = 0; o < outer; ++o) {
    const std::size_t base = o * n * inner;
    for (std::size_t j = 0; j < n; ++j) {
      double* dst = out.data() + base + j * inner;
      for (const auto& tap : taps) {
        const long src = static_cast<long>(j) - tap.offset;
        if (src < 0 || src >= static_cast<long>(n)) continue;
        const double* s = in.data() + base + static_cast<std::size_t>(src) * inner;
        for (std::size_t i = 0; i < inner; ++i) dst[i] += tap.weight * s[i];
      }
    }
  }
  return out;
}

// Linear map along one axis given per-output-row sparse weights over input indices.
std::vector<double> map_axis(const std::vector<double>& in, const std::vector<int>& shape, int axis, int n_out,
                             const std::vector<std::vector<std::pair<int, double>>>& rows) {
  const auto a = static_cast<std::size_t>(axis);
  std::size_t inner = 1;
  for (std::size_t k = a + 1; k < shape.size(); ++k) inner *= static_cast<std::size_t>(shape[k]);
  const auto n = static_cast<std::size_t>(shape[a]);
  const std::size_t outer = in.size() / (n * inner);
  std::vector<double> out(outer * static_cast<std::size_t>(n_out) * inner, 0.0);
  for (std::size_t o = 0; o < outer; ++o) {
    for (int j = 0; j < n_out; ++j) {
      double* dst = out.data() + (o * static_cast<std::size_t>(n_out) + static_cast<std::size_t>(j)) * inner;
      for (const auto& [src, w] : rows[static_cast<std::size_t>(j)]) {
        const double* s = in.data() + (o * n + static_cast<std::size_t>(src)) * inner;
        for (std::size_t i = 0; i < inner; ++i) dst[i] += w * s[i];
      }
    }
  }
  return out;
}

// First derivative along one axis: central inside, second-order one-sided at the ends.
std::vector<double> diff_axis(const std::vector<double>& in, const std::vector<int>& shape, int axis, double dx) {
  const auto a = static_cast<std::size_t>(axis);
  std::size_t inner = 1;
  for (std::size_t k = a + 1; k < shape.size(); ++k) inner *= static_cast<std::size_t>(shape[k]);
  const auto n = static_cast<std::size_t>(shape[a]);
  const std::size_t outer = in.size() / (n * inner);
  std::vector<double> out(in.size(), 0.0);
  const double c = 1.0 / (2.0 * dx);
  for (std::size_t o = 0; o < outer; ++o) {
    const std::size_t base = o * n * inner;
    auto at = [&](std::size_t j, std::size_t i) { return in[base + j * inner + i]; };
    for (std::size_t i = 0; i < inner; ++i) {
      out[base + i] = c * (-3.0 * at(0, i) + 4.0 * at(1, i) - at(2, i));
      out[base + (n - 1) * inner + i] = c * (3.0 * at(n - 1, i) - 4.0 * at(n - 2, i) + at(n - 3, i));
      for (std::size_t j = 1; j + 1 < n; ++j) out[base + j * inner + i] = c * (at(j + 1, i) - at(j - 1, i));
    }
  }
  return out;
}

void enumerate_multi(int dims, int max_total, std::vector<int>& cur, const std::function<void(const std::vector<int>&)>& f) {
  if (static_cast<int>(cur.size()) == dims) {
    f(cur);
    return;
  }
  const int used = std::accumulate(cur.begin(), cur.end(), 0);
  for (int v = 0; v + used <= max_total; ++v) {
    cur.push_back(v);
    enumerate_multi(dims, max_total, cur, f);
    cur.pop_back();
  }
}

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

constexpr int kQuadPoints = 1 << 20;
constexpr int kCdfStride = 16;
constexpr int kMaxMoment = 8;

void tabulate(KernelSpec& K) {
  const double R = K.radius;
  const double dz = 2.0 * R / kQuadPoints;
  K.moments1d.assign(kMaxMoment + 1, 0.0);
  K.abs_moments1d.assign(kMaxMoment + 1, 0.0);
  K.cdf_table.assign(kQuadPoints / kCdfStride + 1, 0.0);
  double cum = 0.0;
  double prev = 0.0;
  double variation = 0.0;
  for (int i = 0; i < kQuadPoints; ++i) {
    const double z = -R + (i + 0.5) * dz;
    const double v = K.profile(z);
    variation += std::abs(v - prev);
    prev = v;
    double zp = 1.0;
    const double az = std::abs(z);
    double azp = 1.0;
    for (int j = 0; j <= kMaxMoment; ++j) {
      K.moments1d[static_cast<std::size_t>(j)] += v * zp * dz;
      K.abs_moments1d[static_cast<std::size_t>(j)] += std::abs(v) * azp * dz;
      zp *= z;
      azp *= az;
    }
    cum += v * dz;
    if ((i + 1) % kCdfStride == 0) K.cdf_table[static_cast<std::size_t>((i + 1) / kCdfStride)] = cum;
  }
  variation += std::abs(prev);
  K.integral1d = K.moments1d[0];
  K.l1_norm1d = K.abs_moments1d[0];
  K.variation1d = variation;
}

void validate_order(const KernelSpec& K, int k) {
  require(std::abs(K.integral1d - 1.0) <= 1e-6, ErrorKind::InvalidParams,
          "kernel integrates to " + std::to_string(K.integral1d) + ", not 1");
  for (int j = 1; j < k; ++j) {
    require(std::abs(K.moments1d[static_cast<std::size_t>(j)]) <= 1e-6, ErrorKind::UnsupportedOrder,
            "kernel moment of order " + std::to_string(j) + " is " +
                std::to_string(K.moments1d[static_cast<std::size_t>(j)]) + ", so it is not of order " +
                std::to_string(k));
  }
}

double gaussian(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

// phi(z) * sum_{j < m} (-1)^j / (2^j j!) He_{2j}(z): vanishing moments up to order 2m - 1.
double gaussian_order(double z, int m) {
  double he_prev = 1.0;
  double he = z;
  double sum = 1.0;
  double coef = 1.0;
  for (int n = 1; n < 2 * m - 1; ++n) {
    const double next = z * he - n * he_prev;
    he_prev = he;
    he = next;
    if ((n + 1) % 2 == 0) {
      const int j = (n + 1) / 2;
      coef *= -1.0 / (2.0 * j);
      sum += coef * he;
    }
  }
  return gaussian(z) * sum;
}

}  // namespace

GridDensity::GridDensity(std::vector<double> lo, std::vector<double> hi, std::vector<int> cells)
    : lo_(std::move(lo)), hi_(std::move(hi)), cells_(std::move(cells)) {
  require(!cells_.empty() && lo_.size() == cells_.size() && hi_.size() == cells_.size(), ErrorKind::ShapeMismatch,
          "grid extents and cell counts must have one entry per axis");
  std::size_t total = 1;
  strides_.assign(cells_.size(), 1);
  for (std::size_t a = cells_.size(); a-- > 0;) {
    require(cells_[a] >= 1, ErrorKind::ShapeMismatch, "every axis needs at least one cell");
    require(std::isfinite(lo_[a]) && std::isfinite(hi_[a]) && hi_[a] > lo_[a], ErrorKind::ShapeMismatch,
            "axis " + std::to_string(a) + " has an empty or non-finite extent");
    strides_[a] = total;
    total *= static_cast<std::size_t>(cells_[a]);
  }
  values_.assign(total, 0.0);
}

GridDensity GridDensity::from_function(std::vector<double> lo, std::vector<double> hi, std::vector<int> cells,
                                       const std::function<double(std::span<const double>)>& f) {
  GridDensity g(std::move(lo), std::move(hi), std::move(cells));
  for (std::size_t i = 0; i < g.size(); ++i) g.values_[i] = f(g.center_of(i));
  return g;
}

double GridDensity::cell_volume() const {
  double v = 1.0;
  for (int a = 0; a < dims(); ++a) v *= spacing(a);
  return v;
}

double GridDensity::max_spacing() const {
  double s = 0.0;
  for (int a = 0; a < dims(); ++a) s = std::max(s, spacing(a));
  return s;
}

double GridDensity::cell_diameter(double p) const {
  double s = 0.0;
  for (int a = 0; a < dims(); ++a) s += std::pow(spacing(a), p);
  return std::pow(s, 1.0 / p);
}

std::vector<int> GridDensity::unflatten(std::size_t flat) const {
  std::vector<int> idx(cells_.size());
  for (std::size_t a = 0; a < cells_.size(); ++a) {
    idx[a] = static_cast<int>(flat / strides_[a]);
    flat %= strides_[a];
  }
  return idx;
}

std::vector<double> GridDensity::center_of(std::size_t flat) const {
  const auto idx = unflatten(flat);
  std::vector<double> x(idx.size());
  for (std::size_t a = 0; a < idx.size(); ++a) x[a] = center(static_cast<int>(a), idx[a]);
  return x;
}

double GridDensity::mass() const { return std::accumulate(values_.begin(), values_.end(), 0.0) * cell_volume(); }

void GridDensity::normalize() {
  const double m = mass();
  require(m > 0.0 && std::isfinite(m), ErrorKind::Degenerate, "grid density has no positive mass");
  for (double& v : values_) v /= m;
  normalized_ = true;
}

bool GridDensity::same_grid(const GridDensity& other) const {
  if (cells_ != other.cells_) return false;
  for (std::size_t a = 0; a < cells_.size(); ++a) {
    if (std::abs(lo_[a] - other.lo_[a]) > 1e-12 || std::abs(hi_[a] - other.hi_[a]) > 1e-12) return false;
  }
  return true;
}

void save_grid(const GridDensity& g, const std::string& path) {
  static_assert(std::endian::native == std::endian::little, "grid files are little-endian");
  std::vector<double> lo(static_cast<std::size_t>(g.dims()));
  std::vector<double> hi(lo.size());
  for (int a = 0; a < g.dims(); ++a) {
    lo[static_cast<std::size_t>(a)] = g.lo(a);
    hi[static_cast<std::size_t>(a)] = g.hi(a);
  }
  const json header{{"cells", g.shape()}, {"lo", lo}, {"hi", hi}, {"normalized", g.normalized()}};
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::Io, "cannot write " + path);
  out << header.dump() << '\n';
  out.write(reinterpret_cast<const char*>(g.values().data()), static_cast<std::streamsize>(g.size() * sizeof(double)));
}

GridDensity load_grid(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot open " + path);
  std::string line;
  std::getline(in, line);
  json header;
  try {
    header = json::parse(line);
    for (const auto& [key, _] : header.items()) {
      require(key == "cells" || key == "lo" || key == "hi" || key == "normalized", ErrorKind::Parse,
              "grid header has unknown key '" + key + "'");
    }
    GridDensity g(header.at("lo").get<std::vector<double>>(), header.at("hi").get<std::vector<double>>(),
                  header.at("cells").get<std::vector<int>>());
    in.read(reinterpret_cast<char*>(g.values().data()), static_cast<std::streamsize>(g.size() * sizeof(double)));
    require(static_cast<std::size_t>(in.gcount()) == g.size() * sizeof(double), ErrorKind::Parse,
            "grid file " + path + " holds fewer cells than its header declares");
    g.set_normalized(header.value("normalized", false));
    return g;
  } catch (const json::exception& e) {
    fail(ErrorKind::Parse, std::string("grid header: ") + e.what());
  }
}

GridDensity regrid(const GridDensity& g, const std::vector<int>& cells) {
  require(static_cast<int>(cells.size()) == g.dims(), ErrorKind::ShapeMismatch, "regrid needs one count per axis");
  std::vector<double> lo(cells.size());
  std::vector<double> hi(cells.size());
  for (int a = 0; a < g.dims(); ++a) {
    lo[static_cast<std::size_t>(a)] = g.lo(a);
    hi[static_cast<std::size_t>(a)] = g.hi(a);
  }
  GridDensity out(lo, hi, cells);
  std::vector<double> vals = g.values();
  std::vector<int> shape = g.shape();
  for (int a = 0; a < g.dims(); ++a) {
    const int n_in = g.cells(a);
    const int n_out = cells[static_cast<std::size_t>(a)];
    const double d_in = g.spacing(a);
    const double d_out = out.spacing(a);
    std::vector<std::vector<std::pair<int, double>>> rows(static_cast<std::size_t>(n_out));
    for (int j = 0; j < n_out; ++j) {
      const double l = j * d_out;
      const double r = (j + 1) * d_out;
      const int first = std::max(0, static_cast<int>(std::floor(l / d_in)) - 1);
      const int last = std::min(n_in - 1, static_cast<int>(std::ceil(r / d_in)) + 1);
      for (int i = first; i <= last; ++i) {
        const double overlap = std::min(r, (i + 1) * d_in) - std::max(l, i * d_in);
        if (overlap > 0.0) rows[static_cast<std::size_t>(j)].emplace_back(i, overlap / d_out);
      }
    }
    vals = map_axis(vals, shape, a, n_out, rows);
    shape[static_cast<std::size_t>(a)] = n_out;
  }
  out.values() = std::move(vals);
  out.set_normalized(g.normalized());
  return out;
}

PathMeasure quantize(const GridDensity& g, int d) {
  require(d >= 1 && g.dims() % d == 0, ErrorKind::ShapeMismatch,
          "grid with " + std::to_string(g.dims()) + " axes cannot be split into stages of dimension " + std::to_string(d));
  const double vol = g.cell_volume();
  std::vector<WeightedPath> paths;
  for (std::size_t i = 0; i < g.size(); ++i) {
    require(g[i] >= 0.0 && std::isfinite(g[i]), ErrorKind::NonProbability, "grid has a negative cell value");
    if (g[i] > 0.0) paths.push_back({g.center_of(i), g[i] * vol});
  }
  return PathMeasure::from_paths(g.dims() / d, d, std::move(paths));
}

double grid_w1(const GridDensity& f, const GridDensity& g) {
  require(f.same_grid(g), ErrorKind::GridMismatch, "W1 needs two densities on the same grid");
  const double mf = f.mass();
  const double mg = g.mass();
  require(mf > 0.0 && mg > 0.0, ErrorKind::Degenerate, "grid densities need positive mass");
  const int n = static_cast<int>(f.size());
  NetworkSimplex ns(n);
  ns.reserve_arcs(static_cast<std::size_t>(n) * 2 * static_cast<std::size_t>(f.dims()));
  const double vol = f.cell_volume();
  for (int i = 0; i < n; ++i) {
    const auto idx = f.unflatten(static_cast<std::size_t>(i));
    for (int a = 0; a < f.dims(); ++a) {
      if (idx[static_cast<std::size_t>(a)] + 1 < f.cells(a)) {
        const int j = i + static_cast<int>(f.stride(a));
        ns.add_arc(i, j, f.spacing(a));
        ns.add_arc(j, i, f.spacing(a));
      }
    }
    ns.set_supply(i, f[static_cast<std::size_t>(i)] * vol / mf - g[static_cast<std::size_t>(i)] * vol / mg);
  }
  const auto status = ns.run();
  require(status == NetworkSimplex::Status::Optimal, ErrorKind::Degenerate, "grid flow did not converge");
  return ns.total_cost();
}

GridWq grid_wq(const GridDensity& f, const GridDensity& g, double q, std::size_t max_atoms) {
  require(f.same_grid(g), ErrorKind::GridMismatch, "W_q needs two densities on the same grid");
  require(q >= 1.0, ErrorKind::InvalidParams, "q must be >= 1");
  GridWq out;
  out.cells = f.shape();
  int factor = 1;
  auto count = [&](int s) {
    std::size_t c = 1;
    for (int n : f.shape()) c *= static_cast<std::size_t>((n + s - 1) / s);
    return c;
  };
  while (count(factor) > max_atoms) ++factor;
  GridDensity cf = f;
  GridDensity cg = g;
  if (factor > 1) {
    for (auto& n : out.cells) n = (n + factor - 1) / factor;
    cf = regrid(f, out.cells);
    cg = regrid(g, out.cells);
    out.budget = cf.cell_diameter(q);
  }
  const auto mu = quantize(cf, f.dims());
  const auto nu = quantize(cg, g.dims());
  out.value = std::pow(std::max(0.0, wasserstein_pow(mu, nu, q)), 1.0 / q);
  return out;
}

double grid_moment(const GridDensity& g, double r) {
  require(r >= 0.0, ErrorKind::InvalidParams, "moment order must be >= 0");
  if (r == 0.0) return 1.0;
  double total = 0.0;
  double mass = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g[i] == 0.0) continue;
    double s = 0.0;
    for (double x : g.center_of(i)) s += std::pow(std::abs(x), r);
    total += g[i] * s;
    mass += g[i];
  }
  return mass > 0.0 ? total / mass : 0.0;
}

double KernelSpec::integral() const { return std::pow(integral1d, dims); }
double KernelSpec::l1_norm() const { return std::pow(l1_norm1d, dims); }
double KernelSpec::lip() const { return variation1d * std::pow(l1_norm1d, dims - 1); }

double KernelSpec::eval(std::span<const double> z) const {
  double v = 1.0;
  for (double x : z) v *= std::abs(x) <= radius ? profile(x) : 0.0;
  return v;
}

double KernelSpec::cdf(double z) const {
  if (z <= -radius) return 0.0;
  if (z >= radius) return cdf_table.back();
  const double pos = (z + radius) / (2.0 * radius) * static_cast<double>(cdf_table.size() - 1);
  const auto i = static_cast<std::size_t>(pos);
  if (i + 1 >= cdf_table.size()) return cdf_table.back();
  const double frac = pos - static_cast<double>(i);
  return cdf_table[i] + frac * (cdf_table[i + 1] - cdf_table[i]);
}

KernelSpec make_kernel(KernelFamily family, int k, int dims) {
  require(k >= 1, ErrorKind::InvalidParams, "kernel order must be >= 1");
  require(k <= 6, ErrorKind::UnsupportedOrder, "kernel order " + std::to_string(k) + " exceeds 6");
  require(dims >= 1, ErrorKind::InvalidParams, "kernel dimension must be >= 1");
  KernelSpec K;
  K.family = family;
  K.order = k;
  K.dims = dims;
  switch (family) {
    case KernelFamily::Box:
      require(k <= 2, ErrorKind::UnsupportedOrder, "the box kernel has order at most 2");
      K.radius = 0.5;
      K.profile = [](double z) { return std::abs(z) <= 0.5 ? 1.0 : 0.0; };
      break;
    case KernelFamily::Gaussian:
      require(k <= 2, ErrorKind::UnsupportedOrder, "the Gaussian kernel has order at most 2");
      K.radius = 8.0;
      K.profile = gaussian;
      break;
    case KernelFamily::GaussianOrder: {
      const int m = (k + 1) / 2;
      K.radius = 8.0 + m;
      K.profile = [m](double z) { return gaussian_order(z, m); };
      break;
    }
    case KernelFamily::Custom:
      fail(ErrorKind::InvalidParams, "custom kernels are built by make_custom_kernel");
  }
  tabulate(K);
  validate_order(K, k);
  return K;
}

KernelSpec make_custom_kernel(std::function<double(double)> profile, double radius, int k, int dims) {
  require(k >= 1, ErrorKind::InvalidParams, "kernel order must be >= 1");
  require(k <= 6, ErrorKind::UnsupportedOrder, "kernel order " + std::to_string(k) + " exceeds 6");
  require(radius > 0.0 && std::isfinite(radius), ErrorKind::InvalidParams, "kernel radius must be positive");
  KernelSpec K;
  K.family = KernelFamily::Custom;
  K.order = k;
  K.dims = dims;
  K.radius = radius;
  K.profile = std::move(profile);
  tabulate(K);
  validate_order(K, k);
  return K;
}

KernelSpec make_custom_kernel(std::vector<double> table, double radius, int k, int dims) {
  require(table.size() >= 2, ErrorKind::InvalidParams, "kernel table needs two or more samples");
  auto profile = [table = std::move(table), radius](double z) {
    if (z < -radius || z > radius) return 0.0;
    const double pos = (z + radius) / (2.0 * radius) * static_cast<double>(table.size() - 1);
    const auto i = std::min(static_cast<std::size_t>(pos), table.size() - 2);
    const double frac = pos - static_cast<double>(i);
    return table[i] + frac * (table[i + 1] - table[i]);
  };
  return make_custom_kernel(std::move(profile), radius, k, dims);
}

double ckk_constant(const KernelSpec& K, int k) {
  require(k >= 0 && k <= kMaxMoment, ErrorKind::UnsupportedOrder, "C_{k,K} is tabulated up to k = 8");
  double best = 0.0;
  std::vector<int> cur;
  enumerate_multi(K.dims, k, cur, [&](const std::vector<int>& alpha) {
    double v = 1.0;
    for (int a : alpha) v *= K.abs_moments1d[static_cast<std::size_t>(a)] / factorial(a);
    best = std::max(best, v);
  });
  return best;
}

GridDensity convolve(const GridDensity& f, const KernelSpec& K, double h) {
  require(h > 0.0 && std::isfinite(h), ErrorKind::InvalidParams, "bandwidth must be positive");
  require(h >= f.max_spacing(), ErrorKind::BandwidthTooSmall,
          "bandwidth " + std::to_string(h) + " is below the cell size " + std::to_string(f.max_spacing()));
  require(K.dims == f.dims(), ErrorKind::ShapeMismatch, "kernel and grid dimensions differ");
  std::vector<double> vals = f.values();
  for (int a = 0; a < f.dims(); ++a) {
    const double dx = f.spacing(a);
    const int reach = static_cast<int>(std::ceil(K.radius * h / dx + 0.5));
    std::vector<Tap> taps;
    for (int m = -reach; m <= reach; ++m) {
      const double w = K.cdf((m + 0.5) * dx / h) - K.cdf((m - 0.5) * dx / h);
      if (w != 0.0) taps.push_back({m, w});
    }
    vals = stencil_axis(vals, f.shape(), a, taps);
  }
  GridDensity out = f;
  out.values() = std::move(vals);
  out.set_normalized(false);
  return out;
}

double sobolev_norm(const GridDensity& f, int k, double r) {
  require(k >= 0 && k <= 3, ErrorKind::UnsupportedOrder, "Sobolev order must be in [0, 3]");
  require(r == 1.0 || std::isinf(r), ErrorKind::InvalidParams, "Sobolev exponent must be 1 or infinity");
  for (int a = 0; a < f.dims(); ++a) {
    require(f.cells(a) >= 8, ErrorKind::GridTooCoarse,
            "axis " + std::to_string(a) + " has " + std::to_string(f.cells(a)) + " cells, need at least 8");
  }
  const double vol = f.cell_volume();
  double total = 0.0;
  std::vector<int> cur;
  enumerate_multi(f.dims(), k, cur, [&](const std::vector<int>& alpha) {
    std::vector<double> v = f.values();
    for (int a = 0; a < f.dims(); ++a) {
      for (int rep = 0; rep < alpha[static_cast<std::size_t>(a)]; ++rep) v = diff_axis(v, f.shape(), a, f.spacing(a));
    }
    if (r == 1.0) {
      double s = 0.0;
      for (double x : v) s += std::abs(x);
      total += s * vol;
    } else {
      double m = 0.0;
      for (double x : v) m = std::max(m, std::abs(x));
      total += m;
    }
  });
  return total;
}

GridDensity weighted_density(const GridDensity& f, double p) {
  GridDensity out = f;
  for (std::size_t i = 0; i < f.size(); ++i) {
    double w = 1.0;
    for (double x : f.center_of(i)) w += std::pow(std::abs(x), p);
    out[i] = f[i] * w;
  }
  out.set_normalized(false);
  return out;
}

SmoothingErrorTable lemma41_check(const GridDensity& f, const KernelSpec& K, int k, const std::vector<double>& hs) {
  require(!hs.empty(), ErrorKind::InvalidParams, "need at least one bandwidth");
  require(K.order >= k, ErrorKind::UnsupportedOrder, "kernel order is below k");
  SmoothingErrorTable table;
  table.sobolev = sobolev_norm(f, k, 1.0);
  table.ckk = ckk_constant(K, k);
  const double vol = f.cell_volume();
  std::vector<double> h_ok;
  std::vector<double> lhs_ok;
  for (double h : hs) {
    const auto smooth = convolve(f, K, h);
    double lhs = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) lhs += std::abs(smooth[i] - f[i]);
    lhs *= vol;
    table.rows.push_back({h, lhs, std::pow(h, k) * table.ckk * table.sobolev});
    if (lhs > 0.0) {
      h_ok.push_back(h);
      lhs_ok.push_back(lhs);
    }
  }
  if (h_ok.size() >= 2) table.decay_order = fit_loglog(h_ok, lhs_ok).slope;
  return table;
}

double theorem_c1(const KernelSpec& K, double p, double q, double moment_mu, double moment_nu) {
  const double e = (q - 1.0) / q;
  return K.l1_norm() * p * (std::pow(moment_mu, e) + std::pow(moment_nu, e));
}

double theorem_c2(const KernelSpec& K, double p, double q, double moment_mu, double moment_nu) {
  const double e = (q - 1.0) / q;
  return K.lip() * (1.0 + p * std::pow(moment_mu, e) + (p + 1.0) * std::pow(moment_nu, e));
}

SmoothingBounds lemma42_bounds(const GridDensity& f, const GridDensity& g, const KernelSpec& K, double h, double p,
                             double q) {
  require(f.same_grid(g), ErrorKind::GridMismatch, "smoothing bounds need densities on the same grid");
  require(p >= 1.0 && q >= 1.0, ErrorKind::InvalidParams, "p and q must be >= 1");
  SmoothingBounds r;
  const double vol = f.cell_volume();
  GridDensity diff = f;
  for (std::size_t i = 0; i < f.size(); ++i) diff[i] = f[i] - g[i];
  const auto smooth = convolve(diff, K, h);
  for (double v : smooth.values()) r.lhs1 += std::abs(v);
  r.lhs1 *= vol;
  r.w1 = grid_w1(f, g);
  r.rhs1 = K.lip() / h * r.w1;
  if (q > 1.0) {
    const auto fp = weighted_density(f, p);
    const auto gp = weighted_density(g, p);
    GridDensity dp = fp;
    for (std::size_t i = 0; i < f.size(); ++i) dp[i] = fp[i] - gp[i];
    const auto sp = convolve(dp, K, h);
    for (double v : sp.values()) r.lhs2 += std::abs(v);
    r.lhs2 *= vol;
    r.wq = grid_wq(f, g, q);
    const double r1 = q * (p - 1.0) / (q - 1.0);
    const double r2 = q * p / (q - 1.0);
    r.c1 = theorem_c1(K, p, q, grid_moment(f, r1), grid_moment(g, r1));
    r.c2 = theorem_c2(K, p, q, grid_moment(f, r2), grid_moment(g, r2));
    r.rhs2 = (r.c1 + r.c2 / h) * (r.wq.value + r.wq.budget);
  } else {
    r.lhs2 = std::numeric_limits<double>::quiet_NaN();
    r.rhs2 = std::numeric_limits<double>::quiet_NaN();
  }
  return r;
}

bool TransferReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const BoundCheck& c) { return c.pass; });
}

TransferReport theorem29_bound(const GridDensity& f, const GridDensity& g, const KernelSpec& K,
                                const TransferOptions& opts) {
  require(f.same_grid(g), ErrorKind::GridMismatch, "the bound needs densities on the same grid");
  require(opts.q > 1.0, ErrorKind::InvalidParams, "q must exceed 1");
  require(opts.p >= 1.0, ErrorKind::InvalidParams, "p must be >= 1");
  require(K.order >= opts.k, ErrorKind::UnsupportedOrder, "kernel order is below k");
  require(K.dims == f.dims(), ErrorKind::ShapeMismatch, "kernel and grid dimensions differ");
  TransferReport r;
  const double p = opts.p;
  const double q = opts.q;
  const int k = opts.k;
  const auto mu = quantize(f, opts.d);
  const auto nu = quantize(g, opts.d);
  r.T = mu.stages();
  r.aw_p_pow = adapted_wasserstein_dp(mu, nu, p).value_pow;
  const auto wq = grid_wq(f, g, q, opts.max_lp_atoms);
  r.wq = wq.value;
  r.wq_budget = wq.budget;
  r.w1 = grid_w1(f, g);
  r.ct = compute_ct(nu, p, &mu);
  r.c0 = std::pow(2.0, p) * lambda_constant(r.ct);
  const double r1 = q * (p - 1.0) / (q - 1.0);
  const double r2 = q * p / (q - 1.0);
  r.c1 = theorem_c1(K, p, q, moment(mu, r1), moment(nu, r1));
  r.c2 = theorem_c2(K, p, q, moment(mu, r2), moment(nu, r2));
  r.ckk = ckk_constant(K, k);
  r.lip = K.lip();
  r.l1 = K.l1_norm();
  r.sobolev_f = sobolev_norm(f, k, 1.0);
  r.sobolev_g = sobolev_norm(g, k, 1.0);
  r.sobolev_fp = sobolev_norm(weighted_density(f, p), k, 1.0);
  r.sobolev_gp = sobolev_norm(weighted_density(g, p), k, 1.0);

  const double w = r.wq + r.wq_budget;
  const double e = static_cast<double>(k) / (k + 1.0);
  r.bandwidth = std::pow(r.c2 * w / (r.ckk * (r.sobolev_f + r.sobolev_g)), 1.0 / (k + 1.0));
  r.rhs = r.c0 * r.c1 * w + 2.0 * r.c0 * std::pow(std::pow(r.ckk, 1.0 / k) * r.c2, e) *
                                std::pow(r.sobolev_fp + r.sobolev_gp, 1.0 / (k + 1.0)) * std::pow(w, e);
  r.diam_pow = 0.0;
  for (int a = 0; a < f.dims(); ++a) r.diam_pow += std::pow(f.hi(a) - f.lo(a), p);
  const double lam = 2.0 * r.T - 1.0;
  r.rhs_compact = 2.0 * lam * r.diam_pow * std::pow(std::pow(r.ckk, 1.0 / k) * r.lip, e) *
                  std::pow(r.sobolev_f + r.sobolev_g, 1.0 / (k + 1.0)) * std::pow(r.w1, e);
  auto add = [&](std::string name, double lhs, double rhs) {
    BoundCheck c{std::move(name), lhs, rhs, true};
    c.pass = c.slack() >= -r.tolerance;
    r.checks.push_back(std::move(c));
  };
  add("AW_p^p <= C0 C1 W_q + 2 C0 (C_kK^(1/k) C2)^(k/(k+1)) (|f_p|+|g_p|)^(1/(k+1)) W_q^(k/(k+1))", r.aw_p_pow, r.rhs);
  add("AW_p^p <= 2(2T-1) diam^p (C_kK^(1/k) Lip)^(k/(k+1)) (|f|+|g|)^(1/(k+1)) W_1^(k/(k+1))", r.aw_p_pow,
      r.rhs_compact);
  if (opts.polynomial) {
    r.rhs_polynomial = lam * r.diam_pow * r.lip * r.w1;
    add("AW_p^p <= (2T-1) diam^p Lip W_1", r.aw_p_pow, *r.rhs_polynomial);
  }
  return r;
}

}  // namespace awd
