#pragma once

// Grid densities, k-th order product kernels, convolution, Sobolev norms and
// the smoothing estimates that connect TV to W.

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "awd/adapted.hpp"
#include "awd/measures.hpp"

namespace awd {

/// Tensor grid on a box with one value per cell, stored row-major (last axis fastest).
class GridDensity {
 public:
  GridDensity() = default;
  GridDensity(std::vector<double> lo, std::vector<double> hi, std::vector<int> cells);

  /// Samples f at cell centers.
  static GridDensity from_function(std::vector<double> lo, std::vector<double> hi, std::vector<int> cells,
                                   const std::function<double(std::span<const double>)>& f);

  [[nodiscard]] int dims() const noexcept { return static_cast<int>(cells_.size()); }
  [[nodiscard]] int cells(int axis) const { return cells_.at(static_cast<std::size_t>(axis)); }
  [[nodiscard]] const std::vector<int>& shape() const noexcept { return cells_; }
  [[nodiscard]] double lo(int axis) const { return lo_.at(static_cast<std::size_t>(axis)); }
  [[nodiscard]] double hi(int axis) const { return hi_.at(static_cast<std::size_t>(axis)); }
  [[nodiscard]] double spacing(int axis) const { return (hi(axis) - lo(axis)) / cells(axis); }
  [[nodiscard]] double center(int axis, int index) const { return lo(axis) + (index + 0.5) * spacing(axis); }
  [[nodiscard]] double cell_volume() const;
  [[nodiscard]] double max_spacing() const;
  /// Diameter of one cell in |.|_p, i.e. (sum_i spacing_i^p)^(1/p).
  [[nodiscard]] double cell_diameter(double p = 1.0) const;
  [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
  [[nodiscard]] std::size_t stride(int axis) const { return strides_.at(static_cast<std::size_t>(axis)); }

  [[nodiscard]] std::vector<double>& values() noexcept { return values_; }
  [[nodiscard]] const std::vector<double>& values() const noexcept { return values_; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  /// Cell center of a flat index.
  [[nodiscard]] std::vector<double> center_of(std::size_t flat) const;
  [[nodiscard]] std::vector<int> unflatten(std::size_t flat) const;

  /// sum values * cell volume.
  [[nodiscard]] double mass() const;
  void normalize();
  [[nodiscard]] bool normalized() const noexcept { return normalized_; }
  void set_normalized(bool v) noexcept { normalized_ = v; }

  [[nodiscard]] bool same_grid(const GridDensity& other) const;

 private:
  std::vector<double> lo_, hi_;
  std::vector<int> cells_;
  std::vector<std::size_t> strides_;
  std::vector<double> values_;
  bool normalized_ = false;
};

/// One-line JSON header, newline, then little-endian f64 cell values.
void save_grid(const GridDensity& g, const std::string& path);
GridDensity load_grid(const std::string& path);

/// Mass-preserving resampling onto a coarser or finer grid over the same box.
GridDensity regrid(const GridDensity& g, const std::vector<int>& cells);

/// Cell-center atoms with masses value * volume. Stage t owns axes (t-1)d .. td-1.
PathMeasure quantize(const GridDensity& g, int d = 1);

/// Exact W_1 between the cell-center measures of two grids on the same box,
/// with the |.|_1 ground metric, by min-cost flow on the nearest-neighbour graph.
double grid_w1(const GridDensity& f, const GridDensity& g);

struct GridWq {
  double value = 0.0;      // W_q of the coarsened cell-center measures
  double budget = 0.0;     // coarse cell diameter in |.|_q
  std::vector<int> cells;  // coarse shape used
};

/// W_q between two grids after coarsening to at most max_atoms cells.
GridWq grid_wq(const GridDensity& f, const GridDensity& g, double q, std::size_t max_atoms = 2000);

/// Moment M_r of the cell-center measure of a grid.
double grid_moment(const GridDensity& g, double r);

// ---------------------------------------------------------------------------

enum class KernelFamily { Box, Gaussian, GaussianOrder, Custom };

/// Product kernel K(z) = prod_i K1(z_i) built from a 1D profile K1 supported on [-radius, radius].
struct KernelSpec {
  KernelFamily family = KernelFamily::Gaussian;
  int order = 2;
  int dims = 1;
  double radius = 8.0;
  std::function<double(double)> profile;

  double integral1d = 1.0;
  double l1_norm1d = 1.0;
  double variation1d = 0.0;               // total variation of K1, equals ||K1'||_1
  std::vector<double> moments1d;          // int K1 z^j, j = 0..8
  std::vector<double> abs_moments1d;      // int |K1| |z|^j, j = 0..8
  std::vector<double> cdf_table;          // cumulative integral of K1 on a uniform grid over [-radius, radius]

  [[nodiscard]] double integral() const;
  [[nodiscard]] double l1_norm() const;
  /// max_i ||d_i K||_1, the Lipschitz modulus of x -> K(. - x) in L1 for the |.|_1 path norm.
  [[nodiscard]] double lip() const;
  [[nodiscard]] double eval(std::span<const double> z) const;
  /// int_{-inf}^{z} K1.
  [[nodiscard]] double cdf(double z) const;
};

/// Box and Gaussian support k <= 2; GaussianOrder supports k <= 6 through
/// Hermite corrections of the Gaussian. Throws UnsupportedOrder otherwise.
KernelSpec make_kernel(KernelFamily family, int k, int dims);
/// Custom 1D profile on [-radius, radius]; the order is checked by quadrature.
KernelSpec make_custom_kernel(std::function<double(double)> profile, double radius, int k, int dims);
/// Custom profile from samples on a uniform grid over [-radius, radius], linearly interpolated.
KernelSpec make_custom_kernel(std::vector<double> table, double radius, int k, int dims);

/// sup over |alpha| <= k of prod_i (1/alpha_i!) int |K1| |z|^alpha_i.
double ckk_constant(const KernelSpec& K, int k);

/// K_h * f with K_h(z) = h^{-D} K(z/h), separable, zero padding outside the box.
/// Throws BandwidthTooSmall when h is below the largest cell spacing.
GridDensity convolve(const GridDensity& f, const KernelSpec& K, double h);

/// sum_{|alpha| <= k} ||D^alpha f||_r by finite differences; r is 1 or infinity.
double sobolev_norm(const GridDensity& f, int k, double r);

/// (1 + |x|_p^p) f(x) on the same grid.
GridDensity weighted_density(const GridDensity& f, double p);

struct SmoothingErrorRow {
  double h = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  [[nodiscard]] double ratio() const { return rhs > 0.0 ? lhs / rhs : 0.0; }
};

struct SmoothingErrorTable {
  std::vector<SmoothingErrorRow> rows;
  double sobolev = 0.0;
  double ckk = 0.0;
  double decay_order = 0.0;  // least-squares slope of log lhs against log h
};

SmoothingErrorTable lemma41_check(const GridDensity& f, const KernelSpec& K, int k, const std::vector<double>& hs);

struct SmoothingBounds {
  double lhs1 = 0.0, rhs1 = 0.0;
  double lhs2 = 0.0, rhs2 = 0.0;
  double w1 = 0.0;
  GridWq wq;
  double c1 = 0.0, c2 = 0.0;
};

SmoothingBounds lemma42_bounds(const GridDensity& f, const GridDensity& g, const KernelSpec& K, double h, double p,
                             double q);

/// Constants C_1, C_2 of the smoothing estimate from the moments of mu and nu.
double theorem_c1(const KernelSpec& K, double p, double q, double moment_mu, double moment_nu);
double theorem_c2(const KernelSpec& K, double p, double q, double moment_mu, double moment_nu);

struct TransferOptions {
  int k = 1;
  double p = 1.0;
  double q = 2.0;
  int d = 1;
  std::size_t max_lp_atoms = 2000;
  /// Densities are polynomials of degree < k on the box.
  bool polynomial = false;
};

struct TransferReport {
  int T = 1;
  double aw_p_pow = 0.0;
  double wq = 0.0;
  double wq_budget = 0.0;
  double w1 = 0.0;
  CtVector ct;
  double c0 = 0.0, c1 = 0.0, c2 = 0.0, ckk = 0.0, lip = 0.0, l1 = 0.0;
  double sobolev_f = 0.0, sobolev_g = 0.0;      // ||f||_{k,1}, ||g||_{k,1}
  double sobolev_fp = 0.0, sobolev_gp = 0.0;    // ||f_p||_{k,1}, ||g_p||_{k,1}
  double bandwidth = 0.0;                       // h*
  double rhs = 0.0;
  double diam_pow = 0.0;
  double rhs_compact = 0.0;
  std::optional<double> rhs_polynomial;
  double tolerance = 1e-6;
  std::vector<BoundCheck> checks;
  [[nodiscard]] bool all_pass() const;
};

TransferReport theorem29_bound(const GridDensity& f, const GridDensity& g, const KernelSpec& K,
                                const TransferOptions& opts);

}  // namespace awd
