#pragma once

// Density estimators built from samples and the Monte-Carlo harness for
// E[AW_1(mu, estimate)] as the sample size grows.

#include <cstdint>
#include <optional>
#include <vector>

#include "awd/measures.hpp"
#include "awd/smoothing.hpp"

namespace awd {

using Samples = std::vector<std::vector<double>>;

/// (1/n) sum delta_{X_i}, duplicates merged.
PathMeasure empirical_measure(const Samples& samples, int T, int d = 1);

struct KdeResult {
  GridDensity density;
  double clipped_mass = 0.0;  // kernel mass that fell outside the box before renormalization
};

/// Gaussian KDE with exact cell masses on the grid (lo, hi, cells), renormalized to the box.
/// Throws BandwidthTooSmall when h is below the cell spacing.
KdeResult kde(const Samples& samples, double h, const std::vector<double>& lo, const std::vector<double>& hi,
              const std::vector<int>& cells);

/// h = scale * n^(-1/(D+2)).
double kde_bandwidth(std::size_t n, int dims, double scale = 1.0);

struct WaveletConfig {
  int dims = 1;
  int j0 = 0;
  double smoothness = 1.0;
  std::optional<int> level;  // overrides the J_n rule
};

/// J_n = round(log2(n^(1/(2s+D)))), clamped to [j0, floor(12/D)].
int wavelet_level(std::size_t n, const WaveletConfig& cfg);

/// Haar coefficients on [0,1]^D in nonstandard (isotropic) layout: a 2^J-per-axis array
/// whose corner block [0, 2^j0)^D holds the scaling coefficients at level j0 and whose
/// remaining entries hold the detail coefficients of levels j0..J-1.
struct HaarCoefficients {
  int dims = 1;
  int j0 = 0;
  int level = 0;  // J
  std::vector<double> values;
};

struct WaveletEstimate {
  GridDensity density;  // piecewise constant on the level-J dyadic grid
  HaarCoefficients coefficients;
};

/// Throws SampleOutOfBox for samples outside [0,1]^D.
WaveletEstimate wavelet_estimator(const Samples& samples, const WaveletConfig& cfg);

/// Inverse transform back to cell values on the level-J grid.
GridDensity haar_reconstruct(const HaarCoefficients& c);
/// Forward transform of a density on a dyadic grid of [0,1]^D with 2^level cells per axis.
HaarCoefficients haar_decompose(const GridDensity& f, int j0);

struct MuHat {
  GridDensity density;
  bool fallback = false;
  double clipped_mass = 0.0;
};

/// The wavelet estimate when it is nonnegative, otherwise the standard Gaussian
/// bump at the first sample restricted to the same grid.
MuHat mu_hat(const Samples& samples, const WaveletConfig& cfg);
MuHat mu_hat(const HaarCoefficients& c, const std::vector<double>& first_sample);

/// n i.i.d. draws from a grid density: cell by mass, then uniform inside the cell.
Samples sample_grid(const GridDensity& f, std::size_t n, std::uint64_t seed);

enum class EstimatorKind { Kde, Wavelet };

struct RateConfig {
  GridDensity target;
  EstimatorKind estimator = EstimatorKind::Kde;
  double kde_scale = 0.5;
  WaveletConfig wavelet;
  std::vector<std::size_t> ns;
  int reps = 10;
  std::uint64_t seed = 0;
  std::vector<int> backend_cells;  // AW resolution, shared by every n
  int d = 1;
  unsigned threads = 1;
};

struct RateRow {
  std::size_t n = 0;
  double mean = 0.0;
  double sd = 0.0;
  std::vector<double> values;
};

struct RateTable {
  std::vector<RateRow> rows;
  double slope = 0.0;
  double slope_se = 0.0;
};

/// AW_1 between two densities on the same grid after identical quantization.
double grid_aw1(const GridDensity& f, const GridDensity& g, int d = 1);

RateTable rate_experiment(const RateConfig& cfg);

}  // namespace awd
