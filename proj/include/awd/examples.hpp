#pragma once

// Parametric generators for the sharpness counterexamples.

#include <optional>
#include <vector>

#include "awd/measures.hpp"
#include "awd/smoothing.hpp"

namespace awd {

struct Example35Params {
  int T = 2;
  double eps = 0.1;
  /// Branching probability. Defaults to 2eps/(1+eps).
  std::optional<double> p;
  /// c_t for t = 2..T (size T-1), or empty for the unweighted variant.
  std::vector<double> c;
};

struct Example35 {
  PathMeasure mu;
  PathMeasure nu;
  WeightSpec weight;
  double p = 0.0;
  std::vector<double> d, r, u;  // index t-1 for t = 1..T-1
  double gamma1_mass = 0.0;     // (1-eps)/2
  double gamma2_mass = 0.0;     // (1+eps)/2
  std::vector<double> gamma1_leaf, gamma2_leaf;  // gamma_k({x^i}), i = 1..T
};

/// Smallest p for which the construction is a probability kernel: (2eps/(1+eps))^(1/(T-1)).
double example35_minimal_p(int T, double eps);

/// Closed forms TV = 2eps and ATV = 2eps((2T-2)(1-p)+1).
double example35_tv(double eps);
double example35_atv(int T, double eps, double p);

/// Throws InvalidEpsilon unless d_t < 1 and 0 <= r_t(1-p) <= 1 for every t <= T-1.
Example35 gen_example35(const Example35Params& params);

struct Example36 {
  PathMeasure mu;
  PathMeasure nu;
};

Example36 gen_example36(double eps);

struct Example43 {
  GridDensity mu;
  GridDensity nu;
};

/// Densities on [0,1]^2 with exact cell averages; cells per axis = ceil(1/mesh).
/// Throws MeshTooCoarse unless mesh <= eps/20.
Example43 gen_example43(double eps, int k, double mesh);

}  // namespace awd
