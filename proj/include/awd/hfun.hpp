#pragma once

// The auxiliary function
//   H(l,u,lambda,kappa,a,b,y) = (l+u)((lambda-kappa)|1-by| + 2 kappa (a min(1,y) - min(1,by)))
// and its infimum over laws of (u, y) with E[y] = 1, u >= 0, E[u] <= c l.

namespace awd {

struct HParams {
  double l = 0.0;
  double c = 0.0;
  double lambda = 0.0;
  double kappa = 0.0;
  double a = 0.0;
  double b = 0.0;

  /// Validates l, c >= 0, lambda >= kappa >= 0, b >= 0 and 0 <= a <= min(1, b).
  static HParams make(double l, double c, double lambda, double kappa, double a, double b);
};

double h_eval(const HParams& h, double u, double y);

enum class HBranch { Low, High };

/// One branch of the closed form, evaluated at any b > 0. Low is the formula for b <= 1.
double h_inf_branch(const HParams& h, HBranch branch);

/// Closed-form infimum: the Low branch for b <= 1, the High branch otherwise.
double h_inf_closed(const HParams& h);

/// Relaxed lower bound l(|1-b|(lambda-kappa-2kappa(c+1)) + 2kappa(c+1)(a-min(b,1))).
double h_lower_cor(const HParams& h);

struct HOracle {
  double value = 0.0;
  double y1 = 1.0;
  double y2 = 1.0;  // infinity for the recession limit
  double q = 1.0;   // weight on y1
};

/// Brute-force search over two-point laws of y on a grid spanning
/// [0, max(4, 4/b)], plus the limit y2 -> infinity. The budget c l is
/// placed on the support point where H is most negative. Gives an upper
/// bound on the infimum. Throws ResolutionTooCoarse below 50 points.
HOracle h_inf_oracle_detail(const HParams& h, int resolution);
double h_inf_oracle(const HParams& h, int resolution);

}  // namespace awd
