#pragma once

// Exact discrete optimal transport.

#include <cstddef>
#include <span>
#include <vector>

#include "awd/measures.hpp"

namespace awd {

/// Row-major dense matrix.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
  [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  [[nodiscard]] const std::vector<double>& data() const noexcept { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Primal network simplex for uncapacitated min-cost flow with block search
/// pivoting. Reduced costs are c(e) + pi(source) - pi(target).
class NetworkSimplex {
 public:
  enum class Status { Optimal, Infeasible, Unbounded };

  explicit NetworkSimplex(int nodes);

  void reserve_arcs(std::size_t n);
  int add_arc(int source, int target, double cost);
  /// Positive values are supplies, negative values demands. Must sum to zero.
  void set_supply(int node, double value);

  Status run();

  [[nodiscard]] double flow(int arc) const { return flow_[static_cast<std::size_t>(arc)]; }
  [[nodiscard]] double potential(int node) const { return pi_[static_cast<std::size_t>(node)]; }
  [[nodiscard]] double total_cost() const;
  [[nodiscard]] int arc_count() const noexcept { return arc_num_; }
  [[nodiscard]] long iterations() const noexcept { return iterations_; }

 private:
  void init();
  bool find_entering_arc();
  void find_join_node();
  bool find_leaving_arc();
  void change_flow(bool change);
  void update_tree_structure();
  void update_potential();

  int node_num_;
  int arc_num_ = 0;
  int root_ = 0;
  std::vector<int> source_, target_;
  std::vector<double> cost_, flow_, supply_, pi_;
  std::vector<int> parent_, pred_, thread_, rev_thread_, succ_num_, last_succ_, dirty_revs_;
  std::vector<signed char> pred_dir_, state_;
  int block_size_ = 0;
  int next_arc_ = 0;
  double tol_ = 0.0;
  int in_arc_ = 0, join_ = 0, u_in_ = 0, v_in_ = 0, u_out_ = 0, v_out_ = 0;
  double delta_ = 0.0;
  long iterations_ = 0;
};

struct Coupling {
  struct Entry {
    int i = 0;
    int j = 0;
    double mass = 0.0;
  };
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<Entry> entries;

  [[nodiscard]] std::vector<double> row_sums() const;
  [[nodiscard]] std::vector<double> col_sums() const;
};

/// Optimality certificate. All three residuals vanish for an exact optimum.
struct Certificate {
  double marginal_residual = 0.0;  // max |row/col sum - target|
  double dual_violation = 0.0;     // max (u_i + v_j - c_ij)^+
  double slackness = 0.0;          // max pi_ij * |c_ij - u_i - v_j|
  double duality_gap = 0.0;        // |primal - dual|
  [[nodiscard]] bool ok(double tol) const {
    return marginal_residual <= tol && dual_violation <= tol && slackness <= tol && duality_gap <= tol;
  }
};

struct TransportResult {
  double value = 0.0;
  Coupling plan;
  std::vector<double> u;  // row potentials
  std::vector<double> v;  // column potentials
  Certificate certificate;
  long iterations = 0;
};

/// min <pi, C> over couplings of a and b. Masses must be nonnegative with
/// equal positive totals (to 1e-9, relative). Zero atoms are pruned before
/// solving; their potentials are filled in by c-transform.
TransportResult transport_lp(std::span<const double> a, std::span<const double> b, const DenseMatrix& cost);

/// Recomputes the certificate of a claimed solution.
Certificate verify(const TransportResult& r, std::span<const double> a, std::span<const double> b,
                   const DenseMatrix& cost);

/// sum_k |x_k - y_k|^p.
double path_cost(std::span<const double> x, std::span<const double> y, double p);

/// W_p^p between discrete laws on the real line, by quantile matching.
double transport_1d(std::span<const double> xs, std::span<const double> a, std::span<const double> ys,
                    std::span<const double> b, double p);

/// W_p^p(mu, nu) with cost |x - y|_p^p on R^{dT}.
double wasserstein_pow(const PathMeasure& mu, const PathMeasure& nu, double p);
double wasserstein_p(const PathMeasure& mu, const PathMeasure& nu, double p);

/// Largest number of atoms per side accepted by wasserstein_pow.
inline constexpr std::size_t kMaxLpAtoms = 2500;

}  // namespace awd
