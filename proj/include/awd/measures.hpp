#pragma once

// Finitely supported path measures on R^{dT}, stored as scenario trees.
//
// A PathMeasure is a tree whose root sits before stage 1. A node at depth t
// (0 <= t < T) carries the conditional law of x_{t+1} given the prefix x_{1:t}
// as a list of branches (state, probability, child). Branches leaving a node at
// depth T-1 end in leaves and have child == kLeaf.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "awd/error.hpp"

namespace awd {

using State = std::vector<double>;

inline constexpr int kLeaf = -1;

/// Rounds a coordinate to 12 decimal digits so support identification is exact.
double canonical_coord(double x);

struct Branch {
  State state;
  double prob = 0.0;
  int child = kLeaf;
};

struct TreeNode {
  int depth = 0;
  int parent = -1;
  std::vector<Branch> branches;
};

/// One atom of the measure: a full path (T*d values, stage-major) and its mass.
struct WeightedPath {
  std::vector<double> x;
  double prob = 0.0;
};

/// Raw nested edge list, the in-memory form of the JSON tree format.
struct RawBranch {
  State state;
  double prob = 0.0;
  std::optional<int> child;
};
struct RawNode {
  int id = 0;
  std::vector<RawBranch> children;
};
struct RawTree {
  int T = 1;
  int d = 1;
  int root = 0;
  std::vector<RawNode> nodes;
};

/// A discrete law on R^d.
struct DiscreteLaw {
  std::vector<State> atoms;
  std::vector<double> probs;
};

class PathMeasure {
 public:
  /// Dirac at the origin with T = d = 1.
  PathMeasure();

  /// Canonical construction from atoms. Masses are normalized, duplicates
  /// merged, zero-mass atoms dropped.
  static PathMeasure from_paths(int T, int d, std::vector<WeightedPath> paths);
  static PathMeasure dirac(int T, int d, std::span<const double> path);

  [[nodiscard]] int stages() const noexcept { return T_; }
  [[nodiscard]] int dim() const noexcept { return d_; }
  [[nodiscard]] int path_length() const noexcept { return T_ * d_; }

  [[nodiscard]] const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  [[nodiscard]] const TreeNode& node(int id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  [[nodiscard]] static constexpr int root() noexcept { return 0; }

  /// Nodes at a given depth, in canonical (DFS) order.
  [[nodiscard]] const std::vector<int>& nodes_at_depth(int depth) const;
  /// Probability of reaching each node (prefix mass), indexed by node id.
  [[nodiscard]] const std::vector<double>& node_mass() const noexcept { return mass_; }
  /// States x_{1:t} leading to a node at depth t.
  [[nodiscard]] std::vector<double> prefix(int node) const;

  /// All atoms, in lexicographic order of paths.
  [[nodiscard]] std::vector<WeightedPath> paths() const;
  [[nodiscard]] std::size_t leaf_count() const;

  friend bool operator==(const PathMeasure& a, const PathMeasure& b);

 private:
  friend PathMeasure make_tree(const RawTree& raw);
  PathMeasure(int T, int d, std::vector<TreeNode> nodes);
  void index();

  int T_ = 1;
  int d_ = 1;
  std::vector<TreeNode> nodes_;
  std::vector<double> mass_;
  std::vector<std::vector<int>> by_depth_;
};

/// Validates, normalizes, prunes and canonicalizes a nested edge list.
/// Throws NonProbability (negative or non-normalizable weights, node sums
/// off by more than 1e-9) and RaggedDepth (leaf at the wrong depth).
PathMeasure make_tree(const RawTree& raw);

/// Inverse of make_tree for canonical trees.
RawTree to_raw(const PathMeasure& mu);

std::string to_json(const PathMeasure& mu);
PathMeasure measure_from_json(const std::string& text);
PathMeasure load_measure(const std::string& path);
void save_measure(const PathMeasure& mu, const std::string& path);

/// Up-to-time-t marginal mu_{1:t}. Throws BadStage unless 1 <= t <= T.
PathMeasure marginal_upto(const PathMeasure& mu, int t);
/// Conditional law of the next state at a node.
DiscreteLaw kernel_at(const PathMeasure& mu, int node);

/// M_r(mu) = int sum_k |x_k|^r dmu for r > 0, and M_0 = 1.
double moment(const PathMeasure& mu, double r);

/// n i.i.d. paths by ancestral sampling, deterministic in seed.
std::vector<std::vector<double>> sample(const PathMeasure& mu, std::size_t n, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Weighting functions w and their stagewise sequence (w_t), w_T = w.

class WeightSpec {
 public:
  enum class Kind { One, PPower, Tabulated };
  using Table = std::map<std::vector<double>, double>;

  static WeightSpec one();
  /// w_t(x_{1:t}) = 1 + |x_{1:t}|_p^p.
  static WeightSpec ppower(double p);
  /// Values keyed by canonical prefix x_{1:t} (t*d coordinates) for every t.
  static WeightSpec tabulated(Table table);

  [[nodiscard]] Kind kind() const noexcept { return kind_; }
  [[nodiscard]] double power() const noexcept { return p_; }
  [[nodiscard]] const Table& table() const noexcept { return table_; }

  /// w_t evaluated on a prefix of t stages (prefix.size() == t*d).
  [[nodiscard]] double eval(std::span<const double> prefix) const;

 private:
  Kind kind_ = Kind::One;
  double p_ = 1.0;
  Table table_;
};

struct MonotonicityViolation {
  std::vector<double> prefix;
  double parent_weight = 0.0;
  double child_weight = 0.0;
};

/// Checks w_{t-1}(x_{1:t-1}) <= w_t(x_{1:t}) along every edge of the tree.
std::vector<MonotonicityViolation> check_monotone(const WeightSpec& w, const PathMeasure& mu);

std::string to_json(const WeightSpec& w);
WeightSpec weight_from_json(const std::string& text);

// ---------------------------------------------------------------------------
// Common refinement of two measures and their density processes.

struct CommonTree {
  struct Node {
    int parent = -1;
    int depth = 0;
    State state;
    double mass_mu = 0.0;
    double mass_nu = 0.0;
    std::vector<int> children;
  };
  int T = 1;
  int d = 1;
  std::vector<Node> nodes;  // nodes[0] is the root, leaves sit at depth T

  [[nodiscard]] std::vector<double> prefix(int node) const;
  [[nodiscard]] std::vector<int> leaves() const;
};

/// Densities of mu and nu against the dominating measure P = (mu+nu)/2.
/// Z is the prefix density, D = Z_t / Z_{t-1} (D = 1 where Z_{t-1} = 0).
struct DensityProcess {
  std::vector<double> dominating;
  std::vector<double> z_mu, z_nu;
  std::vector<double> d_mu, d_nu;
};

struct RefinedPair {
  CommonTree tree;
  DensityProcess density;
};

RefinedPair refine_pair(const PathMeasure& mu, const PathMeasure& nu);

}  // namespace awd
