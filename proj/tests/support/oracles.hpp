#pragma once

// Independent reference solvers used only by the tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "awd/measures.hpp"
#include "awd/smoothing.hpp"

namespace oracle {

struct LpResult {
  bool feasible = false;
  bool bounded = true;
  double value = 0.0;
  std::vector<double> x;
};

// Two-phase tableau simplex with Bland's rule: min c.x, A x = b, x >= 0.
inline LpResult dense_lp_min(std::vector<std::vector<double>> A, std::vector<double> b, const std::vector<double>& c) {
  constexpr double eps = 1e-11;
  const std::size_t m = A.size();
  const std::size_t n = c.size();
  for (std::size_t i = 0; i < m; ++i) {
    if (b[i] < 0.0) {
      b[i] = -b[i];
      for (double& v : A[i]) v = -v;
    }
  }
  const std::size_t cols = n + m + 1;
  const std::size_t rhs = n + m;
  std::vector<std::vector<double>> T(m, std::vector<double>(cols, 0.0));
  std::vector<std::size_t> basis(m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) T[i][j] = A[i][j];
    T[i][n + i] = 1.0;
    T[i][rhs] = b[i];
    basis[i] = n + i;
  }
  auto pivot = [&](std::size_t r, std::size_t e) {
    const double pv = T[r][e];
    for (double& v : T[r]) v /= pv;
    for (std::size_t i = 0; i < m; ++i) {
      if (i == r || T[i][e] == 0.0) continue;
      const double f = T[i][e];
      for (std::size_t j = 0; j < cols; ++j) T[i][j] -= f * T[r][j];
    }
    basis[r] = e;
  };
  // Returns false when unbounded.
  auto optimize = [&](const std::vector<double>& cost, std::size_t allowed) {
    for (;;) {
      std::size_t enter = cols;
      for (std::size_t j = 0; j < allowed; ++j) {
        double r = cost[j];
        for (std::size_t i = 0; i < m; ++i) r -= cost[basis[i]] * T[i][j];
        if (r < -eps) {
          enter = j;
          break;
        }
      }
      if (enter == cols) return true;
      std::size_t leave = m;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < m; ++i) {
        if (T[i][enter] > eps) {
          const double ratio = T[i][rhs] / T[i][enter];
          const bool better = leave == m || ratio < best - eps;
          const bool tie = !better && ratio <= best + eps && basis[i] < basis[leave];
          if (better || tie) {
            best = better ? ratio : std::min(best, ratio);
            leave = i;
          }
        }
      }
      if (leave == m) return false;
      pivot(leave, enter);
    }
  };
  std::vector<double> phase1(n + m, 0.0);
  for (std::size_t j = n; j < n + m; ++j) phase1[j] = 1.0;
  optimize(phase1, n + m);
  double infeas = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (basis[i] >= n) infeas += T[i][rhs];
  }
  LpResult res;
  if (infeas > 1e-9) return res;
  res.feasible = true;
  for (std::size_t i = 0; i < m; ++i) {
    if (basis[i] < n) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (std::abs(T[i][j]) > 1e-9) {
        pivot(i, j);
        break;
      }
    }
  }
  std::vector<double> phase2(n + m, 0.0);
  std::copy(c.begin(), c.end(), phase2.begin());
  if (!optimize(phase2, n)) {
    res.bounded = false;
    return res;
  }
  res.x.assign(n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    if (basis[i] < n) res.x[basis[i]] = T[i][rhs];
  }
  res.value = 0.0;
  for (std::size_t j = 0; j < n; ++j) res.value += c[j] * res.x[j];
  return res;
}

// All leaves of mu in path order, and for every node the set of leaves below it.
struct LeafIndex {
  std::vector<awd::WeightedPath> leaves;
  std::vector<std::vector<std::size_t>> below;  // by node id
};

inline LeafIndex index_leaves(const awd::PathMeasure& mu) {
  LeafIndex ix;
  ix.leaves = mu.paths();
  ix.below.resize(mu.nodes().size());
  for (std::size_t id = 0; id < mu.nodes().size(); ++id) {
    const auto pre = mu.prefix(static_cast<int>(id));
    for (std::size_t l = 0; l < ix.leaves.size(); ++l) {
      if (std::equal(pre.begin(), pre.end(), ix.leaves[l].x.begin())) ix.below[id].push_back(l);
    }
  }
  return ix;
}

// Exhaustive optimization over bicausal couplings written as a linear program on leaf pairs.
template <class Cost>
LpResult bicausal_lp(const awd::PathMeasure& mu, const awd::PathMeasure& nu, Cost cost) {
  const auto im = index_leaves(mu);
  const auto in = index_leaves(nu);
  const std::size_t nm = im.leaves.size();
  const std::size_t nn = in.leaves.size();
  const std::size_t vars = nm * nn;
  std::vector<std::vector<double>> A;
  std::vector<double> b;
  std::vector<double> c(vars);
  for (std::size_t i = 0; i < nm; ++i) {
    for (std::size_t j = 0; j < nn; ++j) c[i * nn + j] = cost(im.leaves[i].x, in.leaves[j].x);
  }
  for (std::size_t i = 0; i < nm; ++i) {
    std::vector<double> row(vars, 0.0);
    for (std::size_t j = 0; j < nn; ++j) row[i * nn + j] = 1.0;
    A.push_back(row);
    b.push_back(im.leaves[i].prob);
  }
  for (std::size_t j = 0; j < nn; ++j) {
    std::vector<double> row(vars, 0.0);
    for (std::size_t i = 0; i < nm; ++i) row[i * nn + j] = 1.0;
    A.push_back(row);
    b.push_back(in.leaves[j].prob);
  }
  // Leaves of `ix` that extend prefix(node) by the branch state.
  auto below_branch = [](const awd::PathMeasure& m, const LeafIndex& ix, int node, const awd::Branch& br) {
    if (br.child != awd::kLeaf) return ix.below[static_cast<std::size_t>(br.child)];
    auto pre = m.prefix(node);
    pre.insert(pre.end(), br.state.begin(), br.state.end());
    std::vector<std::size_t> out;
    for (std::size_t l = 0; l < ix.leaves.size(); ++l) {
      if (ix.leaves[l].x == pre) out.push_back(l);
    }
    return out;
  };
  const int T = mu.stages();
  for (int t = 0; t < T; ++t) {
    for (int m : mu.nodes_at_depth(t)) {
      for (int n : nu.nodes_at_depth(t)) {
        const auto& bm = im.below[static_cast<std::size_t>(m)];
        const auto& bn = in.below[static_cast<std::size_t>(n)];
        // pi(child of m, n) = k_mu(child | m) pi(m, n), and the same with the roles swapped.
        for (const auto& br : mu.node(m).branches) {
          std::vector<double> row(vars, 0.0);
          for (std::size_t i : bm) {
            for (std::size_t j : bn) row[i * nn + j] -= br.prob;
          }
          for (std::size_t i : below_branch(mu, im, m, br)) {
            for (std::size_t j : bn) row[i * nn + j] += 1.0;
          }
          A.push_back(row);
          b.push_back(0.0);
        }
        for (const auto& br : nu.node(n).branches) {
          std::vector<double> row(vars, 0.0);
          for (std::size_t i : bm) {
            for (std::size_t j : bn) row[i * nn + j] -= br.prob;
          }
          for (std::size_t i : bm) {
            for (std::size_t j : below_branch(nu, in, n, br)) row[i * nn + j] += 1.0;
          }
          A.push_back(row);
          b.push_back(0.0);
        }
      }
    }
  }
  return dense_lp_min(std::move(A), std::move(b), c);
}

// Minimum-cost perfect matching by enumeration, n <= 8.
inline double assignment_brute_force(const std::vector<std::vector<double>>& cost) {
  std::vector<std::size_t> perm(cost.size());
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < perm.size(); ++i) s += cost[i][perm[i]];
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

struct TreeShape {
  int T = 2;
  int d = 1;
  int max_children = 3;
  bool lattice = true;  // states on {-1, -0.5, 0, 0.5, 1} so supports overlap
};

// Random finitely supported path measure with states in [-1, 1]^d.
inline awd::PathMeasure random_tree(std::mt19937_64& rng, const TreeShape& s) {
  std::uniform_int_distribution<int> kids(1, s.max_children);
  std::uniform_int_distribution<int> lattice(-2, 2);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::uniform_real_distribution<double> weight(0.05, 1.0);
  std::vector<awd::WeightedPath> paths;
  auto grow = [&](auto&& self, std::vector<double> prefix, double mass, int depth) -> void {
    if (depth == s.T) {
      paths.push_back({prefix, mass});
      return;
    }
    const int k = kids(rng);
    std::vector<double> w(static_cast<std::size_t>(k));
    for (double& v : w) v = weight(rng);
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (int c = 0; c < k; ++c) {
      auto next = prefix;
      for (int i = 0; i < s.d; ++i) next.push_back(s.lattice ? 0.5 * lattice(rng) : unif(rng));
      self(self, next, mass * w[static_cast<std::size_t>(c)] / total, depth + 1);
    }
  };
  grow(grow, {}, 1.0, 0);
  return awd::PathMeasure::from_paths(s.T, s.d, std::move(paths));
}

// Smooth bump densities on a box, for smoothing tests.
inline awd::GridDensity bump2d(double cx, double cy, double sx, double sy, double rho, double lo, double hi, int cells) {
  auto g = awd::GridDensity::from_function({lo, lo}, {hi, hi}, {cells, cells}, [=](std::span<const double> x) {
    const double u = (x[0] - cx) / sx;
    const double v = (x[1] - cy) / sy;
    return std::exp(-(u * u - 2.0 * rho * u * v + v * v) / (2.0 * (1.0 - rho * rho)));
  });
  g.normalize();
  return g;
}

}  // namespace oracle
