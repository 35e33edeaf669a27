#include "awd/adapted.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace awd {

namespace {

void same_shape(const PathMeasure& mu, const PathMeasure& nu) {
  require(mu.stages() == nu.stages() && mu.dim() == nu.dim(), ErrorKind::ShapeMismatch,
          "measures differ in shape: (T=" + std::to_string(mu.stages()) + ", d=" + std::to_string(mu.dim()) +
              ") vs (T=" + std::to_string(nu.stages()) + ", d=" + std::to_string(nu.dim()) + ")");
}

// Position of every node inside its depth layer.
std::vector<int> layer_positions(const PathMeasure& mu) {
  std::vector<int> pos(mu.nodes().size(), 0);
  for (int t = 0; t < mu.stages(); ++t) {
    const auto& layer = mu.nodes_at_depth(t);
    for (std::size_t k = 0; k < layer.size(); ++k) pos[static_cast<std::size_t>(layer[k])] = static_cast<int>(k);
  }
  return pos;
}

std::vector<std::vector<double>> all_prefixes(const PathMeasure& mu) {
  std::vector<std::vector<double>> out(mu.nodes().size());
  for (std::size_t i = 0; i < mu.nodes().size(); ++i) {
    const auto& n = mu.nodes()[i];
    for (const auto& br : n.branches) {
      if (br.child == kLeaf) continue;
      auto& dst = out[static_cast<std::size_t>(br.child)];
      dst = out[i];
      dst.insert(dst.end(), br.state.begin(), br.state.end());
    }
  }
  return out;
}

std::vector<double> branch_probs(const TreeNode& n) {
  std::vector<double> p(n.branches.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = n.branches[i].prob;
  return p;
}

// W_q^q between two kernels on R whose atoms are already sorted.
double sorted_quantile(const std::vector<Branch>& a, const std::vector<Branch>& b, double q) {
  std::size_t i = 0;
  std::size_t j = 0;
  double ra = a[0].prob;
  double rb = b[0].prob;
  double total = 0.0;
  while (i < a.size() && j < b.size()) {
    const double m = std::min(ra, rb);
    const double diff = std::abs(a[i].state[0] - b[j].state[0]);
    total += m * (q == 1.0 ? diff : std::pow(diff, q));
    ra -= m;
    rb -= m;
    if (ra <= rb) {
      if (++i < a.size()) ra = a[i].prob;
    } else {
      if (++j < b.size()) rb = b[j].prob;
    }
  }
  return total;
}

std::vector<WeightedPath> subtree_paths(const PathMeasure& mu, int node) {
  std::vector<WeightedPath> out;
  std::vector<double> prefix;
  auto walk = [&](auto&& self, int id, double mass) -> void {
    for (const auto& br : mu.node(id).branches) {
      prefix.insert(prefix.end(), br.state.begin(), br.state.end());
      if (br.child == kLeaf) {
        out.push_back({prefix, mass * br.prob});
      } else {
        self(self, br.child, mass * br.prob);
      }
      prefix.resize(prefix.size() - br.state.size());
    }
  };
  walk(walk, node, 1.0);
  return out;
}

}  // namespace

double tv_weighted(const PathMeasure& mu, const PathMeasure& nu, const WeightSpec& w) {
  const auto rp = refine_pair(mu, nu);
  double total = 0.0;
  for (int leaf : rp.tree.leaves()) {
    const auto& n = rp.tree.nodes[static_cast<std::size_t>(leaf)];
    const double diff = std::abs(n.mass_mu - n.mass_nu);
    if (diff > 0.0) total += w.eval(rp.tree.prefix(leaf)) * diff;
  }
  return total;
}

double atv_weighted(const PathMeasure& mu, const PathMeasure& nu, const WeightSpec& w) {
  const auto rp = refine_pair(mu, nu);
  const auto& tree = rp.tree;
  const auto& dp = rp.density;
  // overlap[i] = P(prefix) * prod_{s <= t} min(D^1_s, D^2_s)
  std::vector<double> overlap(tree.nodes.size(), 0.0);
  overlap[0] = 1.0;
  double total = 0.0;
  for (std::size_t i = 1; i < tree.nodes.size(); ++i) {
    const auto& n = tree.nodes[i];
    const auto parent = static_cast<std::size_t>(n.parent);
    const double kernel_p = dp.dominating[parent] > 0.0 ? dp.dominating[i] / dp.dominating[parent] : 0.0;
    overlap[i] = overlap[parent] * kernel_p * std::min(dp.d_mu[i], dp.d_nu[i]);
    if (n.depth == tree.T) {
      const double excess = n.mass_mu + n.mass_nu - 2.0 * overlap[i];
      if (excess != 0.0) total += w.eval(tree.prefix(static_cast<int>(i))) * excess;
    }
  }
  return std::max(0.0, total);
}

BicausalResult bicausal_dp(const PathMeasure& mu, const PathMeasure& nu, const BicausalCost& given, bool keep_plans) {
  same_shape(mu, nu);
  BicausalCost cost = given;
  if (cost.quantile_power && !cost.stage) {
    const double q = *cost.quantile_power;
    cost.stage = [q](int, std::span<const double> x, std::span<const double> y) { return path_cost(x, y, q); };
  }
  const int T = mu.stages();
  const int d = mu.dim();
  const bool fast = cost.quantile_power.has_value() && !cost.terminal && d == 1;
  const auto pos_mu = layer_positions(mu);
  const auto pos_nu = layer_positions(nu);
  std::vector<std::vector<double>> pre_mu;
  std::vector<std::vector<double>> pre_nu;
  if (cost.terminal) {
    pre_mu = all_prefixes(mu);
    pre_nu = all_prefixes(nu);
  }

  BicausalResult res;
  DenseMatrix next;
  std::vector<double> px;
  std::vector<double> py;
  for (int t = T - 1; t >= 0; --t) {
    const auto& layer_mu = mu.nodes_at_depth(t);
    const auto& layer_nu = nu.nodes_at_depth(t);
    DenseMatrix cur(layer_mu.size(), layer_nu.size());
    const bool last = t == T - 1;
    for (std::size_t a = 0; a < layer_mu.size(); ++a) {
      const int m = layer_mu[a];
      const auto& nm = mu.node(m);
      for (std::size_t b = 0; b < layer_nu.size(); ++b) {
        const int n = layer_nu[b];
        const auto& nn = nu.node(n);
        if (last && fast && !keep_plans) {
          cur(a, b) = sorted_quantile(nm.branches, nn.branches, *cost.quantile_power);
          continue;
        }
        DenseMatrix c(nm.branches.size(), nn.branches.size());
        for (std::size_t i = 0; i < nm.branches.size(); ++i) {
          const auto& bi = nm.branches[i];
          if (cost.terminal && last) {
            px = pre_mu[static_cast<std::size_t>(m)];
            px.insert(px.end(), bi.state.begin(), bi.state.end());
          }
          for (std::size_t j = 0; j < nn.branches.size(); ++j) {
            const auto& bj = nn.branches[j];
            double v = cost.stage ? cost.stage(t + 1, bi.state, bj.state) : 0.0;
            if (!last) {
              v += next(static_cast<std::size_t>(pos_mu[static_cast<std::size_t>(bi.child)]),
                        static_cast<std::size_t>(pos_nu[static_cast<std::size_t>(bj.child)]));
            } else if (cost.terminal) {
              py = pre_nu[static_cast<std::size_t>(n)];
              py.insert(py.end(), bj.state.begin(), bj.state.end());
              v += cost.terminal(px, py);
            }
            c(i, j) = v;
          }
        }
        auto sol = transport_lp(branch_probs(nm), branch_probs(nn), c);
        cur(a, b) = sol.value;
        if (keep_plans) res.plans.emplace(std::make_pair(m, n), std::move(sol.plan));
      }
    }
    next = std::move(cur);
  }
  res.value = next(0, 0);
  return res;
}

AdaptedResult adapted_wasserstein_dp(const PathMeasure& mu, const PathMeasure& nu, double p, bool keep_plans) {
  require(p >= 1.0 && std::isfinite(p), ErrorKind::InvalidParams, "p must be >= 1");
  BicausalCost cost;
  cost.stage = [p](int, std::span<const double> x, std::span<const double> y) { return path_cost(x, y, p); };
  cost.quantile_power = p;
  auto r = bicausal_dp(mu, nu, cost, keep_plans);
  AdaptedResult out;
  out.value_pow = std::max(0.0, r.value);
  out.value = std::pow(out.value_pow, 1.0 / p);
  out.plans = std::move(r.plans);
  return out;
}

Coupling assemble_coupling(const PathMeasure& mu, const PathMeasure& nu, const PairPlans& plans) {
  same_shape(mu, nu);
  // leaf index of (node, branch) in DFS order, which matches paths() order
  auto leaf_index = [](const PathMeasure& m) {
    std::vector<std::vector<int>> idx(m.nodes().size());
    int counter = 0;
    auto walk = [&](auto&& self, int id) -> void {
      const auto& n = m.node(id);
      idx[static_cast<std::size_t>(id)].assign(n.branches.size(), -1);
      for (std::size_t k = 0; k < n.branches.size(); ++k) {
        if (n.branches[k].child == kLeaf) {
          idx[static_cast<std::size_t>(id)][k] = counter++;
        } else {
          self(self, n.branches[k].child);
        }
      }
    };
    walk(walk, 0);
    return idx;
  };
  const auto li_mu = leaf_index(mu);
  const auto li_nu = leaf_index(nu);
  Coupling out;
  out.rows = mu.leaf_count();
  out.cols = nu.leaf_count();
  auto walk = [&](auto&& self, int m, int n, double mass) -> void {
    auto it = plans.find({m, n});
    require(it != plans.end(), ErrorKind::InvalidParams,
            "no plan for node pair (" + std::to_string(m) + ", " + std::to_string(n) + ")");
    for (const auto& e : it->second.entries) {
      const auto& bm = mu.node(m).branches[static_cast<std::size_t>(e.i)];
      const auto& bn = nu.node(n).branches[static_cast<std::size_t>(e.j)];
      if (bm.child == kLeaf) {
        out.entries.push_back({li_mu[static_cast<std::size_t>(m)][static_cast<std::size_t>(e.i)],
                               li_nu[static_cast<std::size_t>(n)][static_cast<std::size_t>(e.j)], mass * e.mass});
      } else {
        self(self, bm.child, bn.child, mass * e.mass);
      }
    }
  };
  walk(walk, 0, 0, 1.0);
  return out;
}

double first_stage_kernel_bound(const PathMeasure& mu, const PathMeasure& nu, double p) {
  same_shape(mu, nu);
  if (mu.stages() == 1) return 0.0;
  const auto& root_mu = mu.node(0).branches;
  const auto& root_nu = nu.node(0).branches;
  std::vector<std::vector<WeightedPath>> sub_mu;
  std::vector<std::vector<WeightedPath>> sub_nu;
  for (const auto& br : root_mu) sub_mu.push_back(subtree_paths(mu, br.child));
  for (const auto& br : root_nu) sub_nu.push_back(subtree_paths(nu, br.child));
  const bool scalar = (mu.stages() - 1) * mu.dim() == 1;
  DenseMatrix c(root_mu.size(), root_nu.size());
  for (std::size_t i = 0; i < root_mu.size(); ++i) {
    for (std::size_t j = 0; j < root_nu.size(); ++j) {
      const auto& A = sub_mu[i];
      const auto& B = sub_nu[j];
      std::vector<double> a(A.size());
      std::vector<double> b(B.size());
      for (std::size_t k = 0; k < A.size(); ++k) a[k] = A[k].prob;
      for (std::size_t k = 0; k < B.size(); ++k) b[k] = B[k].prob;
      if (scalar) {
        std::vector<double> xs(A.size());
        std::vector<double> ys(B.size());
        for (std::size_t k = 0; k < A.size(); ++k) xs[k] = A[k].x[0];
        for (std::size_t k = 0; k < B.size(); ++k) ys[k] = B[k].x[0];
        c(i, j) = transport_1d(xs, a, ys, b, p);
      } else {
        DenseMatrix cc(A.size(), B.size());
        for (std::size_t k = 0; k < A.size(); ++k) {
          for (std::size_t l = 0; l < B.size(); ++l) cc(k, l) = path_cost(A[k].x, B[l].x, p);
        }
        c(i, j) = transport_lp(a, b, cc).value;
      }
    }
  }
  return transport_lp(branch_probs(mu.node(0)), branch_probs(nu.node(0)), c).value;
}

CtVector compute_ct(const PathMeasure& nu, const WeightSpec& w, const PathMeasure* mu) {
  CtVector out;
  out.T = nu.stages();
  out.c.assign(static_cast<std::size_t>(out.T) + 1, 0.0);
  out.mu_only_nodes.assign(static_cast<std::size_t>(out.T) + 1, 0);
  const auto& mass = nu.node_mass();
  for (int t = 2; t <= out.T; ++t) {
    double best = 0.0;
    std::set<std::vector<double>> charged;
    for (int id : nu.nodes_at_depth(t - 1)) {
      if (mass[static_cast<std::size_t>(id)] <= 1e-15) continue;
      auto prefix = nu.prefix(id);
      const double base = w.eval(prefix);
      double expect = 0.0;
      for (const auto& br : nu.node(id).branches) {
        auto next = prefix;
        next.insert(next.end(), br.state.begin(), br.state.end());
        expect += br.prob * w.eval(next);
      }
      double ratio = 0.0;
      if (base > 0.0) {
        ratio = expect / base - 1.0;
      } else {
        ratio = expect > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
      }
      out.ratios.push_back({t, id, ratio});
      best = std::max(best, ratio);
      if (mu != nullptr) charged.insert(std::move(prefix));
    }
    out.c[static_cast<std::size_t>(t)] = best;
    if (mu != nullptr) {
      int count = 0;
      for (int id : mu->nodes_at_depth(t - 1)) {
        if (mu->node_mass()[static_cast<std::size_t>(id)] > 1e-15 && charged.count(mu->prefix(id)) == 0) ++count;
      }
      out.mu_only_nodes[static_cast<std::size_t>(t)] = count;
    }
  }
  return out;
}

CtVector compute_ct(const PathMeasure& nu, double p, const PathMeasure* mu) {
  return compute_ct(nu, WeightSpec::ppower(p), mu);
}

double lambda_constant(std::span<const double> c_from_2, int T) {
  require(T >= 1, ErrorKind::BadStage, "T must be >= 1");
  require(c_from_2.size() + 1 >= static_cast<std::size_t>(T), ErrorKind::ShapeMismatch,
          "need c_t for t = 2..T");
  double sum = 0.0;
  for (int t = 1; t <= T - 1; ++t) {
    double prod = 1.0;
    for (int s = t + 1; s <= T; ++s) prod *= 1.0 + c_from_2[static_cast<std::size_t>(s - 2)];
    sum += prod;
  }
  return 1.0 + 2.0 * sum;
}

double lambda_constant(const CtVector& ct) {
  std::vector<double> c;
  for (int t = 2; t <= ct.T; ++t) c.push_back(ct.at(t));
  return lambda_constant(c, ct.T);
}

bool BoundReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const BoundCheck& c) { return c.pass; });
}

BoundReport bound_report(const PathMeasure& mu, const PathMeasure& nu, double p, double tolerance) {
  same_shape(mu, nu);
  BoundReport r;
  r.T = mu.stages();
  r.p = p;
  r.tolerance = tolerance;
  const auto wp = WeightSpec::ppower(p);
  r.tv = tv_weighted(mu, nu, WeightSpec::one());
  r.atv = atv_weighted(mu, nu, WeightSpec::one());
  r.tv_p_pow = tv_weighted(mu, nu, wp);
  r.atv_p_pow = atv_weighted(mu, nu, wp);
  r.aw_p_pow = adapted_wasserstein_dp(mu, nu, p).value_pow;
  r.w_p_pow = wasserstein_pow(mu, nu, p);
  r.ct = compute_ct(nu, p, &mu);
  r.lambda_plain = 2.0 * r.T - 1.0;
  r.lambda_weighted = lambda_constant(r.ct);

  auto support = mu.paths();
  for (auto& path : nu.paths()) support.push_back(std::move(path));
  for (std::size_t i = 0; i < support.size(); ++i) {
    for (std::size_t j = i + 1; j < support.size(); ++j) {
      r.diam_pow = std::max(r.diam_pow, path_cost(support[i].x, support[j].x, p));
    }
  }

  const double two_p = std::pow(2.0, p);
  auto add = [&](std::string name, double lhs, double rhs) {
    BoundCheck c{std::move(name), lhs, rhs, true};
    c.pass = c.slack() >= -tolerance;
    r.checks.push_back(std::move(c));
  };
  add("W_p^p <= AW_p^p", r.w_p_pow, r.aw_p_pow);
  add("AW_p^p <= 2^p ATV_p^p", r.aw_p_pow, two_p * r.atv_p_pow);
  add("2^p ATV_p^p <= 2^p lambda_weighted TV_p^p", two_p * r.atv_p_pow, two_p * r.lambda_weighted * r.tv_p_pow);
  add("ATV <= (2T-1) TV", r.atv, r.lambda_plain * r.tv);
  add("AW_p^p <= diam^p ATV", r.aw_p_pow, r.diam_pow * r.atv);
  add("diam^p ATV <= (2T-1) diam^p TV", r.diam_pow * r.atv, r.lambda_plain * r.diam_pow * r.tv);
  return r;
}

}  // namespace awd
