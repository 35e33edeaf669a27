#include "awd/ot_exact.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace awd {

namespace {

constexpr signed char kDirUp = 1;
constexpr signed char kDirDown = -1;
constexpr signed char kStateTree = 0;
constexpr signed char kStateLower = 1;
constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

NetworkSimplex::NetworkSimplex(int nodes) : node_num_(nodes), supply_(static_cast<std::size_t>(nodes) + 1, 0.0) {
  require(nodes >= 1, ErrorKind::InvalidParams, "flow network needs at least one node");
}

void NetworkSimplex::reserve_arcs(std::size_t n) {
  source_.reserve(n + static_cast<std::size_t>(node_num_));
  target_.reserve(n + static_cast<std::size_t>(node_num_));
  cost_.reserve(n + static_cast<std::size_t>(node_num_));
}

int NetworkSimplex::add_arc(int source, int target, double cost) {
  source_.push_back(source);
  target_.push_back(target);
  cost_.push_back(cost);
  return arc_num_++;
}

void NetworkSimplex::set_supply(int node, double value) { supply_[static_cast<std::size_t>(node)] = value; }

double NetworkSimplex::total_cost() const {
  double c = 0.0;
  for (int e = 0; e < arc_num_; ++e) c += flow_[static_cast<std::size_t>(e)] * cost_[static_cast<std::size_t>(e)];
  return c;
}

void NetworkSimplex::init() {
  const auto n = static_cast<std::size_t>(node_num_) + 1;
  const auto all = static_cast<std::size_t>(arc_num_ + node_num_);
  source_.resize(all);
  target_.resize(all);
  cost_.resize(all);
  flow_.assign(all, 0.0);
  state_.assign(all, kStateLower);
  pi_.assign(n, 0.0);
  parent_.assign(n, -1);
  pred_.assign(n, -1);
  thread_.assign(n, 0);
  rev_thread_.assign(n, 0);
  succ_num_.assign(n, 0);
  last_succ_.assign(n, 0);
  pred_dir_.assign(n, kDirUp);

  double max_cost = 0.0;
  for (int e = 0; e < arc_num_; ++e) max_cost = std::max(max_cost, std::abs(cost_[static_cast<std::size_t>(e)]));
  tol_ = 1e-12 * std::max(1.0, max_cost);
  const double art_cost = (max_cost + 1.0) * node_num_;

  root_ = node_num_;
  const auto r = static_cast<std::size_t>(root_);
  parent_[r] = -1;
  pred_[r] = -1;
  thread_[r] = 0;
  rev_thread_[0] = root_;
  succ_num_[r] = node_num_ + 1;
  last_succ_[r] = root_ - 1;
  supply_[r] = 0.0;
  pi_[r] = 0.0;

  for (int u = 0, e = arc_num_; u < node_num_; ++u, ++e) {
    const auto uu = static_cast<std::size_t>(u);
    const auto ee = static_cast<std::size_t>(e);
    parent_[uu] = root_;
    pred_[uu] = e;
    thread_[uu] = u + 1;
    rev_thread_[uu + 1] = u;
    succ_num_[uu] = 1;
    last_succ_[uu] = u;
    state_[ee] = kStateTree;
    if (supply_[uu] >= 0.0) {
      pred_dir_[uu] = kDirUp;
      pi_[uu] = 0.0;
      source_[ee] = u;
      target_[ee] = root_;
      flow_[ee] = supply_[uu];
      cost_[ee] = 0.0;
    } else {
      pred_dir_[uu] = kDirDown;
      pi_[uu] = art_cost;
      source_[ee] = root_;
      target_[ee] = u;
      flow_[ee] = -supply_[uu];
      cost_[ee] = art_cost;
    }
  }
  block_size_ = std::max(static_cast<int>(std::sqrt(static_cast<double>(arc_num_))), 10);
  next_arc_ = 0;
}

bool NetworkSimplex::find_entering_arc() {
  double min = -tol_;
  bool found = false;
  int cnt = block_size_;
  int e = next_arc_;
  auto scan = [&](int k) {
    const auto kk = static_cast<std::size_t>(k);
    const double c = state_[kk] * (cost_[kk] + pi_[static_cast<std::size_t>(source_[kk])] -
                                   pi_[static_cast<std::size_t>(target_[kk])]);
    if (c < min) {
      min = c;
      in_arc_ = k;
      found = true;
    }
    if (--cnt == 0) {
      if (found) return true;
      cnt = block_size_;
    }
    return false;
  };
  for (e = next_arc_; e != arc_num_; ++e) {
    if (scan(e)) {
      next_arc_ = e + 1 == arc_num_ ? 0 : e + 1;
      return true;
    }
  }
  for (e = 0; e != next_arc_; ++e) {
    if (scan(e)) {
      next_arc_ = e + 1;
      return true;
    }
  }
  if (!found) return false;
  next_arc_ = e;
  return true;
}

void NetworkSimplex::find_join_node() {
  int u = source_[static_cast<std::size_t>(in_arc_)];
  int v = target_[static_cast<std::size_t>(in_arc_)];
  while (u != v) {
    if (succ_num_[static_cast<std::size_t>(u)] < succ_num_[static_cast<std::size_t>(v)]) {
      u = parent_[static_cast<std::size_t>(u)];
    } else {
      v = parent_[static_cast<std::size_t>(v)];
    }
  }
  join_ = u;
}

bool NetworkSimplex::find_leaving_arc() {
  const auto in = static_cast<std::size_t>(in_arc_);
  int first = 0;
  int second = 0;
  if (state_[in] == kStateLower) {
    first = source_[in];
    second = target_[in];
  } else {
    first = target_[in];
    second = source_[in];
  }
  delta_ = kInf;
  int result = 0;
  for (int u = first; u != join_; u = parent_[static_cast<std::size_t>(u)]) {
    const auto uu = static_cast<std::size_t>(u);
    const double d = pred_dir_[uu] == kDirDown ? kInf : flow_[static_cast<std::size_t>(pred_[uu])];
    if (d < delta_) {
      delta_ = d;
      u_out_ = u;
      result = 1;
    }
  }
  for (int u = second; u != join_; u = parent_[static_cast<std::size_t>(u)]) {
    const auto uu = static_cast<std::size_t>(u);
    const double d = pred_dir_[uu] == kDirUp ? kInf : flow_[static_cast<std::size_t>(pred_[uu])];
    if (d <= delta_) {
      delta_ = d;
      u_out_ = u;
      result = 2;
    }
  }
  if (result == 1) {
    u_in_ = first;
    v_in_ = second;
  } else {
    u_in_ = second;
    v_in_ = first;
  }
  return result != 0;
}

void NetworkSimplex::change_flow(bool change) {
  const auto in = static_cast<std::size_t>(in_arc_);
  if (delta_ > 0.0) {
    const double val = state_[in] * delta_;
    flow_[in] += val;
    for (int u = source_[in]; u != join_; u = parent_[static_cast<std::size_t>(u)]) {
      const auto uu = static_cast<std::size_t>(u);
      flow_[static_cast<std::size_t>(pred_[uu])] -= pred_dir_[uu] * val;
    }
    for (int u = target_[in]; u != join_; u = parent_[static_cast<std::size_t>(u)]) {
      const auto uu = static_cast<std::size_t>(u);
      flow_[static_cast<std::size_t>(pred_[uu])] += pred_dir_[uu] * val;
    }
  }
  if (change) {
    state_[in] = kStateTree;
    const auto out = static_cast<std::size_t>(pred_[static_cast<std::size_t>(u_out_)]);
    flow_[out] = 0.0;
    state_[out] = kStateLower;
  } else {
    state_[in] = static_cast<signed char>(-state_[in]);
  }
}

void NetworkSimplex::update_tree_structure() {
  auto at = [](std::vector<int>& v, int i) -> int& { return v[static_cast<std::size_t>(i)]; };
  const int old_rev_thread = at(rev_thread_, u_out_);
  const int old_succ_num = at(succ_num_, u_out_);
  const int old_last_succ = at(last_succ_, u_out_);
  v_out_ = at(parent_, u_out_);
  const auto in = static_cast<std::size_t>(in_arc_);

  if (u_in_ == u_out_) {
    at(parent_, u_in_) = v_in_;
    at(pred_, u_in_) = in_arc_;
    pred_dir_[static_cast<std::size_t>(u_in_)] = u_in_ == source_[in] ? kDirUp : kDirDown;
    if (at(thread_, v_in_) != u_out_) {
      int after = at(thread_, old_last_succ);
      at(thread_, old_rev_thread) = after;
      at(rev_thread_, after) = old_rev_thread;
      after = at(thread_, v_in_);
      at(thread_, v_in_) = u_out_;
      at(rev_thread_, u_out_) = v_in_;
      at(thread_, old_last_succ) = after;
      at(rev_thread_, after) = old_last_succ;
    }
  } else {
    const int thread_continue = old_rev_thread == v_in_ ? at(thread_, old_last_succ) : at(thread_, v_in_);
    int stem = u_in_;
    int par_stem = v_in_;
    int last = at(last_succ_, u_in_);
    int after = at(thread_, last);
    at(thread_, v_in_) = u_in_;
    dirty_revs_.clear();
    dirty_revs_.push_back(v_in_);
    while (stem != u_out_) {
      const int next_stem = at(parent_, stem);
      at(thread_, last) = next_stem;
      dirty_revs_.push_back(last);
      const int before = at(rev_thread_, stem);
      at(thread_, before) = after;
      at(rev_thread_, after) = before;
      at(parent_, stem) = par_stem;
      par_stem = stem;
      stem = next_stem;
      last = at(last_succ_, stem) == at(last_succ_, par_stem) ? at(rev_thread_, par_stem) : at(last_succ_, stem);
      after = at(thread_, last);
    }
    at(parent_, u_out_) = par_stem;
    at(thread_, last) = thread_continue;
    at(rev_thread_, thread_continue) = last;
    at(last_succ_, u_out_) = last;
    if (old_rev_thread != v_in_) {
      at(thread_, old_rev_thread) = after;
      at(rev_thread_, after) = old_rev_thread;
    }
    for (int u : dirty_revs_) at(rev_thread_, at(thread_, u)) = u;

    int tmp_sc = 0;
    const int tmp_ls = at(last_succ_, u_out_);
    for (int u = u_out_, p = at(parent_, u); u != u_in_; u = p, p = at(parent_, u)) {
      at(pred_, u) = at(pred_, p);
      pred_dir_[static_cast<std::size_t>(u)] = static_cast<signed char>(-pred_dir_[static_cast<std::size_t>(p)]);
      tmp_sc += at(succ_num_, u) - at(succ_num_, p);
      at(succ_num_, u) = tmp_sc;
      at(last_succ_, p) = tmp_ls;
    }
    at(pred_, u_in_) = in_arc_;
    pred_dir_[static_cast<std::size_t>(u_in_)] = u_in_ == source_[in] ? kDirUp : kDirDown;
    at(succ_num_, u_in_) = old_succ_num;
  }

  const int up_limit_out = at(last_succ_, join_) == v_in_ ? join_ : -1;
  const int last_succ_out = at(last_succ_, u_out_);
  for (int u = v_in_; u != -1 && at(last_succ_, u) == v_in_; u = at(parent_, u)) at(last_succ_, u) = last_succ_out;

  if (join_ != old_rev_thread && v_in_ != old_rev_thread) {
    for (int u = v_out_; u != up_limit_out && at(last_succ_, u) == old_last_succ; u = at(parent_, u)) {
      at(last_succ_, u) = old_rev_thread;
    }
  } else if (last_succ_out != old_last_succ) {
    for (int u = v_out_; u != up_limit_out && at(last_succ_, u) == old_last_succ; u = at(parent_, u)) {
      at(last_succ_, u) = last_succ_out;
    }
  }
  for (int u = v_in_; u != join_; u = at(parent_, u)) at(succ_num_, u) += old_succ_num;
  for (int u = v_out_; u != join_; u = at(parent_, u)) at(succ_num_, u) -= old_succ_num;
}

void NetworkSimplex::update_potential() {
  const auto uin = static_cast<std::size_t>(u_in_);
  const double sigma = pi_[static_cast<std::size_t>(v_in_)] - pi_[uin] -
                       pred_dir_[uin] * cost_[static_cast<std::size_t>(in_arc_)];
  const int end = thread_[static_cast<std::size_t>(last_succ_[uin])];
  for (int u = u_in_; u != end; u = thread_[static_cast<std::size_t>(u)]) pi_[static_cast<std::size_t>(u)] += sigma;
}

NetworkSimplex::Status NetworkSimplex::run() {
  init();
  iterations_ = 0;
  while (find_entering_arc()) {
    find_join_node();
    const bool change = find_leaving_arc();
    if (!change || delta_ == kInf) return Status::Unbounded;
    change_flow(change);
    update_tree_structure();
    update_potential();
    ++iterations_;
  }
  double scale = 0.0;
  for (int u = 0; u < node_num_; ++u) scale += std::abs(supply_[static_cast<std::size_t>(u)]);
  for (int e = arc_num_; e < arc_num_ + node_num_; ++e) {
    if (flow_[static_cast<std::size_t>(e)] > 1e-9 * std::max(1.0, scale)) return Status::Infeasible;
  }
  return Status::Optimal;
}

std::vector<double> Coupling::row_sums() const {
  std::vector<double> s(rows, 0.0);
  for (const auto& e : entries) s[static_cast<std::size_t>(e.i)] += e.mass;
  return s;
}

std::vector<double> Coupling::col_sums() const {
  std::vector<double> s(cols, 0.0);
  for (const auto& e : entries) s[static_cast<std::size_t>(e.j)] += e.mass;
  return s;
}

namespace {

void check_masses(std::span<const double> a, std::span<const double> b, const DenseMatrix& cost) {
  require(a.size() == cost.rows() && b.size() == cost.cols(), ErrorKind::ShapeMismatch,
          "cost matrix is " + std::to_string(cost.rows()) + "x" + std::to_string(cost.cols()) + " but marginals have " +
              std::to_string(a.size()) + " and " + std::to_string(b.size()) + " atoms");
  double sa = 0.0;
  double sb = 0.0;
  for (double x : a) {
    require(std::isfinite(x) && x >= 0.0, ErrorKind::NonProbability, "negative or non-finite row mass");
    sa += x;
  }
  for (double x : b) {
    require(std::isfinite(x) && x >= 0.0, ErrorKind::NonProbability, "negative or non-finite column mass");
    sb += x;
  }
  require(sa > 0.0 && sb > 0.0, ErrorKind::NonProbability, "marginals must have positive mass");
  require(std::abs(sa - sb) <= 1e-9 * std::max(sa, sb), ErrorKind::NonProbability,
          "marginals have different total mass");
  for (double c : cost.data()) require(std::isfinite(c), ErrorKind::InvalidParams, "cost matrix is not finite");
}

}  // namespace

Certificate verify(const TransportResult& r, std::span<const double> a, std::span<const double> b,
                   const DenseMatrix& cost) {
  Certificate cert;
  const auto rs = r.plan.row_sums();
  const auto cs = r.plan.col_sums();
  for (std::size_t i = 0; i < a.size(); ++i) cert.marginal_residual = std::max(cert.marginal_residual, std::abs(rs[i] - a[i]));
  for (std::size_t j = 0; j < b.size(); ++j) cert.marginal_residual = std::max(cert.marginal_residual, std::abs(cs[j] - b[j]));
  double scale = 1.0;
  for (double c : cost.data()) scale = std::max(scale, std::abs(c));
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      cert.dual_violation = std::max(cert.dual_violation, (r.u[i] + r.v[j] - cost(i, j)) / scale);
    }
  }
  double primal = 0.0;
  for (const auto& e : r.plan.entries) {
    const auto i = static_cast<std::size_t>(e.i);
    const auto j = static_cast<std::size_t>(e.j);
    primal += e.mass * cost(i, j);
    cert.slackness = std::max(cert.slackness, e.mass * std::abs(cost(i, j) - r.u[i] - r.v[j]) / scale);
  }
  double dual = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) dual += a[i] * r.u[i];
  for (std::size_t j = 0; j < b.size(); ++j) dual += b[j] * r.v[j];
  cert.duality_gap = std::abs(primal - dual) / scale;
  return cert;
}

TransportResult transport_lp(std::span<const double> a, std::span<const double> b, const DenseMatrix& cost) {
  check_masses(a, b, cost);
  std::vector<int> rows;
  std::vector<int> cols;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] > 0.0) rows.push_back(static_cast<int>(i));
  }
  for (std::size_t j = 0; j < b.size(); ++j) {
    if (b[j] > 0.0) cols.push_back(static_cast<int>(j));
  }
  const double sa = std::accumulate(a.begin(), a.end(), 0.0);
  const double sb = std::accumulate(b.begin(), b.end(), 0.0);
  const double rescale = sa / sb;

  const int m = static_cast<int>(rows.size());
  const int n = static_cast<int>(cols.size());
  TransportResult res;
  res.plan.rows = a.size();
  res.plan.cols = b.size();
  res.u.assign(a.size(), 0.0);
  res.v.assign(b.size(), 0.0);

  if (m == 1 || n == 1) {
    // Single-atom side: the product coupling is the only one.
    for (int i : rows) {
      for (int j : cols) {
        const double mass = m == 1 ? b[static_cast<std::size_t>(j)] * rescale : a[static_cast<std::size_t>(i)];
        res.plan.entries.push_back({i, j, mass});
        res.value += mass * cost(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
      }
    }
    if (m == 1) {
      for (int j : cols) res.v[static_cast<std::size_t>(j)] = cost(static_cast<std::size_t>(rows[0]), static_cast<std::size_t>(j));
    } else {
      for (int i : rows) res.u[static_cast<std::size_t>(i)] = cost(static_cast<std::size_t>(i), static_cast<std::size_t>(cols[0]));
    }
  } else {
    NetworkSimplex ns(m + n);
    ns.reserve_arcs(static_cast<std::size_t>(m) * static_cast<std::size_t>(n));
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) {
        ns.add_arc(i, m + j, cost(static_cast<std::size_t>(rows[static_cast<std::size_t>(i)]),
                                  static_cast<std::size_t>(cols[static_cast<std::size_t>(j)])));
      }
    }
    for (int i = 0; i < m; ++i) ns.set_supply(i, a[static_cast<std::size_t>(rows[static_cast<std::size_t>(i)])]);
    for (int j = 0; j < n; ++j) ns.set_supply(m + j, -b[static_cast<std::size_t>(cols[static_cast<std::size_t>(j)])] * rescale);
    const auto status = ns.run();
    require(status == NetworkSimplex::Status::Optimal, ErrorKind::Degenerate, "transport simplex did not converge");
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) {
        const double f = ns.flow(i * n + j);
        if (f > 0.0) {
          const int ri = rows[static_cast<std::size_t>(i)];
          const int cj = cols[static_cast<std::size_t>(j)];
          res.plan.entries.push_back({ri, cj, f});
          res.value += f * cost(static_cast<std::size_t>(ri), static_cast<std::size_t>(cj));
        }
      }
    }
    for (int i = 0; i < m; ++i) res.u[static_cast<std::size_t>(rows[static_cast<std::size_t>(i)])] = -ns.potential(i);
    for (int j = 0; j < n; ++j) res.v[static_cast<std::size_t>(cols[static_cast<std::size_t>(j)])] = ns.potential(m + j);
    res.iterations = ns.iterations();
  }

  // c-transforms give valid potentials on pruned atoms.
  for (std::size_t j = 0; j < b.size(); ++j) {
    if (b[j] > 0.0) continue;
    double best = kInf;
    for (int i : rows) best = std::min(best, cost(static_cast<std::size_t>(i), j) - res.u[static_cast<std::size_t>(i)]);
    res.v[j] = best;
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] > 0.0) continue;
    double best = kInf;
    for (std::size_t j = 0; j < b.size(); ++j) best = std::min(best, cost(i, j) - res.v[j]);
    res.u[i] = best;
  }
  res.certificate = verify(res, a, b, cost);
  return res;
}

double path_cost(std::span<const double> x, std::span<const double> y, double p) {
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double diff = std::abs(x[k] - y[k]);
    s += p == 1.0 ? diff : (p == 2.0 ? diff * diff : std::pow(diff, p));
  }
  return s;
}

double transport_1d(std::span<const double> xs, std::span<const double> a, std::span<const double> ys,
                    std::span<const double> b, double p) {
  require(xs.size() == a.size() && ys.size() == b.size(), ErrorKind::ShapeMismatch, "atoms and masses differ in size");
  std::vector<std::size_t> ix(xs.size());
  std::vector<std::size_t> iy(ys.size());
  std::iota(ix.begin(), ix.end(), 0);
  std::iota(iy.begin(), iy.end(), 0);
  std::sort(ix.begin(), ix.end(), [&](std::size_t l, std::size_t r) { return xs[l] < xs[r]; });
  std::sort(iy.begin(), iy.end(), [&](std::size_t l, std::size_t r) { return ys[l] < ys[r]; });
  const double sa = std::accumulate(a.begin(), a.end(), 0.0);
  const double sb = std::accumulate(b.begin(), b.end(), 0.0);
  require(sa > 0.0 && sb > 0.0, ErrorKind::NonProbability, "marginals must have positive mass");
  std::size_t i = 0;
  std::size_t j = 0;
  double ra = ix.empty() ? 0.0 : a[ix[0]] / sa;
  double rb = iy.empty() ? 0.0 : b[iy[0]] / sb;
  double total = 0.0;
  while (i < ix.size() && j < iy.size()) {
    const double m = std::min(ra, rb);
    const double diff = std::abs(xs[ix[i]] - ys[iy[j]]);
    total += m * (p == 1.0 ? diff : std::pow(diff, p));
    ra -= m;
    rb -= m;
    if (ra <= rb) {
      if (++i < ix.size()) ra = a[ix[i]] / sa;
    } else {
      if (++j < iy.size()) rb = b[iy[j]] / sb;
    }
  }
  return total * sa;
}

double wasserstein_pow(const PathMeasure& mu, const PathMeasure& nu, double p) {
  require(p >= 1.0 && std::isfinite(p), ErrorKind::InvalidParams, "p must be >= 1");
  require(mu.stages() == nu.stages() && mu.dim() == nu.dim(), ErrorKind::ShapeMismatch, "measures differ in T or d");
  const auto px = mu.paths();
  const auto py = nu.paths();
  std::vector<double> a(px.size());
  std::vector<double> b(py.size());
  for (std::size_t i = 0; i < px.size(); ++i) a[i] = px[i].prob;
  for (std::size_t j = 0; j < py.size(); ++j) b[j] = py[j].prob;
  if (mu.path_length() == 1) {
    std::vector<double> xs(px.size());
    std::vector<double> ys(py.size());
    for (std::size_t i = 0; i < px.size(); ++i) xs[i] = px[i].x[0];
    for (std::size_t j = 0; j < py.size(); ++j) ys[j] = py[j].x[0];
    return transport_1d(xs, a, ys, b, p);
  }
  require(px.size() <= kMaxLpAtoms && py.size() <= kMaxLpAtoms, ErrorKind::InvalidParams,
          "too many atoms for the exact transport solver (" + std::to_string(px.size()) + " x " +
              std::to_string(py.size()) + ")");
  DenseMatrix cost(px.size(), py.size());
  for (std::size_t i = 0; i < px.size(); ++i) {
    for (std::size_t j = 0; j < py.size(); ++j) cost(i, j) = path_cost(px[i].x, py[j].x, p);
  }
  return transport_lp(a, b, cost).value;
}

double wasserstein_p(const PathMeasure& mu, const PathMeasure& nu, double p) {
  return std::pow(std::max(0.0, wasserstein_pow(mu, nu, p)), 1.0 / p);
}

}  // namespace awd
