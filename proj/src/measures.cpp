#include "awd/measures.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

namespace awd {

namespace {

using nlohmann::json;

constexpr double kSumTol = 1e-9;
constexpr double kRenormTol = 1e-14;

struct Proto;
struct ProtoBranch {
  State state;
  double prob = 0.0;
  std::unique_ptr<Proto> child;
};
struct Proto {
  std::vector<ProtoBranch> branches;
};

std::unique_ptr<Proto> mix(std::unique_ptr<Proto> a, double pa, std::unique_ptr<Proto> b, double pb);

void canonicalize(Proto& node) {
  for (auto& br : node.branches) {
    if (br.child) canonicalize(*br.child);
  }
  std::stable_sort(node.branches.begin(), node.branches.end(),
                   [](const ProtoBranch& x, const ProtoBranch& y) { return x.state < y.state; });
  std::vector<ProtoBranch> merged;
  for (auto& br : node.branches) {
    if (!merged.empty() && merged.back().state == br.state) {
      auto& last = merged.back();
      if (last.child && br.child) {
        last.child = mix(std::move(last.child), last.prob, std::move(br.child), br.prob);
      }
      last.prob += br.prob;
    } else {
      merged.push_back(std::move(br));
    }
  }
  node.branches = std::move(merged);
}

std::unique_ptr<Proto> mix(std::unique_ptr<Proto> a, double pa, std::unique_ptr<Proto> b, double pb) {
  auto out = std::make_unique<Proto>();
  const double total = pa + pb;
  for (auto& br : a->branches) {
    br.prob *= pa / total;
    out->branches.push_back(std::move(br));
  }
  for (auto& br : b->branches) {
    br.prob *= pb / total;
    out->branches.push_back(std::move(br));
  }
  canonicalize(*out);
  return out;
}

int emit(const Proto& proto, int depth, int parent, std::vector<TreeNode>& out) {
  const int id = static_cast<int>(out.size());
  out.push_back(TreeNode{depth, parent, {}});
  std::vector<Branch> branches;
  branches.reserve(proto.branches.size());
  for (const auto& br : proto.branches) {
    Branch b{br.state, br.prob, kLeaf};
    if (br.child) b.child = emit(*br.child, depth + 1, id, out);
    branches.push_back(std::move(b));
  }
  out[static_cast<std::size_t>(id)].branches = std::move(branches);
  return id;
}

State canonical_state(const State& s) {
  State out(s.size());
  std::transform(s.begin(), s.end(), out.begin(), canonical_coord);
  return out;
}

std::string node_label(int id) { return "node " + std::to_string(id); }

}  // namespace

double canonical_coord(double x) {
  if (!std::isfinite(x)) return x;
  double r = std::round(x * 1e12) / 1e12;
  if (r == 0.0) r = 0.0;
  return r;
}

PathMeasure::PathMeasure() : PathMeasure(1, 1, {TreeNode{0, -1, {Branch{{0.0}, 1.0, kLeaf}}}}) {}

PathMeasure::PathMeasure(int T, int d, std::vector<TreeNode> nodes) : T_(T), d_(d), nodes_(std::move(nodes)) {
  index();
}

void PathMeasure::index() {
  mass_.assign(nodes_.size(), 0.0);
  by_depth_.assign(static_cast<std::size_t>(T_), {});
  if (nodes_.empty()) return;
  mass_[0] = 1.0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    by_depth_[static_cast<std::size_t>(n.depth)].push_back(static_cast<int>(i));
    for (const auto& br : n.branches) {
      if (br.child != kLeaf) mass_[static_cast<std::size_t>(br.child)] = mass_[i] * br.prob;
    }
  }
}

const std::vector<int>& PathMeasure::nodes_at_depth(int depth) const {
  require(depth >= 0 && depth < T_, ErrorKind::BadStage, "depth " + std::to_string(depth) + " outside [0, T)");
  return by_depth_[static_cast<std::size_t>(depth)];
}

std::vector<double> PathMeasure::prefix(int node) const {
  std::vector<const State*> chain;
  int cur = node;
  while (nodes_.at(static_cast<std::size_t>(cur)).parent >= 0) {
    const int parent = nodes_[static_cast<std::size_t>(cur)].parent;
    for (const auto& br : nodes_[static_cast<std::size_t>(parent)].branches) {
      if (br.child == cur) {
        chain.push_back(&br.state);
        break;
      }
    }
    cur = parent;
  }
  std::vector<double> out;
  out.reserve(chain.size() * static_cast<std::size_t>(d_));
  for (auto it = chain.rbegin(); it != chain.rend(); ++it) out.insert(out.end(), (*it)->begin(), (*it)->end());
  return out;
}

std::vector<WeightedPath> PathMeasure::paths() const {
  std::vector<WeightedPath> out;
  std::vector<double> prefix;
  auto walk = [&](auto&& self, int id, double mass) -> void {
    for (const auto& br : nodes_[static_cast<std::size_t>(id)].branches) {
      prefix.insert(prefix.end(), br.state.begin(), br.state.end());
      if (br.child == kLeaf) {
        out.push_back(WeightedPath{prefix, mass * br.prob});
      } else {
        self(self, br.child, mass * br.prob);
      }
      prefix.resize(prefix.size() - br.state.size());
    }
  };
  walk(walk, 0, 1.0);
  return out;
}

std::size_t PathMeasure::leaf_count() const {
  if (T_ < 1 || nodes_.empty()) return 0;
  std::size_t n = 0;
  for (int id : by_depth_.back()) n += nodes_[static_cast<std::size_t>(id)].branches.size();
  return n;
}

bool operator==(const PathMeasure& a, const PathMeasure& b) {
  if (a.T_ != b.T_ || a.d_ != b.d_ || a.nodes_.size() != b.nodes_.size()) return false;
  for (std::size_t i = 0; i < a.nodes_.size(); ++i) {
    const auto& x = a.nodes_[i];
    const auto& y = b.nodes_[i];
    if (x.depth != y.depth || x.parent != y.parent || x.branches.size() != y.branches.size()) return false;
    for (std::size_t j = 0; j < x.branches.size(); ++j) {
      const auto& u = x.branches[j];
      const auto& v = y.branches[j];
      if (u.state != v.state || u.prob != v.prob || u.child != v.child) return false;
    }
  }
  return true;
}

PathMeasure PathMeasure::from_paths(int T, int d, std::vector<WeightedPath> paths) {
  require(T >= 1 && d >= 1, ErrorKind::ShapeMismatch, "T and d must be positive");
  const auto len = static_cast<std::size_t>(T) * static_cast<std::size_t>(d);
  double total = 0.0;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    auto& p = paths[i];
    require(p.x.size() == len, ErrorKind::ShapeMismatch,
            "path " + std::to_string(i) + " has " + std::to_string(p.x.size()) + " coordinates, expected " +
                std::to_string(len));
    require(std::isfinite(p.prob) && p.prob >= 0.0, ErrorKind::NonProbability,
            "path " + std::to_string(i) + " has negative or non-finite mass");
    for (double& v : p.x) {
      require(std::isfinite(v), ErrorKind::ShapeMismatch, "path " + std::to_string(i) + " has non-finite state");
      v = canonical_coord(v);
    }
    total += p.prob;
  }
  require(total > 0.0 && std::isfinite(total), ErrorKind::NonProbability, "total mass must be positive");
  std::erase_if(paths, [](const WeightedPath& p) { return p.prob <= 0.0; });
  std::sort(paths.begin(), paths.end(), [](const WeightedPath& a, const WeightedPath& b) { return a.x < b.x; });
  std::vector<WeightedPath> merged;
  for (auto& p : paths) {
    if (!merged.empty() && merged.back().x == p.x) {
      merged.back().prob += p.prob;
    } else {
      merged.push_back(std::move(p));
    }
  }
  for (auto& p : merged) p.prob /= total;

  std::vector<TreeNode> nodes;
  auto build = [&](auto&& self, std::size_t lo, std::size_t hi, int depth, int parent, double mass) -> int {
    const int id = static_cast<int>(nodes.size());
    nodes.push_back(TreeNode{depth, parent, {}});
    const auto off = static_cast<std::size_t>(depth) * static_cast<std::size_t>(d);
    std::vector<Branch> branches;
    std::size_t i = lo;
    while (i < hi) {
      std::size_t j = i;
      double group = 0.0;
      auto same = [&](std::size_t k) {
        return std::equal(merged[k].x.begin() + static_cast<std::ptrdiff_t>(off),
                          merged[k].x.begin() + static_cast<std::ptrdiff_t>(off) + d,
                          merged[i].x.begin() + static_cast<std::ptrdiff_t>(off));
      };
      while (j < hi && same(j)) group += merged[j++].prob;
      Branch br;
      br.state.assign(merged[i].x.begin() + static_cast<std::ptrdiff_t>(off),
                      merged[i].x.begin() + static_cast<std::ptrdiff_t>(off) + d);
      br.prob = group / mass;
      if (depth + 1 < T) br.child = self(self, i, j, depth + 1, id, group);
      branches.push_back(std::move(br));
      i = j;
    }
    nodes[static_cast<std::size_t>(id)].branches = std::move(branches);
    return id;
  };
  double all = 0.0;
  for (const auto& p : merged) all += p.prob;
  build(build, 0, merged.size(), 0, -1, all);
  return PathMeasure(T, d, std::move(nodes));
}

PathMeasure PathMeasure::dirac(int T, int d, std::span<const double> path) {
  return from_paths(T, d, {WeightedPath{std::vector<double>(path.begin(), path.end()), 1.0}});
}

PathMeasure make_tree(const RawTree& raw) {
  require(raw.T >= 1 && raw.d >= 1, ErrorKind::ShapeMismatch, "T and d must be positive");
  std::unordered_map<int, const RawNode*> by_id;
  for (const auto& n : raw.nodes) {
    require(by_id.emplace(n.id, &n).second, ErrorKind::Parse, "duplicate " + node_label(n.id));
  }
  require(by_id.count(raw.root) == 1, ErrorKind::Parse, "root " + node_label(raw.root) + " is missing");
  std::set<int> visited;

  auto build = [&](auto&& self, int id, int depth) -> std::unique_ptr<Proto> {
    auto it = by_id.find(id);
    require(it != by_id.end(), ErrorKind::Parse, node_label(id) + " is referenced but not defined");
    require(visited.insert(id).second, ErrorKind::Parse, node_label(id) + " is reachable along two routes");
    const RawNode& n = *it->second;
    require(!n.children.empty(), ErrorKind::RaggedDepth,
            node_label(id) + " at depth " + std::to_string(depth) + " has no children but T = " +
                std::to_string(raw.T));
    double sum = 0.0;
    for (const auto& br : n.children) {
      require(br.state.size() == static_cast<std::size_t>(raw.d), ErrorKind::ShapeMismatch,
              node_label(id) + " has a state of dimension " + std::to_string(br.state.size()) + ", expected " +
                  std::to_string(raw.d));
      for (double v : br.state) {
        require(std::isfinite(v), ErrorKind::ShapeMismatch, node_label(id) + " has a non-finite state");
      }
      require(std::isfinite(br.prob) && br.prob >= 0.0, ErrorKind::NonProbability,
              node_label(id) + " has a negative or non-finite probability");
      const bool last = depth == raw.T - 1;
      require(last != br.child.has_value(), ErrorKind::RaggedDepth,
              node_label(id) + (last ? " sits at the final stage but has a child"
                                     : " ends a path at stage " + std::to_string(depth + 1) + " < T = " +
                                           std::to_string(raw.T)));
      sum += br.prob;
    }
    require(std::abs(sum - 1.0) <= kSumTol, ErrorKind::NonProbability,
            node_label(id) + " probabilities sum to " + std::to_string(sum));
    const double scale = std::abs(sum - 1.0) > kRenormTol ? 1.0 / sum : 1.0;
    auto proto = std::make_unique<Proto>();
    for (const auto& br : n.children) {
      auto child = br.child ? self(self, *br.child, depth + 1) : nullptr;
      if (br.prob == 0.0) continue;
      proto->branches.push_back(ProtoBranch{canonical_state(br.state), scale == 1.0 ? br.prob : br.prob * scale,
                                            std::move(child)});
    }
    return proto;
  };

  auto root = build(build, raw.root, 0);
  canonicalize(*root);
  std::vector<TreeNode> nodes;
  emit(*root, 0, -1, nodes);
  return PathMeasure(raw.T, raw.d, std::move(nodes));
}

RawTree to_raw(const PathMeasure& mu) {
  RawTree raw;
  raw.T = mu.stages();
  raw.d = mu.dim();
  raw.root = 0;
  for (std::size_t i = 0; i < mu.nodes().size(); ++i) {
    RawNode n;
    n.id = static_cast<int>(i);
    for (const auto& br : mu.nodes()[i].branches) {
      RawBranch rb{br.state, br.prob, std::nullopt};
      if (br.child != kLeaf) rb.child = br.child;
      n.children.push_back(std::move(rb));
    }
    raw.nodes.push_back(std::move(n));
  }
  return raw;
}

std::string to_json(const PathMeasure& mu) {
  json nodes = json::array();
  for (const auto& n : to_raw(mu).nodes) {
    json children = json::array();
    for (const auto& br : n.children) {
      json c;
      c["state"] = br.state;
      c["prob"] = br.prob;
      c["child"] = br.child ? json(*br.child) : json(nullptr);
      children.push_back(std::move(c));
    }
    nodes.push_back(json{{"id", n.id}, {"children", std::move(children)}});
  }
  json out{{"T", mu.stages()}, {"d", mu.dim()}, {"root", 0}, {"nodes", std::move(nodes)}};
  return out.dump() + "\n";
}

namespace {

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  require(obj.is_object(), ErrorKind::Parse, where + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    require(ok, ErrorKind::Parse, where + " has unknown key '" + key + "'");
  }
  for (const char* a : allowed) require(obj.contains(a), ErrorKind::Parse, where + " is missing key '" + a + "'");
}

json parse_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::Parse, e.what());
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

PathMeasure measure_from_json(const std::string& text) {
  const json j = parse_text(text);
  check_keys(j, {"T", "d", "nodes", "root"}, "tree");
  RawTree raw;
  try {
    raw.T = j.at("T").get<int>();
    raw.d = j.at("d").get<int>();
    raw.root = j.at("root").get<int>();
    require(j.at("nodes").is_array(), ErrorKind::Parse, "'nodes' must be an array");
    for (const auto& n : j.at("nodes")) {
      const std::string where = n.is_object() && n.contains("id") ? node_label(n["id"].get<int>()) : "node entry";
      check_keys(n, {"id", "children"}, where);
      RawNode rn;
      rn.id = n.at("id").get<int>();
      for (const auto& c : n.at("children")) {
        check_keys(c, {"state", "prob", "child"}, where + " child");
        RawBranch rb;
        rb.state = c.at("state").get<std::vector<double>>();
        rb.prob = c.at("prob").get<double>();
        if (!c.at("child").is_null()) rb.child = c.at("child").get<int>();
        rn.children.push_back(std::move(rb));
      }
      raw.nodes.push_back(std::move(rn));
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::Parse, e.what());
  }
  return make_tree(raw);
}

PathMeasure load_measure(const std::string& path) { return measure_from_json(read_file(path)); }

void save_measure(const PathMeasure& mu, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::Io, "cannot write " + path);
  out << to_json(mu);
}

PathMeasure marginal_upto(const PathMeasure& mu, int t) {
  require(t >= 1 && t <= mu.stages(), ErrorKind::BadStage,
          "stage " + std::to_string(t) + " outside [1, " + std::to_string(mu.stages()) + "]");
  if (t == mu.stages()) return mu;
  RawTree raw = to_raw(mu);
  raw.T = t;
  std::vector<RawNode> kept;
  for (std::size_t i = 0; i < raw.nodes.size(); ++i) {
    if (mu.nodes()[i].depth >= t) continue;
    RawNode n = std::move(raw.nodes[i]);
    if (mu.nodes()[i].depth == t - 1) {
      for (auto& br : n.children) br.child.reset();
    }
    kept.push_back(std::move(n));
  }
  raw.nodes = std::move(kept);
  return make_tree(raw);
}

DiscreteLaw kernel_at(const PathMeasure& mu, int node) {
  require(node >= 0 && static_cast<std::size_t>(node) < mu.nodes().size(), ErrorKind::BadStage,
          node_label(node) + " does not exist");
  DiscreteLaw law;
  for (const auto& br : mu.node(node).branches) {
    law.atoms.push_back(br.state);
    law.probs.push_back(br.prob);
  }
  return law;
}

double moment(const PathMeasure& mu, double r) {
  require(r >= 0.0 && std::isfinite(r), ErrorKind::InvalidParams, "moment order must be finite and >= 0");
  if (r == 0.0) return 1.0;
  double total = 0.0;
  for (const auto& p : mu.paths()) {
    double s = 0.0;
    for (double v : p.x) s += std::pow(std::abs(v), r);
    total += p.prob * s;
  }
  return total;
}

std::vector<std::vector<double>> sample(const PathMeasure& mu, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<std::vector<double>> out(n);
  for (auto& path : out) {
    path.reserve(static_cast<std::size_t>(mu.path_length()));
    int id = 0;
    while (true) {
      const auto& branches = mu.node(id).branches;
      const double u = unif(rng);
      double acc = 0.0;
      std::size_t pick = branches.size() - 1;
      for (std::size_t k = 0; k < branches.size(); ++k) {
        acc += branches[k].prob;
        if (u < acc) {
          pick = k;
          break;
        }
      }
      const auto& br = branches[pick];
      path.insert(path.end(), br.state.begin(), br.state.end());
      if (br.child == kLeaf) break;
      id = br.child;
    }
  }
  return out;
}

WeightSpec WeightSpec::one() { return WeightSpec{}; }

WeightSpec WeightSpec::ppower(double p) {
  require(p >= 1.0 && std::isfinite(p), ErrorKind::InvalidParams, "weight power must be >= 1");
  WeightSpec w;
  w.kind_ = Kind::PPower;
  w.p_ = p;
  return w;
}

WeightSpec WeightSpec::tabulated(Table table) {
  WeightSpec w;
  w.kind_ = Kind::Tabulated;
  for (auto& [key, value] : table) {
    require(std::isfinite(value) && value >= 0.0, ErrorKind::InvalidParams, "weights must be finite and >= 0");
    w.table_.emplace(canonical_state(key), value);
  }
  return w;
}

double WeightSpec::eval(std::span<const double> prefix) const {
  switch (kind_) {
    case Kind::One: return 1.0;
    case Kind::PPower: {
      double s = 1.0;
      for (double v : prefix) s += std::pow(std::abs(v), p_);
      return s;
    }
    case Kind::Tabulated: {
      std::vector<double> key(prefix.size());
      std::transform(prefix.begin(), prefix.end(), key.begin(), canonical_coord);
      auto it = table_.find(key);
      if (it != table_.end()) return it->second;
      if (prefix.empty()) return 1.0;
      std::ostringstream msg;
      msg << "no tabulated weight for prefix [";
      for (std::size_t i = 0; i < key.size(); ++i) msg << (i ? "," : "") << key[i];
      msg << "]";
      fail(ErrorKind::InvalidParams, msg.str());
    }
  }
  return 1.0;
}

std::vector<MonotonicityViolation> check_monotone(const WeightSpec& w, const PathMeasure& mu) {
  std::vector<MonotonicityViolation> out;
  for (std::size_t i = 0; i < mu.nodes().size(); ++i) {
    const auto& n = mu.nodes()[i];
    if (n.depth == 0) continue;
    auto prefix = mu.prefix(static_cast<int>(i));
    const double parent = w.eval(prefix);
    for (const auto& br : n.branches) {
      auto child_prefix = prefix;
      child_prefix.insert(child_prefix.end(), br.state.begin(), br.state.end());
      const double child = w.eval(child_prefix);
      if (child < parent) out.push_back({child_prefix, parent, child});
    }
  }
  return out;
}

std::string to_json(const WeightSpec& w) {
  json j;
  switch (w.kind()) {
    case WeightSpec::Kind::One: j = json{{"kind", "one"}}; break;
    case WeightSpec::Kind::PPower: j = json{{"kind", "ppower"}, {"p", w.power()}}; break;
    case WeightSpec::Kind::Tabulated: {
      json entries = json::array();
      for (const auto& [prefix, value] : w.table()) entries.push_back(json{{"prefix", prefix}, {"w", value}});
      j = json{{"kind", "tabulated"}, {"entries", std::move(entries)}};
      break;
    }
  }
  return j.dump() + "\n";
}

WeightSpec weight_from_json(const std::string& text) {
  const json j = parse_text(text);
  try {
    require(j.is_object() && j.contains("kind"), ErrorKind::Parse, "weight needs a 'kind'");
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "one") {
      check_keys(j, {"kind"}, "weight");
      return WeightSpec::one();
    }
    if (kind == "ppower") {
      check_keys(j, {"kind", "p"}, "weight");
      return WeightSpec::ppower(j.at("p").get<double>());
    }
    if (kind == "tabulated") {
      check_keys(j, {"kind", "entries"}, "weight");
      WeightSpec::Table table;
      for (const auto& e : j.at("entries")) {
        check_keys(e, {"prefix", "w"}, "weight entry");
        table[e.at("prefix").get<std::vector<double>>()] = e.at("w").get<double>();
      }
      return WeightSpec::tabulated(std::move(table));
    }
    fail(ErrorKind::Parse, "unknown weight kind '" + kind + "'");
  } catch (const json::exception& e) {
    fail(ErrorKind::Parse, e.what());
  }
}

std::vector<double> CommonTree::prefix(int node) const {
  std::vector<const State*> chain;
  for (int cur = node; cur > 0; cur = nodes[static_cast<std::size_t>(cur)].parent) {
    chain.push_back(&nodes[static_cast<std::size_t>(cur)].state);
  }
  std::vector<double> out;
  for (auto it = chain.rbegin(); it != chain.rend(); ++it) out.insert(out.end(), (*it)->begin(), (*it)->end());
  return out;
}

std::vector<int> CommonTree::leaves() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].depth == T) out.push_back(static_cast<int>(i));
  }
  return out;
}

RefinedPair refine_pair(const PathMeasure& mu, const PathMeasure& nu) {
  require(mu.stages() == nu.stages() && mu.dim() == nu.dim(), ErrorKind::ShapeMismatch,
          "measures differ in T or d");
  RefinedPair out;
  auto& tree = out.tree;
  tree.T = mu.stages();
  tree.d = mu.dim();
  tree.nodes.push_back(CommonTree::Node{-1, 0, {}, 1.0, 1.0, {}});

  // a and b are node ids in mu and nu, or -1 when that measure has no mass here.
  auto walk = [&](auto&& self, int common, int a, int b) -> void {
    const int depth = tree.nodes[static_cast<std::size_t>(common)].depth;
    if (depth == tree.T) return;
    const double ma = tree.nodes[static_cast<std::size_t>(common)].mass_mu;
    const double mb = tree.nodes[static_cast<std::size_t>(common)].mass_nu;
    const std::vector<Branch> empty;
    const auto& ba = a >= 0 ? mu.node(a).branches : empty;
    const auto& bb = b >= 0 ? nu.node(b).branches : empty;
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < ba.size() || j < bb.size()) {
      const bool take_a = i < ba.size() && (j >= bb.size() || ba[i].state <= bb[j].state);
      const bool take_b = j < bb.size() && (i >= ba.size() || bb[j].state <= ba[i].state);
      CommonTree::Node child;
      child.parent = common;
      child.depth = depth + 1;
      child.state = take_a ? ba[i].state : bb[j].state;
      child.mass_mu = take_a ? ma * ba[i].prob : 0.0;
      child.mass_nu = take_b ? mb * bb[j].prob : 0.0;
      const int next_a = take_a ? ba[i].child : -1;
      const int next_b = take_b ? bb[j].child : -1;
      const int id = static_cast<int>(tree.nodes.size());
      tree.nodes.push_back(std::move(child));
      tree.nodes[static_cast<std::size_t>(common)].children.push_back(id);
      self(self, id, next_a, next_b);
      if (take_a) ++i;
      if (take_b) ++j;
    }
  };
  walk(walk, 0, 0, 0);

  const std::size_t n = tree.nodes.size();
  auto& dp = out.density;
  dp.dominating.resize(n);
  dp.z_mu.resize(n);
  dp.z_nu.resize(n);
  dp.d_mu.resize(n);
  dp.d_nu.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& node = tree.nodes[i];
    const double p = 0.5 * (node.mass_mu + node.mass_nu);
    dp.dominating[i] = p;
    dp.z_mu[i] = p > 0.0 ? node.mass_mu / p : 0.0;
    dp.z_nu[i] = p > 0.0 ? node.mass_nu / p : 0.0;
    if (node.parent < 0) {
      dp.d_mu[i] = 1.0;
      dp.d_nu[i] = 1.0;
    } else {
      const auto parent = static_cast<std::size_t>(node.parent);
      dp.d_mu[i] = dp.z_mu[parent] > 0.0 ? dp.z_mu[i] / dp.z_mu[parent] : 1.0;
      dp.d_nu[i] = dp.z_nu[parent] > 0.0 ? dp.z_nu[i] / dp.z_nu[parent] : 1.0;
    }
  }
  return out;
}

}  // namespace awd
