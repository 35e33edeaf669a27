#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "awd/adapted.hpp"
#include "awd/error.hpp"
#include "awd/estimators.hpp"
#include "awd/examples.hpp"
#include "awd/hfun.hpp"
#include "awd/measures.hpp"
#include "awd/ot_exact.hpp"
#include "awd/smoothing.hpp"

namespace {

using ojson = nlohmann::ordered_json;
using namespace awd;

constexpr double kCertTol = 1e-9;

struct Globals {
  std::string out = "-";
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  std::optional<std::uint64_t> seed;
};

std::uint64_t resolved_seed(const Globals& g) {
  if (g.seed) return *g.seed;
  if (const char* env = std::getenv("AWCLI_SEED")) {
    char* end = nullptr;
    const auto v = std::strtoull(env, &end, 10);
    require(end != env && *end == '\0', ErrorKind::InvalidParams, std::string("AWCLI_SEED is not an integer: ") + env);
    return v;
  }
  return 0;
}

void emit(const Globals& g, const std::string& text) {
  if (g.out == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream f(g.out, std::ios::binary);
  require(static_cast<bool>(f), ErrorKind::Io, "cannot write " + g.out);
  f << text;
}

ojson scalar(const std::string& s) {
  if (s.empty()) return nullptr;
  char* end = nullptr;
  const long long i = std::strtoll(s.c_str(), &end, 10);
  if (end != s.c_str() && *end == '\0') return i;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() && *end == '\0') return v;
  if (s == "true") return true;
  if (s == "false") return false;
  return s;
}

// Every option of the subcommand with its resolved value; threads and out do not affect results.
ojson resolved_config(const CLI::App* sub, const Globals& g) {
  ojson cfg = ojson::object();
  cfg["command"] = sub->get_name();
  for (const CLI::Option* opt : sub->get_options()) {
    const std::string name = opt->get_name(false, true);
    if (name == "help" || name.empty()) continue;
    std::string key = opt->get_single_name();
    if (key == "help" || key == "out" || key == "threads") continue;
    if (opt->count() > 0) {
      const auto& res = opt->results();
      if (opt->get_expected_max() > 1 || res.size() > 1) {
        ojson arr = ojson::array();
        for (const auto& r : res) arr.push_back(scalar(r));
        cfg[key] = arr;
      } else if (opt->get_expected_max() == 0) {
        cfg[key] = true;
      } else {
        cfg[key] = scalar(res.front());
      }
    } else {
      cfg[key] = opt->get_expected_max() == 0 ? ojson(false) : scalar(opt->get_default_str());
    }
  }
  cfg["seed"] = resolved_seed(g);
  return cfg;
}

std::string dump(const ojson& j) { return j.dump(2) + "\n"; }

// one, ppower (power taken from --p), ppower:<p>, file:<w.json> or a bare path.
WeightSpec parse_weight(const std::string& spec, double p) {
  if (spec == "one") return WeightSpec::one();
  if (spec == "ppower") return WeightSpec::ppower(p);
  if (spec.rfind("ppower:", 0) == 0) return WeightSpec::ppower(std::stod(spec.substr(7)));
  const std::string s = spec.rfind("file:", 0) == 0 ? spec.substr(5) : spec;
  std::ifstream f(s);
  require(static_cast<bool>(f), ErrorKind::Io, "weight spec '" + s + "' is neither one, ppower, ppower:<p> nor a readable file");
  std::stringstream ss;
  ss << f.rdbuf();
  return weight_from_json(ss.str());
}

KernelSpec parse_kernel(const std::string& name, int k, int dims) {
  if (name == "box") return make_kernel(KernelFamily::Box, k, dims);
  if (name == "gaussian") return make_kernel(KernelFamily::Gaussian, k, dims);
  if (name == "gaussian-order") return make_kernel(KernelFamily::GaussianOrder, k, dims);
  if (name == "box1") {
    return make_custom_kernel([](double z) { return z >= 0.0 && z <= 1.0 ? 1.0 : 0.0; }, 1.0, k, dims);
  }
  fail(ErrorKind::InvalidParams, "unknown kernel '" + name + "' (box, box1, gaussian, gaussian-order)");
}

ojson check_json(const BoundCheck& c) {
  return ojson{{"name", c.name}, {"lhs", c.lhs}, {"rhs", c.rhs}, {"slack", c.slack()}, {"pass", c.pass}};
}

ojson ct_json(const CtVector& ct) {
  ojson c = ojson::array();
  for (int t = 2; t <= ct.T; ++t) c.push_back(ct.at(t));
  return c;
}

ojson certificate_json(const Certificate& c) {
  return ojson{{"marginal_residual", c.marginal_residual},
               {"dual_violation", c.dual_violation},
               {"slackness", c.slackness},
               {"duality_gap", c.duality_gap},
               {"ok", c.ok(kCertTol)}};
}

std::string csv_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------

struct PairArgs {
  std::string mu, nu;
  double p = 1.0;
  std::string weight = "one";
  double tol = 1e-9;
  bool plans = false;
};

void add_pair(CLI::App* sub, PairArgs& a) {
  sub->add_option("mu", a.mu, "first measure (JSON tree)")->required()->check(CLI::ExistingFile);
  sub->add_option("nu", a.nu, "second measure (JSON tree)")->required()->check(CLI::ExistingFile);
}

ojson run_w(const PairArgs& a) {
  const auto mu = load_measure(a.mu);
  const auto nu = load_measure(a.nu);
  ojson out;
  const auto pm = mu.paths();
  const auto pn = nu.paths();
  if (pm.size() <= kMaxLpAtoms && pn.size() <= kMaxLpAtoms && mu.path_length() > 1) {
    std::vector<double> am;
    std::vector<double> an;
    DenseMatrix cost(pm.size(), pn.size());
    for (std::size_t i = 0; i < pm.size(); ++i) {
      am.push_back(pm[i].prob);
      for (std::size_t j = 0; j < pn.size(); ++j) cost(i, j) = path_cost(pm[i].x, pn[j].x, a.p);
    }
    for (const auto& q : pn) an.push_back(q.prob);
    const auto r = transport_lp(am, an, cost);
    out["value_pow"] = r.value;
    out["value"] = std::pow(std::max(0.0, r.value), 1.0 / a.p);
    out["certificate"] = certificate_json(r.certificate);
    out["iterations"] = r.iterations;
    out["method"] = "network simplex";
  } else {
    const double v = wasserstein_pow(mu, nu, a.p);
    out["value_pow"] = v;
    out["value"] = std::pow(std::max(0.0, v), 1.0 / a.p);
    out["method"] = mu.path_length() == 1 ? "quantile coupling" : "network simplex";
  }
  out["tolerance"] = kCertTol;
  return out;
}

ojson run_aw(const PairArgs& a) {
  const auto mu = load_measure(a.mu);
  const auto nu = load_measure(a.nu);
  const auto r = adapted_wasserstein_dp(mu, nu, a.p, a.plans);
  ojson out{{"value", r.value}, {"value_pow", r.value_pow}, {"method", "backward induction over node pairs"},
            {"tolerance", kCertTol}};
  if (a.plans) {
    const auto c = assemble_coupling(mu, nu, r.plans);
    ojson entries = ojson::array();
    for (const auto& e : c.entries) entries.push_back({e.i, e.j, e.mass});
    out["coupling"] = {{"rows", c.rows}, {"cols", c.cols}, {"entries", entries}};
  }
  return out;
}

ojson run_tv(const PairArgs& a, bool adapted) {
  const auto mu = load_measure(a.mu);
  const auto nu = load_measure(a.nu);
  const auto w = parse_weight(a.weight, a.p);
  const double v = adapted ? atv_weighted(mu, nu, w) : tv_weighted(mu, nu, w);
  return ojson{{"value", v}, {"method", "closed form"}, {"tolerance", 0.0}};
}

ojson run_report(const PairArgs& a) {
  const auto mu = load_measure(a.mu);
  const auto nu = load_measure(a.nu);
  const auto r = bound_report(mu, nu, a.p, a.tol);
  ojson checks = ojson::array();
  for (const auto& c : r.checks) checks.push_back(check_json(c));
  return ojson{{"T", r.T},
               {"p", r.p},
               {"tv", r.tv},
               {"atv", r.atv},
               {"ratio", r.tv > 0.0 ? ojson(r.atv / r.tv) : ojson(nullptr)},
               {"tv_p_pow", r.tv_p_pow},
               {"atv_p_pow", r.atv_p_pow},
               {"aw_p_pow", r.aw_p_pow},
               {"w_p_pow", r.w_p_pow},
               {"c", ct_json(r.ct)},
               {"lambda_plain", r.lambda_plain},
               {"lambda_weighted", r.lambda_weighted},
               {"diam_pow", r.diam_pow},
               {"tolerance", r.tolerance},
               {"checks", checks},
               {"all_pass", r.all_pass()}};
}

struct HArgs {
  double l = 1.0, c = 0.0, lambda = 1.0, kappa = 0.0, a = 0.0, b = 1.0;
  int resolution = 400;
};

ojson run_hfun(const HArgs& a) {
  const auto h = HParams::make(a.l, a.c, a.lambda, a.kappa, a.a, a.b);
  const auto o = h_inf_oracle_detail(h, a.resolution);
  return ojson{{"closed", h_inf_closed(h)},
               {"lower_cor", h_lower_cor(h)},
               {"oracle", o.value},
               {"oracle_law", {{"y1", o.y1}, {"y2", std::isinf(o.y2) ? ojson("inf") : ojson(o.y2)}, {"q", o.q}}},
               {"resolution", a.resolution}};
}

struct ExampleArgs {
  std::string id;
  double eps = 0.1;
  int T = 2;
  int k = 1;
  std::optional<double> mesh;
  std::optional<double> p;
  bool minimal_p = false;
  std::vector<double> c;
  std::vector<std::string> emit;
  std::string emit_weight;
};

ojson run_example(const ExampleArgs& a) {
  require(a.emit.empty() || a.emit.size() == 2, ErrorKind::InvalidParams, "--emit takes two paths (mu nu)");
  ojson out;
  if (a.id == "3.5") {
    Example35Params params{a.T, a.eps, a.p, a.c};
    if (a.minimal_p) params.p = example35_minimal_p(a.T, a.eps);
    const auto ex = gen_example35(params);
    out["p"] = ex.p;
    out["tv"] = tv_weighted(ex.mu, ex.nu, ex.weight);
    out["atv"] = atv_weighted(ex.mu, ex.nu, ex.weight);
    out["ratio"] = out["atv"].get<double>() / out["tv"].get<double>();
    out["tv_closed"] = example35_tv(a.eps);
    if (a.c.empty()) out["atv_closed"] = example35_atv(a.T, a.eps, ex.p);
    if (!a.emit.empty()) {
      save_measure(ex.mu, a.emit[0]);
      save_measure(ex.nu, a.emit[1]);
    }
    if (!a.emit_weight.empty()) {
      std::ofstream f(a.emit_weight);
      require(static_cast<bool>(f), ErrorKind::Io, "cannot write " + a.emit_weight);
      f << to_json(ex.weight);
    }
  } else if (a.id == "3.6") {
    const auto ex = gen_example36(a.eps);
    const auto w = WeightSpec::ppower(1.0);
    out["tv1"] = tv_weighted(ex.mu, ex.nu, w);
    out["atv1"] = atv_weighted(ex.mu, ex.nu, w);
    out["ratio"] = out["atv1"].get<double>() / out["tv1"].get<double>();
    if (!a.emit.empty()) {
      save_measure(ex.mu, a.emit[0]);
      save_measure(ex.nu, a.emit[1]);
    }
  } else if (a.id == "4.3") {
    const double mesh = a.mesh.value_or(a.eps / 20.0);
    const auto ex = gen_example43(a.eps, a.k, mesh);
    out["cells"] = ex.mu.cells(0);
    out["mass_nu"] = ex.nu.mass();
    if (!a.emit.empty()) {
      save_grid(ex.mu, a.emit[0]);
      save_grid(ex.nu, a.emit[1]);
    }
  } else {
    fail(ErrorKind::InvalidParams, "unknown example id '" + a.id + "' (3.5, 3.6, 4.3)");
  }
  return out;
}

struct SmoothArgs {
  std::string input, g;
  std::string kernel = "gaussian";
  int k = 2;
  double h = 0.25;
  std::string emit;
  std::vector<double> hs{0.5, 0.25, 0.125};
  double p = 1.0, q = 2.0;
  int d = 1;
  std::size_t max_atoms = 2000;
  bool polynomial = false;
};

ojson run_smooth(const SmoothArgs& a) {
  const auto f = load_grid(a.input);
  const auto K = parse_kernel(a.kernel, a.k, f.dims());
  const auto s = convolve(f, K, a.h);
  double l1 = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) l1 += std::abs(s[i] - f[i]);
  l1 *= f.cell_volume();
  if (!a.emit.empty()) save_grid(s, a.emit);
  return ojson{{"l1_change", l1},
               {"mass_before", f.mass()},
               {"mass_after", s.mass()},
               {"resolution", f.shape()},
               {"kernel", {{"l1", K.l1_norm()}, {"lip", K.lip()}, {"ckk", ckk_constant(K, a.k)}}}};
}

ojson run_lemma41(const SmoothArgs& a) {
  const auto f = load_grid(a.input);
  const auto K = parse_kernel(a.kernel, a.k, f.dims());
  const auto t = lemma41_check(f, K, a.k, a.hs);
  ojson rows = ojson::array();
  for (const auto& r : t.rows) rows.push_back({{"h", r.h}, {"lhs", r.lhs}, {"rhs", r.rhs}, {"ratio", r.ratio()}});
  return ojson{{"sobolev", t.sobolev},
               {"ckk", t.ckk},
               {"rows", rows},
               {"decay_order", t.decay_order},
               {"resolution", f.shape()},
               {"mesh", f.max_spacing()}};
}

ojson run_thm29(const SmoothArgs& a) {
  const auto f = load_grid(a.input);
  const auto g = load_grid(a.g);
  const auto K = parse_kernel(a.kernel, a.k, f.dims());
  TransferOptions o;
  o.k = a.k;
  o.p = a.p;
  o.q = a.q;
  o.d = a.d;
  o.max_lp_atoms = a.max_atoms;
  o.polynomial = a.polynomial;
  const auto r = theorem29_bound(f, g, K, o);
  ojson checks = ojson::array();
  for (const auto& c : r.checks) checks.push_back(check_json(c));
  return ojson{{"T", r.T},
               {"aw_p_pow", r.aw_p_pow},
               {"wq", r.wq},
               {"wq_budget", r.wq_budget},
               {"w1", r.w1},
               {"c", ct_json(r.ct)},
               {"C0", r.c0},
               {"C1", r.c1},
               {"C2", r.c2},
               {"CkK", r.ckk},
               {"lip", r.lip},
               {"l1", r.l1},
               {"sobolev", {r.sobolev_f, r.sobolev_g, r.sobolev_fp, r.sobolev_gp}},
               {"bandwidth", r.bandwidth},
               {"rhs", r.rhs},
               {"rhs_compact", r.rhs_compact},
               {"rhs_polynomial", r.rhs_polynomial ? ojson(*r.rhs_polynomial) : ojson(nullptr)},
               {"checks", checks},
               {"all_pass", r.all_pass()},
               {"tolerance", r.tolerance},
               {"resolution", f.shape()}};
}

struct RateArgs {
  std::string target = "uniform2d";
  std::string estimator = "kde";
  std::vector<std::size_t> ns{250, 500, 1000, 2000, 4000};
  int reps = 10;
  int cells = 32;
  double h_scale = 0.5;
  int j0 = 0;
  double smoothness = 1.0;
};

std::string run_rate(const RateArgs& a, const Globals& g, const ojson& cfg) {
  RateConfig rc;
  if (a.target == "uniform2d") {
    rc.target = GridDensity::from_function({0.0, 0.0}, {1.0, 1.0}, {a.cells, a.cells},
                                           [](std::span<const double>) { return 1.0; });
    rc.target.normalize();
  } else if (a.target.rfind("grid:", 0) == 0) {
    rc.target = load_grid(a.target.substr(5));
  } else {
    fail(ErrorKind::InvalidParams, "unknown target '" + a.target + "' (uniform2d, grid:<file>)");
  }
  if (a.estimator == "kde") {
    rc.estimator = EstimatorKind::Kde;
  } else if (a.estimator == "wavelet") {
    rc.estimator = EstimatorKind::Wavelet;
  } else {
    fail(ErrorKind::InvalidParams, "unknown estimator '" + a.estimator + "' (kde, wavelet)");
  }
  rc.kde_scale = a.h_scale;
  rc.wavelet.dims = rc.target.dims();
  rc.wavelet.j0 = a.j0;
  rc.wavelet.smoothness = a.smoothness;
  rc.ns = a.ns;
  rc.reps = a.reps;
  rc.seed = resolved_seed(g);
  rc.backend_cells.assign(static_cast<std::size_t>(rc.target.dims()), a.cells);
  rc.threads = g.threads;
  const auto t = rate_experiment(rc);
  std::ostringstream os;
  os << "# awcli rate\n# config: " << cfg.dump() << "\n";
  os << "# resolution: " << a.cells << " cells per axis; AW_1 by exact backward induction\n";
  os << "n,mean,sd,slope,slope_se\n";
  for (const auto& r : t.rows) {
    os << r.n << ',' << csv_num(r.mean) << ',' << csv_num(r.sd) << ',' << csv_num(t.slope) << ','
       << csv_num(t.slope_se) << '\n';
  }
  return os.str();
}

// Turns {"command": ..., "inputs": [...], "options": {...}} into an argument vector.
std::vector<std::string> config_to_args(const std::string& path) {
  std::ifstream f(path);
  require(static_cast<bool>(f), ErrorKind::Io, "cannot open " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Parse, path + ": " + e.what());
  }
  require(j.is_object(), ErrorKind::Parse, path + ": top level must be an object");
  for (const auto& [key, _] : j.items()) {
    require(key == "command" || key == "inputs" || key == "options", ErrorKind::Parse,
            path + ": unknown key '" + key + "'");
  }
  require(j.contains("command") && j["command"].is_string(), ErrorKind::Parse, path + ": missing command");
  std::vector<std::string> args{"awcli", j["command"].get<std::string>()};
  auto str = [](const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_number_unsigned()) return std::to_string(v.get<unsigned long long>());
    return v.dump();
  };
  if (j.contains("options")) {
    require(j["options"].is_object(), ErrorKind::Parse, path + ": options must be an object");
    for (const auto& [key, v] : j["options"].items()) {
      if (v.is_boolean()) {
        if (v.get<bool>()) args.push_back("--" + key);
        continue;
      }
      args.push_back("--" + key);
      if (v.is_array()) {
        for (const auto& e : v) args.push_back(str(e));
      } else {
        args.push_back(str(v));
      }
    }
  }
  if (j.contains("inputs")) {
    require(j["inputs"].is_array(), ErrorKind::Parse, path + ": inputs must be an array");
    for (const auto& v : j["inputs"]) args.push_back(str(v));
  }
  return args;
}

int run(std::vector<std::string> argv_in);

int dispatch(CLI::App& app, int argc, const char* const* argv) {
  Globals g;
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--out", g.out, "output path, - for standard output")->capture_default_str();
  app.add_option("--threads", g.threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--seed", g.seed, "random seed (falls back to AWCLI_SEED, then 0)");

  PairArgs pa;
  auto* w = app.add_subcommand("w", "Wasserstein distance W_p");
  add_pair(w, pa);
  w->add_option("--p", pa.p, "order p >= 1")->capture_default_str();
  auto* aw = app.add_subcommand("aw", "adapted Wasserstein distance AW_p");
  add_pair(aw, pa);
  aw->add_option("--p", pa.p, "order p >= 1")->capture_default_str();
  aw->add_flag("--plans", pa.plans, "include the optimal bicausal coupling");
  auto* tv = app.add_subcommand("tv", "weighted total variation TV_w");
  add_pair(tv, pa);
  tv->add_option("--p", pa.p, "power used by --weight ppower")->capture_default_str();
  tv->add_option("--weight", pa.weight, "one | ppower | ppower:<p> | file:<w.json>")->capture_default_str();
  auto* atv = app.add_subcommand("atv", "weighted adapted total variation ATV_w");
  add_pair(atv, pa);
  atv->add_option("--p", pa.p, "power used by --weight ppower")->capture_default_str();
  atv->add_option("--weight", pa.weight, "one | ppower | ppower:<p> | file:<w.json>")->capture_default_str();
  auto* report = app.add_subcommand("report", "all distances and the bound chain between them");
  add_pair(report, pa);
  report->add_option("--p", pa.p, "order p >= 1")->capture_default_str();
  report->add_option("--tol", pa.tol, "slack tolerance")->capture_default_str();

  HArgs ha;
  auto* hfun = app.add_subcommand("hfun", "closed form, relaxed bound and brute force of inf H");
  hfun->add_option("--l", ha.l)->capture_default_str();
  hfun->add_option("--c", ha.c)->capture_default_str();
  hfun->add_option("--lambda", ha.lambda)->capture_default_str();
  hfun->add_option("--kappa", ha.kappa)->capture_default_str();
  hfun->add_option("--a", ha.a)->capture_default_str();
  hfun->add_option("--b", ha.b)->capture_default_str();
  hfun->add_option("--resolution", ha.resolution)->capture_default_str();

  ExampleArgs ea;
  auto* ex = app.add_subcommand("example", "generate a counterexample pair");
  ex->add_option("--id", ea.id, "3.5 | 3.6 | 4.3")->required();
  ex->add_option("--eps", ea.eps)->capture_default_str();
  ex->add_option("--T", ea.T)->capture_default_str();
  ex->add_option("--k", ea.k)->capture_default_str();
  ex->add_option("--mesh", ea.mesh, "grid mesh for 4.3 (default eps/20)");
  ex->add_option("--p", ea.p, "branching probability override for 3.5");
  ex->add_flag("--minimal-p", ea.minimal_p, "smallest valid p for 3.5");
  ex->add_option("--c", ea.c, "c_2..c_T for the weighted 3.5 variant")->delimiter(',');
  ex->add_option("--emit", ea.emit, "output paths for mu and nu")->expected(2);
  ex->add_option("--emit-weight", ea.emit_weight, "output path for the 3.5 weight table");

  SmoothArgs sa;
  auto add_kernel = [&](CLI::App* sub) {
    sub->add_option("--kernel", sa.kernel, "box | box1 | gaussian | gaussian-order")->capture_default_str();
    sub->add_option("--k", sa.k, "kernel order")->capture_default_str();
  };
  auto* smooth = app.add_subcommand("smooth", "convolve a grid density with K_h");
  smooth->add_option("grid", sa.input)->required()->check(CLI::ExistingFile);
  add_kernel(smooth);
  smooth->add_option("--bandwidth", sa.h, "h")->capture_default_str();
  smooth->add_option("--emit", sa.emit, "output grid path");
  auto* l41 = app.add_subcommand("lemma41", "smoothing error against h^k C_kK |f|_{k,1}");
  l41->add_option("grid", sa.input)->required()->check(CLI::ExistingFile);
  add_kernel(l41);
  l41->add_option("--hs", sa.hs)->capture_default_str();
  auto* t29 = app.add_subcommand("thm29", "AW_p^p against its W_q upper bound for grid densities");
  t29->add_option("f", sa.input)->required()->check(CLI::ExistingFile);
  t29->add_option("g", sa.g)->required()->check(CLI::ExistingFile);
  add_kernel(t29);
  t29->add_option("--p", sa.p)->capture_default_str();
  t29->add_option("--q", sa.q)->capture_default_str();
  t29->add_option("--d", sa.d, "state dimension per stage")->capture_default_str();
  t29->add_option("--max-atoms", sa.max_atoms, "coarsening limit for W_q")->capture_default_str();
  t29->add_flag("--polynomial", sa.polynomial, "densities are polynomials of degree < k");

  RateArgs ra;
  auto* rate = app.add_subcommand("rate", "Monte-Carlo E[AW_1(mu, estimate)] across sample sizes");
  rate->add_option("--target", ra.target, "uniform2d | grid:<file>")->capture_default_str();
  rate->add_option("--estimator", ra.estimator, "kde | wavelet")->capture_default_str();
  rate->add_option("--ns", ra.ns, "sample sizes")->delimiter(',')->capture_default_str();
  rate->add_option("--reps", ra.reps)->capture_default_str();
  rate->add_option("--cells", ra.cells, "AW backend cells per axis")->capture_default_str();
  rate->add_option("--h-scale", ra.h_scale, "h = scale * n^(-1/(D+2))")->capture_default_str();
  rate->add_option("--j0", ra.j0)->capture_default_str();
  rate->add_option("--smoothness", ra.smoothness)->capture_default_str();

  std::string config_path;
  auto* runc = app.add_subcommand("run", "run a subcommand from a JSON config");
  runc->add_option("config", config_path)->required()->check(CLI::ExistingFile);

  app.parse(argc, argv);

  if (runc->parsed()) {
    auto args = config_to_args(config_path);
    if (app.get_option("--out")->count() > 0) args.insert(args.begin() + 1, {"--out", g.out});
    if (app.get_option("--threads")->count() > 0) args.insert(args.begin() + 1, {"--threads", std::to_string(g.threads)});
    if (g.seed) args.insert(args.begin() + 1, {"--seed", std::to_string(*g.seed)});
    require(args[args.size() > 1 ? 1 : 0] != "run", ErrorKind::Parse, "configs cannot nest run");
    return run(std::move(args));
  }

  CLI::App* sub = app.get_subcommands().front();
  const ojson cfg = resolved_config(sub, g);
  if (sub == rate) {
    emit(g, run_rate(ra, g, cfg));
    return 0;
  }
  ojson body;
  if (sub == w) body = run_w(pa);
  else if (sub == aw) body = run_aw(pa);
  else if (sub == tv) body = run_tv(pa, false);
  else if (sub == atv) body = run_tv(pa, true);
  else if (sub == report) body = run_report(pa);
  else if (sub == hfun) body = run_hfun(ha);
  else if (sub == ex) body = run_example(ea);
  else if (sub == smooth) body = run_smooth(sa);
  else if (sub == l41) body = run_lemma41(sa);
  else if (sub == t29) body = run_thm29(sa);
  ojson out{{"config", cfg}};
  for (auto& [k, v] : body.items()) out[k] = v;
  emit(g, dump(out));
  return 0;
}

int run(std::vector<std::string> argv_in) {
  CLI::App app{"Adapted Wasserstein, total variation and smoothing bounds"};
  std::vector<const char*> argv;
  for (const auto& s : argv_in) argv.push_back(s.c_str());
  try {
    return dispatch(app, static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const Error& e) {
    std::cerr << "awcli: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(std::vector<std::string>(argv, argv + argc));
  } catch (const std::exception& e) {
    std::cerr << "awcli: unexpected failure: " << e.what() << '\n';
    return 1;
  }
}
