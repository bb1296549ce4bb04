#include "bernstab/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>

#include "bernstab/errors.hpp"
#include "bernstab/parallel.hpp"

namespace bernstab {

namespace {

// Kind-specific parameter object. Every key must be declared by the kind.
class Params {
 public:
  Params(const json& j, std::string where, std::initializer_list<const char*> allowed) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": expected an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, v] : j_.items()) {
      (void)v;
      if (!ok.count(k)) throw ConfigError(where_ + ": unknown field '" + k + "'");
    }
  }

  bool has(const char* k) const { return j_.contains(k); }
  std::string path(const char* k) const { return where_ + "." + k; }
  const json& raw(const char* k) const {
    if (!has(k)) throw ConfigError(where_ + ": missing field '" + k + "'");
    return j_.at(k);
  }

  double num(const char* k) const {
    const json& v = raw(k);
    if (!v.is_number()) throw ConfigError(path(k) + ": expected a number");
    return v.get<double>();
  }
  double num(const char* k, double def) const { return has(k) ? num(k) : def; }

  long long integer(const char* k, long long def) const {
    if (!has(k)) return def;
    const json& v = j_.at(k);
    if (!v.is_number_integer()) throw ConfigError(path(k) + ": expected an integer");
    return v.get<long long>();
  }
  bool flag(const char* k, bool def) const {
    if (!has(k)) return def;
    const json& v = j_.at(k);
    if (!v.is_boolean()) throw ConfigError(path(k) + ": expected a boolean");
    return v.get<bool>();
  }
  std::string str(const char* k, const std::string& def) const {
    if (!has(k)) return def;
    const json& v = j_.at(k);
    if (!v.is_string()) throw ConfigError(path(k) + ": expected a string");
    return v.get<std::string>();
  }
  Mat mat(const char* k) const { return mat_from_json(raw(k), path(k)); }
  Mat mat(const char* k, const Mat& def) const { return has(k) ? mat(k) : def; }
  Distribution dist(const char* k) const { return distribution_from_json(raw(k), path(k)); }

 private:
  const json& j_;
  std::string where_;
};

struct Assertion {
  std::string name;
  std::string anchor;
  bool passed = false;
  double value = 0.0;
  double bound = 0.0;
  double tolerance = 0.0;
};

class Context {
 public:
  Context(std::uint64_t seed) : seed(seed) {}

  // value <= bound + tol
  void le(const std::string& name, const std::string& anchor, double value, double bound, double tol = 0.0) {
    record(name, anchor, value <= bound + tol, value, bound, tol);
  }
  void record(const std::string& name, const std::string& anchor, bool ok, double value, double bound, double tol) {
    asserts.push_back({name, anchor, ok && !std::isnan(value), value, bound, tol});
  }
  void tolerance(const std::string& name, double v) { tolerances[name] = v; }

  std::uint64_t seed;
  std::vector<Assertion> asserts;
  std::map<std::string, double> tolerances;
  ojson result = ojson::object();
  std::optional<CsvTable> csv;
};

using F = CsvTable;

Mat identity(int d) { return Mat::Identity(d, d); }

ChannelModel channel_from(const json& j, const std::string& where) {
  Params p(j, where, {"G", "Q_Z"});
  const Mat G = p.mat("G");
  try {
    return ChannelModel::make(G, p.mat("Q_Z", identity(static_cast<int>(G.rows()))));
  } catch (const InvalidChannel& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

ExtremalProblem problem_from(const json& j, const std::string& where) {
  Params p(j, where, {"lambda", "Q", "G1", "G2"});
  ExtremalProblem pr;
  pr.lambda = p.num("lambda");
  pr.Q = p.mat("Q");
  const int d = static_cast<int>(pr.Q.rows());
  try {
    pr.ch1 = ChannelModel::make(p.mat("G1", identity(d)), identity(d));
    pr.ch2 = ChannelModel::make(p.mat("G2", identity(d)), identity(d));
    pr.validate();
  } catch (const Error& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return pr;
}

double max_abs_diff(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return std::numeric_limits<double>::infinity();
  return (a - b).cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------------------

void run_cf_axioms(const json& params, Context& cx) {
  Params p(params, "params", {"n_random", "n_freq", "max_dim"});
  const long long n = p.integer("n_random", 200), nf = p.integer("n_freq", 50), md = p.integer("max_dim", 3);
  if (n < 1 || nf < 1 || md < 1 || md > 6) throw std::invalid_argument("cf-axioms: counts must be positive, max_dim in [1, 6]");
  const double tol = 1e-12;
  cx.tolerance("cf_axioms", tol);

  struct Row {
    int d = 0;
    double origin = 0.0, modulus = 0.0, conj = 0.0;
  };
  std::vector<Row> rows(static_cast<std::size_t>(n));
  parallel_for(rows.size(), [&](std::size_t i) {
    Rng rng(cx.seed, i);
    const int d = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(md)));
    const CompiledCF f(random_distribution(rng, d));
    Row r;
    r.d = d;
    r.origin = std::abs(f(Vec::Zero(d)) - 1.0);
    for (long long k = 0; k < nf; ++k) {
      const double scale = std::exp(rng.uniform(std::log(0.1), std::log(10.0)));
      Vec t(d);
      for (int c = 0; c < d; ++c) t(c) = scale * rng.normal();
      const cplx a = f(t), b = f(Vec(-t));
      r.modulus = std::max(r.modulus, std::abs(a) - 1.0);
      r.conj = std::max(r.conj, std::abs(b - std::conj(a)));
    }
    rows[i] = r;
  });

  F csv({"index", "dim", "origin_error", "modulus_excess", "conjugate_error"});
  double o = 0.0, m = -1.0, c = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    o = std::max(o, rows[i].origin);
    m = std::max(m, rows[i].modulus);
    c = std::max(c, rows[i].conj);
    csv.add_row({F::field(static_cast<long long>(i)), F::field(static_cast<long long>(rows[i].d)),
                 F::field(rows[i].origin), F::field(rows[i].modulus), F::field(rows[i].conj)});
  }
  cx.result = {{"distributions", n}, {"frequencies_each", nf}, {"max_origin_error", o},
               {"max_modulus_excess", m}, {"max_conjugate_error", c}};
  cx.le("f(0) = 1", "characteristic function equals one at the origin", o, 0.0, tol);
  cx.le("|f(t)| <= 1", "characteristic function modulus bound", m, 0.0, tol);
  cx.le("f(-t) = conj f(t)", "conjugate symmetry of the characteristic function", c, 0.0, tol);
  cx.csv = std::move(csv);
}

void run_dependence(const json& params, Context& cx) {
  Params p(params, "params", {"pair", "T", "n", "doubled", "robust_floor", "expect_max"});
  JointPair pair = pair_from_json(p.raw("pair"), "params.pair");
  if (p.flag("doubled", false)) pair = doubled(pair);
  std::vector<double> Ts;
  const json& tj = p.raw("T");
  if (tj.is_array()) {
    for (const auto& v : tj) {
      if (!v.is_number()) throw ConfigError("params.T: expected numbers");
      Ts.push_back(v.get<double>());
    }
  } else {
    Ts.push_back(p.num("T"));
  }
  if (Ts.empty()) throw ConfigError("params.T: empty list");
  for (double T : Ts)
    if (!(T > 0.0)) throw std::invalid_argument("dependence: T must be positive");
  const int n = static_cast<int>(p.integer("n", 0));
  const bool robust = p.has("robust_floor");
  const double floor = p.num("robust_floor", 0.0);

  F csv({"T", "epsilon_hat", "pad", "spacing", "grid_points", "excluded_fraction"});
  ojson sweep = ojson::array();
  double worst = 0.0;
  for (double T : Ts) {
    const int nn = n > 0 ? n : (pair.d1() + pair.d2() <= 2 ? 101 : pair.d1() + pair.d2() <= 4 ? 21 : 9);
    const DependenceReport r = robust ? robust_dependence_sup(pair, T, nn, floor) : dependence_sup(pair, T, nn);
    worst = std::max(worst, r.epsilon_hat);
    sweep.push_back(to_json(r));
    csv.add_row({F::field(T), F::field(r.epsilon_hat), F::field(r.pad), F::field(r.spacing),
                 F::field(static_cast<long long>(r.grid_points)), F::field(r.excluded_fraction)});
  }
  cx.result = {{"sweep", sweep}, {"max_epsilon_hat", worst}};
  if (p.has("expect_max")) {
    const double b = p.num("expect_max");
    cx.tolerance("expect_max", b);
    cx.le("measured dependence", "sup of the joint-minus-product characteristic function gap", worst, b);
  }
  cx.csv = std::move(csv);
}

void run_bernstein_fit(const json& params, Context& cx) {
  Params p(params, "params", {"x1", "x2", "pair", "T", "n_dep", "n_p", "n_audit", "extend", "expect"});
  const double T0 = p.num("T", 1.0);
  if (!(T0 > 0.0)) throw std::invalid_argument("bernstein-fit: T must be positive");
  FitOptions fo;
  fo.n_dep = static_cast<int>(p.integer("n_dep", 0));
  fo.n_p = static_cast<int>(p.integer("n_p", 0));
  fo.n_audit = static_cast<int>(p.integer("n_audit", 0));
  fo.seed = cx.seed;

  const bool coupled = p.has("pair");
  if (coupled && (p.has("x1") || p.has("x2"))) throw ConfigError("params: give either pair or x1/x2");
  JointPair inputs = coupled ? pair_from_json(p.raw("pair"), "params.pair")
                             : JointPair::independent(p.dist("x1"), p.dist("x2"));
  const Distribution X1 = marginal1(inputs), X2 = marginal2(inputs);

  // halve T until the modulus floor is positive
  double T = T0;
  std::optional<GaussianSurrogate> s;
  int halvings = 0;
  for (; halvings <= 20; ++halvings, T *= 0.5) {
    try {
      s = coupled ? fit_surrogate(inputs, T, fo) : fit_surrogate(X1, X2, T, fo);
      break;
    } catch (const PFloorZero&) {
    }
  }
  if (!s) throw PFloorZero("modulus floor vanished after 20 halvings of T");

  cx.result["T_requested"] = T0;
  cx.result["halvings"] = halvings;
  cx.result["surrogate"] = to_json(*s);
  cx.le("surrogate gap on the T/2 ball", "surrogate-gap bound on the T/2 ball", s->audit_max_ratio, s->certified_gap);

  F csv({"shell", "r_lo", "r_hi", "bound", "max_residual", "points", "ok"});
  if (p.flag("extend", true)) {
    ExtensionOptions eo;
    eo.seed = cx.seed;
    const ExtensionReport ext = extend_unbounded(*s, X1, X2, eo);
    cx.result["extension"] = to_json(ext);
    for (const auto& sh : ext.shells)
      csv.add_row({F::field(static_cast<long long>(sh.k)), F::field(sh.r_lo), F::field(sh.r_hi), F::field(sh.bound),
                   F::field(sh.max_residual), F::field(static_cast<long long>(sh.points)), sh.ok ? "true" : "false"});
    cx.le("shell failures", "doubling-recursion bound on dyadic shells", ext.failures, 0.0);
  }

  if (p.has("expect")) {
    Params e(p.raw("expect"), "params.expect", {"Q", "m1", "m2", "tol"});
    const double tol = e.num("tol", 1e-8);
    cx.tolerance("expect", tol);
    if (e.has("Q"))
      cx.le("Q_hat matches the expected covariance", "recovered common covariance", max_abs_diff(s->Q_hat, e.mat("Q")),
            0.0, tol);
    if (e.has("m1"))
      cx.le("m_hat_1 matches the expected mean", "recovered mean of the first input",
            max_abs_diff(s->m_hat_1, vec_from_json(e.raw("m1"), "params.expect.m1")), 0.0, tol);
    if (e.has("m2"))
      cx.le("m_hat_2 matches the expected mean", "recovered mean of the second input",
            max_abs_diff(s->m_hat_2, vec_from_json(e.raw("m2"), "params.expect.m2")), 0.0, tol);
  }
  cx.csv = std::move(csv);
}

void run_entropy_audit(const json& params, Context& cx) {
  Params p(params, "params", {"x1", "x2", "noise1", "noise2", "require_applicable"});
  const Distribution X1 = p.dist("x1"), X2 = p.dist("x2");
  const int d = X1.dim();
  EntropyAuditOptions opt;
  opt.fit.seed = cx.seed;
  opt.extension.seed = cx.seed;
  const EntropyAuditReport r = entropy_stability_audit(X1, X2, p.mat("noise1", identity(d)), p.mat("noise2", identity(d)), opt);
  cx.result = to_json(r);
  cx.tolerance("psd_slack", 1e-9);

  F csv({"quantity", "value"});
  auto row = [&](const char* k, double v) { csv.add_row({k, F::field(v)}); };
  row("R", r.R);
  row("epsilon_global", r.epsilon_global);
  if (p.flag("require_applicable", true))
    cx.record("audit applicable", "entropy stability hypotheses: " + (r.applicable ? std::string("met") : r.reason),
              r.applicable, r.applicable ? 1.0 : 0.0, 1.0, 0.0);
  if (r.applicable) {
    row("T", r.T);
    row("B", r.bounds.B);
    row("gap1", r.gap1);
    row("gap2", r.gap2);
    row("psd_slack1", r.psd_slack1);
    row("psd_slack2", r.psd_slack2);
    cx.le("|h(Y1) - h(Y_g)|", "entropy stability bound", r.gap1, r.bounds.B);
    cx.le("|h(Y2) - h(Y_g)|", "entropy stability bound", r.gap2, r.bounds.B);
    cx.le("-min eig slack 1", "second-moment ordering against the surrogate", -r.psd_slack1, 0.0, 1e-9);
    cx.le("-min eig slack 2", "second-moment ordering against the surrogate", -r.psd_slack2, 0.0, 1e-9);
    const EntropyBounds z = entropy_bounds(0.0, r.moments);
    const double zmax = std::max({std::abs(z.B1), std::abs(z.B2), std::abs(z.B3), std::abs(z.B4), std::abs(z.B)});
    cx.le("bound chain at zero error", "entropy bound chain vanishes at zero dependence", zmax, 0.0);
  }
  cx.csv = std::move(csv);
}

void run_p2p(const json& params, Context& cx) {
  Params p(params, "params", {"input", "inputs", "channel", "tol", "doubling"});
  std::vector<Distribution> inputs;
  if (p.has("inputs")) {
    const json& a = p.raw("inputs");
    if (!a.is_array() || a.empty()) throw ConfigError("params.inputs: expected a non-empty array");
    for (std::size_t i = 0; i < a.size(); ++i)
      inputs.push_back(distribution_from_json(a[i], "params.inputs[" + std::to_string(i) + "]"));
  }
  if (p.has("input")) inputs.push_back(p.dist("input"));
  if (inputs.empty()) throw ConfigError("params: input or inputs required");
  const int d = inputs.front().dim();
  const ChannelModel ch = p.has("channel") ? channel_from(p.raw("channel"), "params.channel")
                                           : ChannelModel::make(identity(d), identity(d));
  const double tol = p.num("tol", 1e-6);
  const bool dbl = p.flag("doubling", true);
  cx.tolerance("gap_floor", 1e-9);
  cx.tolerance("chain", tol);

  F csv({"index", "gaussian", "I_xy", "gauss_cap", "gap", "I_pm", "cf_gap"});
  ojson rows = ojson::array();
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const Distribution& X = inputs[i];
    const std::string tag = "input " + std::to_string(i);
    const P2PGap g = p2p_gap(X, ch);
    ojson r = {{"gap", to_json(g)}};
    cx.le(tag + ": -gap", "capacity gap is nonnegative", -g.gap, 0.0, 1e-9);
    const bool gauss = is_gaussian(X);
    if (gauss) cx.le(tag + ": gap", "Gaussian input attains the log-det capacity", g.gap, 0.0, 1e-9);
    double ipm = -1.0, cfg = -1.0;
    if (dbl) {
      const DoublingAudit a = doubling_audit(X, ch, tol);
      r["doubling"] = to_json(a);
      ipm = a.I_pm;
      cfg = a.cf_gap;
      cx.le(tag + ": I(Y+;Y-)", "doubled-output mutual information within twice the gap", a.I_pm, 2.0 * a.eps_sub, tol);
      if (a.I_pm_direct >= 0.0)
        cx.le(tag + ": direct I(Y+;Y-)", "doubled-output mutual information within twice the gap", a.I_pm_direct,
              2.0 * a.eps_sub, tol);
      cx.le(tag + ": cf gap", "doubled-output c.f. gap through Pinsker", a.cf_gap, 2.0 * std::sqrt(a.eps_sub), tol);
      if (a.identity_lhs >= 0.0)
        cx.le(tag + ": rotation identity", "mutual information invariant under the doubling rotation",
              std::abs(a.identity_lhs - a.identity_rhs), 0.0, 1e-8);
    }
    rows.push_back(r);
    csv.add_row({F::field(static_cast<long long>(i)), gauss ? "true" : "false", F::field(g.I_xy), F::field(g.gauss_cap),
                  F::field(g.gap), F::field(ipm), F::field(cfg)});
  }
  cx.result = {{"inputs", rows}};
  cx.csv = std::move(csv);
}

void run_product(const json& params, Context& cx) {
  Params p(params, "params", {"cases"});
  const json& cs = p.raw("cases");
  if (!cs.is_array() || cs.empty()) throw ConfigError("params.cases: expected a non-empty array");
  F csv({"index", "I_11_22", "I_1p_2m", "I_tilde", "I_1p_2m_alt"});
  ojson rows = ojson::array();
  cx.tolerance("equality", 1e-8);
  cx.tolerance("inequality", 1e-6);
  for (std::size_t i = 0; i < cs.size(); ++i) {
    const std::string w = "params.cases[" + std::to_string(i) + "]";
    Params c(cs[i], w, {"ch1", "ch2", "x1", "x2"});
    const ProductDegrade r = product_degrade(channel_from(c.raw("ch1"), w + ".ch1"), channel_from(c.raw("ch2"), w + ".ch2"),
                                             c.dist("x1"), c.dist("x2"));
    rows.push_back(to_json(r));
    const std::string tag = "case " + std::to_string(i);
    cx.le(tag + ": equality leg", "physically degraded product equality", std::abs(r.I_11_22 - r.I_1p_2m), 0.0,
          r.equality_tol);
    cx.le(tag + ": inequality leg", "physically degraded product inequality", r.I_tilde, r.I_1p_2m, r.inequality_tol);
    csv.add_row({F::field(static_cast<long long>(i)), F::field(r.I_11_22), F::field(r.I_1p_2m), F::field(r.I_tilde),
                 F::field(r.I_1p_2m_alt)});
  }
  cx.result = {{"cases", rows}};
  cx.csv = std::move(csv);
}

void challenge_rows(const ChallengeReport& c, Context& cx) {
  F csv({"index", "letters", "value", "gap"});
  for (const auto& r : c.rows)
    csv.add_row({F::field(static_cast<long long>(r.index)), F::field(static_cast<long long>(r.letters)),
                 F::field(r.value), F::field(r.gap)});
  cx.csv = std::move(csv);
}

void run_extremal(const json& params, Context& cx) {
  Params p(params, "params", {"problem", "dense_grid", "n_candidates", "tol", "high_prob"});
  const ExtremalProblem pr = problem_from(p.raw("problem"), "params.problem");
  const VLambdaResult v = vlambda_gaussian(pr, cx.seed);
  cx.result["optimum"] = to_json(v);
  cx.result["cap_expression"] = slambda_cap(pr);
  cx.record("projected ascent converged", "Gaussian extremal optimum over the covariance cap", v.converged,
            v.converged ? 1.0 : 0.0, 1.0, 0.0);
  if (pr.dim() == 1 && p.flag("dense_grid", true)) {
    const double oracle = dense_grid_vlambda(pr);
    cx.result["dense_grid_value"] = oracle;
    cx.tolerance("dense_grid", 1e-6);
    cx.le("|V - dense grid|", "Gaussian extremal optimum against a dense grid", std::abs(v.value - oracle), 0.0, 1e-6);
  }
  const long long n = p.integer("n_candidates", 0);
  if (n < 0) throw std::invalid_argument("extremal: n_candidates must be nonnegative");
  if (n > 0) {
    const double tol = p.num("tol", 1e-4);
    cx.tolerance("challenge", tol);
    const ChallengeReport c = extremal_challenge(pr, static_cast<std::size_t>(n), cx.seed, tol);
    cx.result["challenge"] = to_json(c);
    cx.le("max candidate gap", "extremal inequality under finite auxiliary alphabets", c.max_gap, 0.0, tol);
    challenge_rows(c, cx);
  }
  if (p.has("high_prob")) {
    Params h(p.raw("high_prob"), "params.high_prob", {"weights", "gamma"});
    std::vector<double> w;
    for (const auto& x : h.raw("weights")) {
      if (!x.is_number()) throw ConfigError("params.high_prob.weights: expected numbers");
      w.push_back(x.get<double>());
    }
    const HighProbSet s = high_prob_set(w, h.num("gamma"), pr.lambda, pr.dim());
    cx.result["high_prob"] = to_json(s);
    cx.record("letter-set bounds", "high-probability letter set of a near-optimal auxiliary", s.bounds_hold, s.pr_SxS,
              s.lower_bound, 0.0);
  }
}

void run_challenge(const json& params, Context& cx) {
  Params p(params, "params", {"problem", "n", "tol"});
  const ExtremalProblem pr = problem_from(p.raw("problem"), "params.problem");
  const long long n = p.integer("n", 500);
  if (n < 1) throw std::invalid_argument("challenge: n must be positive");
  const double tol = p.num("tol", 1e-4);
  cx.tolerance("challenge", tol);
  const ChallengeReport c = extremal_challenge(pr, static_cast<std::size_t>(n), cx.seed, tol);
  cx.result = to_json(c);
  cx.le("max candidate gap", "extremal inequality under finite auxiliary alphabets", c.max_gap, 0.0, tol);
  challenge_rows(c, cx);
}

// Residual of a fitted map against the generating linear part, on seeded points of the box.
void run_hyers(const json& params, Context& cx) {
  Params p(params, "params", {"route", "d", "T", "theta", "n_functions", "n_points"});
  const std::string route = p.str("route", "all");
  const int d = static_cast<int>(p.integer("d", 1));
  const double T = p.num("T", 1.0), theta = p.num("theta", 1e-3);
  const long long nfun = p.integer("n_functions", 10), npts = p.integer("n_points", 2000);
  if (d < 1 || d > 4 || !(T > 0.0) || !(theta > 0.0) || nfun < 1 || npts < 1)
    throw std::invalid_argument("hyers: d in [1, 4], positive T, theta, counts");
  std::vector<std::string> routes;
  if (route == "all") {
    routes = {"hyers", "kominek", "biadditive"};
    if (d == 1) routes.insert(routes.begin() + 1, "skof");
  } else if (route == "hyers" || route == "skof" || route == "kominek" || route == "biadditive") {
    if (route == "skof" && d != 1) throw std::invalid_argument("hyers: the tiled extension is one-dimensional");
    routes = {route};
  } else {
    throw ConfigError("params.route: unknown route '" + route + "'");
  }
  cx.tolerance("theta", theta);

  F csv({"route", "index", "theta", "certified_bound", "max_residual"});
  ojson out = ojson::array();
  HyersOptions ho;
  ho.audit = false;
  for (std::size_t ri = 0; ri < routes.size(); ++ri) {
    const std::string& r = routes[ri];
    double worst = -std::numeric_limits<double>::infinity(), bound = 0.0;
    for (long long k = 0; k < nfun; ++k) {
      Rng rng(cx.seed, 1000 * ri + static_cast<std::uint64_t>(k));
      double resid = 0.0, cert = 0.0;
      if (r == "biadditive") {
        const SyntheticBiadditive g = synthetic_biadditive(rng, d, theta);
        SampledBiFunction sf{d, T, [&](const Vec& x, const Vec& y) { return g(x, y); }};
        const BiadditiveFit fit = biadditive_fit(sf, theta, ho);
        cert = fit.certified_bound;
        for (long long i = 0; i < npts; ++i) {
          Vec x(d), y(d);
          for (int c = 0; c < d; ++c) x(c) = rng.uniform(-T, T), y(c) = rng.uniform(-T, T);
          const cplx model = (x.cast<cplx>().transpose() * fit.matrix * y.cast<cplx>())(0, 0);
          resid = std::max(resid, std::abs(g(x, y) - model));
        }
      } else {
        const SyntheticAdditive g = synthetic_additive(rng, d, theta);
        SampledFunction sf{d, T, [&](const Vec& x) { return g(x); }};
        const AdditiveFit fit = r == "hyers" ? hyers_fit(sf, theta, ho)
                                : r == "skof" ? skof_extend_fit(sf, theta, ho)
                                              : kominek_fit(sf, theta, ho);
        cert = fit.certified_bound;
        for (long long i = 0; i < npts; ++i) {
          Vec x(d);
          for (int c = 0; c < d; ++c) x(c) = rng.uniform(-T, T);
          resid = std::max(resid, std::abs(g(x) - x.cast<cplx>().dot(fit.linear_map)));
        }
      }
      worst = std::max(worst, resid - cert);
      bound = cert;
      csv.add_row({r, F::field(static_cast<long long>(k)), F::field(theta), F::field(cert), F::field(resid)});
    }
    out.push_back({{"route", r}, {"certified_bound", bound}, {"max_excess", worst}});
    const std::string anchor = r == "hyers" ? "Hyers limit within theta"
                             : r == "skof" ? "tiled extension within 3 theta"
                             : r == "kominek" ? "coordinatewise fit within (4d-1) theta"
                                              : "biadditive fit within 6 theta (d = 1) or (7d^2-1) theta";
    cx.le(r + ": residual minus certified bound", anchor, worst, 0.0);
  }
  cx.result = {{"d", d}, {"T", T}, {"theta", theta}, {"routes", out}};
  cx.csv = std::move(csv);
}

const std::map<std::string, std::function<void(const json&, Context&)>>& kinds() {
  static const std::map<std::string, std::function<void(const json&, Context&)>> k = {
      {"cf-axioms", run_cf_axioms},   {"dependence", run_dependence}, {"bernstein-fit", run_bernstein_fit},
      {"entropy-audit", run_entropy_audit}, {"p2p", run_p2p},       {"product", run_product},
      {"extremal", run_extremal},     {"hyers", run_hyers},           {"challenge", run_challenge}};
  return k;
}

}  // namespace

ExperimentResult run_experiment(const json& config, std::optional<std::uint64_t> seed_override) {
  if (!config.is_object()) throw ConfigError("config: expected an object");
  for (const auto& [k, v] : config.items()) {
    (void)v;
    if (k != "schema_version" && k != "kind" && k != "params" && k != "seed" && k != "output_dir")
      throw ConfigError("config: unknown field '" + k + "'");
  }
  if (!config.contains("schema_version") || !config["schema_version"].is_number_integer() ||
      config["schema_version"].get<long long>() != 1)
    throw ConfigError("config.schema_version: must be 1");
  if (!config.contains("kind") || !config["kind"].is_string()) throw ConfigError("config.kind: expected a string");
  const std::string kind = config["kind"].get<std::string>();
  const auto it = kinds().find(kind);
  if (it == kinds().end()) throw ConfigError("config.kind: unknown kind '" + kind + "'");
  if (config.contains("output_dir") && !config["output_dir"].is_string())
    throw ConfigError("config.output_dir: expected a string");
  std::uint64_t seed = 0;
  if (config.contains("seed")) {
    if (!config["seed"].is_number_unsigned()) throw ConfigError("config.seed: expected a nonnegative integer");
    seed = config["seed"].get<std::uint64_t>();
  }
  if (seed_override) seed = *seed_override;
  const json params = config.contains("params") ? config["params"] : json::object();

  Context cx(seed);
  try {
    it->second(params, cx);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    cx.record("run completed", std::string("library precondition: ") + e.what(), false, 0.0, 0.0, 0.0);
  }

  ExperimentResult res;
  res.passed = !cx.asserts.empty() &&
               std::all_of(cx.asserts.begin(), cx.asserts.end(), [](const Assertion& a) { return a.passed; });
  ojson& r = res.report;
  r["schema_version"] = 1;
  r["kind"] = kind;
  r["seed"] = seed;
  r["passed"] = res.passed;
  ojson as = ojson::array();
  for (const auto& a : cx.asserts)
    as.push_back({{"name", a.name}, {"anchor", a.anchor}, {"passed", a.passed}, {"value", a.value},
                  {"bound", a.bound}, {"tolerance", a.tolerance}});
  r["assertions"] = as;
  r["result"] = cx.result;
  ojson tol = ojson::object();
  for (const auto& [k, v] : cx.tolerances) tol[k] = v;
  r["tolerances"] = tol;
  if (cx.csv) res.csv = cx.csv->str();
  return res;
}

// ---------------------------------------------------------------------------

Distribution random_distribution(Rng& rng, int d, int depth) {
  auto normalized = [](std::vector<double> w) {
    double s = 0.0;
    for (double x : w) s += x;
    for (double& x : w) x /= s;
    return w;
  };
  const int kind = static_cast<int>(rng.below(depth > 0 ? 5 : 2));
  auto normal_vec = [&](int k, double s) {
    Vec v(k);
    for (int i = 0; i < k; ++i) v(i) = s * rng.normal();
    return v;
  };
  auto normal_mat = [&](int r, int c, double s) {
    Mat m(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) m(i, j) = s * rng.normal();
    return m;
  };
  switch (kind) {
    case 0: {
      const int rank = rng.below(4) == 0 ? 1 : d;
      const Mat A = normal_mat(d, rank, 0.7);
      return Distribution::gaussian(normal_vec(d, 1.0), A * A.transpose());
    }
    case 1: {
      const int K = 1 + static_cast<int>(rng.below(4));
      std::vector<Vec> pts;
      std::vector<double> w;
      for (int k = 0; k < K; ++k) {
        pts.push_back(normal_vec(d, 1.5));
        w.push_back(rng.uniform(0.1, 1.0));
      }
      return Distribution::atoms(std::move(pts), normalized(std::move(w)));
    }
    case 2: {
      const int K = 2 + static_cast<int>(rng.below(2));
      std::vector<Distribution> cs;
      std::vector<double> w;
      for (int k = 0; k < K; ++k) {
        cs.push_back(random_distribution(rng, d, depth - 1));
        w.push_back(rng.uniform(0.1, 1.0));
      }
      return Distribution::mixture(std::move(cs), normalized(std::move(w)));
    }
    case 3: {
      const int k = 1 + static_cast<int>(rng.below(3));
      Mat M = normal_mat(d, k, 1.0);
      Vec o = normal_vec(d, 1.0);
      return Distribution::affine(std::move(M), std::move(o), random_distribution(rng, k, depth - 1));
    }
    default: {
      Distribution l = random_distribution(rng, d, depth - 1);
      return Distribution::indep_sum(std::move(l), random_distribution(rng, d, depth - 1));
    }
  }
}

cplx SyntheticAdditive::operator()(const Vec& x) const {
  return x.cast<cplx>().dot(c) + (theta / 3.0) * std::sin(a.dot(x) + phi) * std::polar(1.0, psi);
}

SyntheticAdditive synthetic_additive(Rng& rng, int d, double theta) {
  SyntheticAdditive g;
  g.c.resize(d);
  g.a.resize(d);
  for (int i = 0; i < d; ++i) {
    g.c(i) = cplx(rng.normal(), rng.normal());
    g.a(i) = rng.uniform(-5.0, 5.0);
  }
  g.phi = rng.uniform(0.0, 2.0 * kPi);
  g.psi = rng.uniform(0.0, 2.0 * kPi);
  g.theta = theta;
  return g;
}

cplx SyntheticBiadditive::operator()(const Vec& x, const Vec& y) const {
  const cplx bil = (x.cast<cplx>().transpose() * M * y.cast<cplx>())(0, 0);
  return bil + (theta / 3.0) * std::sin(a.dot(x + y) + phi) * std::cos(b.dot(x - y));
}

SyntheticBiadditive synthetic_biadditive(Rng& rng, int d, double theta) {
  SyntheticBiadditive g;
  CMat A(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) A(i, j) = cplx(rng.normal(), rng.normal());
  g.M = 0.5 * (A + A.transpose());
  g.a.resize(d);
  g.b.resize(d);
  for (int i = 0; i < d; ++i) {
    g.a(i) = rng.uniform(-5.0, 5.0);
    g.b(i) = rng.uniform(-5.0, 5.0);
  }
  g.phi = rng.uniform(0.0, 2.0 * kPi);
  g.theta = theta;
  return g;
}

double dense_grid_vlambda(const ExtremalProblem& pr, int points) {
  if (pr.dim() != 1) throw DimensionMismatch("dense grid oracle is scalar");
  if (points < 2) throw std::invalid_argument("dense grid needs two points");
  const double Q = pr.Q(0, 0);
  double best = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < points; ++i) {
    const double q = Q * static_cast<double>(i) / (points - 1);
    best = std::max(best, slambda_gaussian(Mat::Constant(1, 1, q), pr));
  }
  return best;
}

}  // namespace bernstab
