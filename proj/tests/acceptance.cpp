// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "bernstab/agn.hpp"
#include "bernstab/bernstein.hpp"
#include "bernstab/cauchy.hpp"
#include "bernstab/charfn.hpp"
#include "bernstab/errors.hpp"
#include "bernstab/experiment.hpp"
#include "bernstab/info.hpp"
#include "bernstab/linalg.hpp"
#include "bernstab/parallel.hpp"

#ifndef BERNSTAB_CONFIG_DIR
#define BERNSTAB_CONFIG_DIR "configs"
#endif

using namespace bernstab;

namespace {

// pinned tolerances
constexpr double kAxiomTol = 1e-12;
constexpr double kExactDepTol = 1e-9;
constexpr double kExactFitTol = 1e-8;
constexpr double kChainTol = 1e-6;
constexpr double kGapFloor = -1e-9;
constexpr double kGaussGapTol = 1e-9;
constexpr double kDoublingTol = 1e-6;
constexpr double kEqualityTol = 1e-8;
constexpr double kInequalityTol = 1e-6;
constexpr double kVlambdaTol = 1e-6;
constexpr double kChallengeTol = 1e-4;
constexpr double kPsdSlackTol = -1e-9;

struct Outcome {
  bool ok = true;
  std::string detail;
  void require(bool cond, const std::string& what) {
    if (!cond && ok) detail = what;
    ok = ok && cond;
  }
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

Vec vec1(double x) { return Vec::Constant(1, x); }

Mat random_spd(Rng& rng, int d, double lo, double hi) {
  Mat A(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) A(i, j) = rng.normal();
  Mat Q = A * A.transpose() / d + lo * Mat::Identity(d, d);
  return Q * (hi / std::max(hi, max_eigenvalue(Q)));
}

std::vector<double> random_weights(Rng& rng, int k) {
  std::vector<double> w(k);
  double tot = 0.0;
  for (double& x : w) tot += (x = rng.uniform(0.2, 1.0));
  for (double& x : w) x /= tot;
  return w;
}

// 1. axioms
Outcome cf_axioms() {
  Outcome o;
  double worst = 0.0;
  for (std::uint64_t k = 0; k < 200; ++k) {
    Rng rng(101, k);
    const int d = 1 + static_cast<int>(rng.below(3));
    const CompiledCF f(random_distribution(rng, d));
    worst = std::max(worst, std::abs(f(Vec::Zero(d)) - 1.0));
    for (int i = 0; i < 50; ++i) {
      Vec t(d);
      for (int c = 0; c < d; ++c) t(c) = 4.0 * rng.normal();
      const cplx v = f(t);
      worst = std::max({worst, std::abs(v) - 1.0, std::abs(f(Vec(-t)) - std::conj(v))});
    }
  }
  o.require(worst <= kAxiomTol, "worst axiom error " + fmt(worst));
  o.detail = o.ok ? "worst axiom error " + fmt(worst) : o.detail;
  return o;
}

// 2. iid Gaussian pairs
Outcome exact_corner() {
  Outcome o;
  double dep = 0.0, err = 0.0;
  for (std::uint64_t k = 0; k < 10; ++k) {
    Rng rng(202, k);
    const int d = 1 + static_cast<int>(k % 2);
    Vec m(d);
    for (int c = 0; c < d; ++c) m(c) = rng.uniform(-1.5, 1.5);
    const Mat Q = random_spd(rng, d, 0.3, 2.0);
    const auto X = Distribution::gaussian(m, Q);
    dep = std::max(dep, dependence_sup(doubled(JointPair::independent(X, X)), 1.0, d == 1 ? 51 : 15).epsilon_hat);
    const GaussianSurrogate s = fit_surrogate(X, X, 1.0);
    err = std::max({err, (s.m_hat_1 - m).cwiseAbs().maxCoeff(), (s.m_hat_2 - m).cwiseAbs().maxCoeff(),
                    (s.Q_hat - Q).cwiseAbs().maxCoeff()});
  }
  o.require(dep < kExactDepTol, "doubled-pair dependence " + fmt(dep));
  o.require(err < kExactFitTol, "recovery error " + fmt(err));
  if (o.ok) o.detail = "max dependence " + fmt(dep) + ", max recovery error " + fmt(err);
  return o;
}

// 3. c.f. gap <= L1 <= sqrt(2 I) on smoothed coupled atoms
Outcome pinsker_chain() {
  Outcome o;
  double slack1 = 1e300, slack2 = 1e300;
  for (std::uint64_t k = 0; k < 20; ++k) {
    Rng rng(303, k);
    const int K = 2 + static_cast<int>(rng.below(3));
    std::vector<Vec> pts;
    for (int i = 0; i < K; ++i) {
      Vec p(2);
      const double x = rng.uniform(-1.5, 1.5);
      p << x, 0.7 * x + rng.uniform(-0.5, 0.5);
      pts.push_back(p);
    }
    const double v1 = rng.uniform(0.5, 2.0), v2 = rng.uniform(0.5, 2.0);
    const JointPair pair = smooth_pair(JointPair::coupled_atoms(pts, random_weights(rng, K), 1),
                                       Mat::Constant(1, 1, v1), Mat::Constant(1, 1, v2));
    const PinskerChain c = pinsker_chain_audit(pair, vec1(rng.uniform(-2, 2)), vec1(rng.uniform(-2, 2)), kChainTol);
    o.require(c.holds, "pair " + std::to_string(k) + " breaks the chain");
    slack2 = std::min(slack2, c.sqrt_2I - c.l1);
    // further frequencies against the same L1 value
    const Distribution j = joint_distribution(pair), a = marginal1(pair), b = marginal2(pair);
    for (int i = 0; i < 25; ++i) {
      Vec t(2);
      t << 2.0 * rng.normal(), 2.0 * rng.normal();
      const double gap = std::abs(cf_eval(j, t) - cf_eval(a, vec1(t(0))) * cf_eval(b, vec1(t(1))));
      slack1 = std::min(slack1, c.l1 - gap);
    }
  }
  o.require(slack1 >= -kChainTol, "c.f. gap exceeds L1 by " + fmt(-slack1));
  o.require(slack2 >= -kChainTol, "L1 exceeds sqrt(2I) by " + fmt(-slack2));
  if (o.ok) o.detail = "min slack " + fmt(slack1) + " / " + fmt(slack2);
  return o;
}

// 4. doubling identity on independent pairs
Outcome doubling_identity() {
  Outcome o;
  double slack = 1e300;
  for (std::uint64_t k = 0; k < 20; ++k) {
    Rng rng(404, k);
    const int d = 1 + static_cast<int>(k % 2);
    const Distribution X1 = random_distribution(rng, d);
    const Distribution X2 = k % 3 == 0 ? X1 : random_distribution(rng, d);
    const Lemma3Report r = lemma3_audit(JointPair::independent(X1, X2), rng.uniform(0.5, 1.5));
    o.require(r.holds, "pair " + std::to_string(k) + ": residual " + fmt(r.max_residual) + " > " + fmt(r.bound));
    slack = std::min(slack, r.slack);
  }
  if (o.ok) o.detail = "min slack " + fmt(slack);
  return o;
}

// 5. surrogate-gap audit on near-Gaussian pairs
Outcome surrogate_gap() {
  Outcome o;
  double ratio = 0.0;
  int audited = 0;
  for (std::uint64_t k = 0; k < 10; ++k) {
    Rng rng(505, k);
    const int d = 1 + static_cast<int>(k % 2);
    const Mat Q = random_spd(rng, d, 0.5, 1.5);
    Vec m(d);
    for (int c = 0; c < d; ++c) m(c) = rng.uniform(-0.5, 0.5);
    const auto base = Distribution::gaussian(m, Q);
    const double w = rng.uniform(2e-4, 1e-3);
    const auto X = Distribution::mixture({base, Distribution::gaussian(m, rng.uniform(2.0, 4.0) * Q)}, {1.0 - w, w});
    const double T = d == 1 ? 0.01 : 0.005;
    try {
      const GaussianSurrogate s = fit_surrogate(X, X, T);
      o.require(s.epsilon <= s.eps_threshold, "pair " + std::to_string(k) + " misses the threshold");
      o.require(s.audit_max_ratio <= s.certified_gap,
                "pair " + std::to_string(k) + ": ratio " + fmt(s.audit_max_ratio) + " > " + fmt(s.certified_gap));
      ratio = std::max(ratio, s.certified_gap > 0 ? s.audit_max_ratio / s.certified_gap : 0.0);
      audited += static_cast<int>(s.audit_points > 0);
    } catch (const Error& e) {
      o.require(false, "pair " + std::to_string(k) + ": " + e.what());
    }
  }
  o.require(audited == 10, "audit grids missing");
  if (o.ok) o.detail = "max observed/certified " + fmt(ratio);
  return o;
}

// 6. constructive Cauchy fits
Outcome cauchy_fits() {
  Outcome o;
  const char* routes[] = {"hyers", "skof", "kominek", "biadditive"};
  double excess = -1e300;
  for (std::uint64_t k = 0; k < 30; ++k) {
    Rng rng(606, k);
    const std::string r = routes[k % 4];
    const int d = r == "skof" ? 1 : 1 + static_cast<int>((k / 4) % 2);
    const double theta = rng.uniform(1e-4, 1e-2), T = rng.uniform(0.5, 2.0);
    try {
      if (r == "biadditive") {
        const SyntheticBiadditive g = synthetic_biadditive(rng, d, theta);
        const BiadditiveFit fit = biadditive_fit({d, T, [&](const Vec& x, const Vec& y) { return g(x, y); }}, theta);
        const double expect = d == 1 ? 6.0 * theta : (7.0 * d * d - 1.0) * theta;
        o.require(fit.certified_bound <= expect * (1 + 1e-12), "biadditive bound " + fmt(fit.certified_bound));
        excess = std::max(excess, fit.max_residual - fit.certified_bound);
        for (int i = 0; i < 2000; ++i) {
          Vec x(d), y(d);
          for (int c = 0; c < d; ++c) x(c) = rng.uniform(-T, T), y(c) = rng.uniform(-T, T);
          const cplx model = (x.cast<cplx>().transpose() * fit.matrix * y.cast<cplx>())(0, 0);
          excess = std::max(excess, std::abs(g(x, y) - model) - fit.certified_bound);
        }
      } else {
        const SyntheticAdditive g = synthetic_additive(rng, d, theta);
        const SampledFunction sf{d, T, [&](const Vec& x) { return g(x); }};
        const AdditiveFit fit = r == "hyers" ? hyers_fit(sf, theta) : r == "skof" ? skof_extend_fit(sf, theta)
                                                                                   : kominek_fit(sf, theta);
        const double expect = r == "hyers" ? theta : r == "skof" ? 3.0 * theta : (4.0 * d - 1.0) * theta;
        o.require(fit.certified_bound <= expect * (1 + 1e-12), r + " bound " + fmt(fit.certified_bound));
        excess = std::max(excess, fit.max_residual - fit.certified_bound);
        for (int i = 0; i < 2000; ++i) {
          Vec x(d);
          for (int c = 0; c < d; ++c) x(c) = rng.uniform(-T, T);
          excess = std::max(excess, std::abs(g(x) - x.cast<cplx>().dot(fit.linear_map)) - fit.certified_bound);
        }
      }
    } catch (const Error& e) {
      o.require(false, r + " function " + std::to_string(k) + ": " + e.what());
    }
  }
  o.require(excess <= 0.0, "residual exceeds the certified bound by " + fmt(excess));
  if (o.ok) o.detail = "max residual minus bound " + fmt(excess);
  return o;
}

// 7. capacity gap and doubling chain
Distribution corpus_input(std::uint64_t k, int d, Rng& rng) {
  auto lift = [&](const Distribution& x1) {
    if (d == 1) return x1;
    return Distribution::affine(random_spd(rng, 2, 0.5, 1.5), Vec::Zero(2), Distribution::indep_sum(
        Distribution::affine((Mat(2, 1) << 1.0, 0.0).finished(), Vec::Zero(2), x1),
        Distribution::affine((Mat(2, 1) << 0.0, 1.0).finished(), Vec::Zero(2), x1)));
  };
  switch (k % 5) {
    case 0: return Distribution::gaussian(Vec::Zero(d), random_spd(rng, d, 0.3, 3.0));
    case 1: return lift(Distribution::atoms1({-1.0, 1.0}, {0.5, 0.5}));
    case 2: {
      const double a = rng.uniform(0.5, 1.5);
      return lift(Distribution::atoms1({-3 * a, -a, a, 3 * a}, {0.25, 0.25, 0.25, 0.25}));
    }
    case 3: return lift(Distribution::mixture({Distribution::gaussian1(-1.0, 0.3), Distribution::gaussian1(1.0, 0.3)},
                                              random_weights(rng, 2)));
    default: return lift(Distribution::mixture({Distribution::gaussian1(0.0, 1.0), Distribution::atoms1({-2.0, 2.0}, {0.5, 0.5})},
                                               random_weights(rng, 2)));
  }
}

Outcome capacity_gap() {
  Outcome o;
  double min_gap = 1e300, chain = -1e300, cf = -1e300, gauss = 0.0;
  for (std::uint64_t k = 0; k < 30; ++k) {
    Rng rng(707, k);
    const int d = 1 + static_cast<int>((k / 5) % 2);
    const Distribution X = corpus_input(k, d, rng);
    const ChannelModel ch = ChannelModel::make(d == 1 ? Mat(Mat::Constant(1, 1, rng.uniform(0.5, 2.0)))
                                                      : Mat(random_spd(rng, 2, 0.5, 2.0)),
                                               random_spd(rng, d, 0.5, 1.5));
    try {
      const P2PGap g = p2p_gap(X, ch);
      min_gap = std::min(min_gap, g.gap);
      if (k % 5 == 0) gauss = std::max(gauss, std::abs(g.gap));
      const DoublingAudit a = doubling_audit(X, ch, kDoublingTol);
      chain = std::max(chain, a.I_pm - 2.0 * a.eps_sub);
      cf = std::max(cf, a.cf_gap - 2.0 * std::sqrt(a.eps_sub));
    } catch (const Error& e) {
      o.require(false, "input " + std::to_string(k) + ": " + e.what());
    }
  }
  o.require(min_gap >= kGapFloor, "capacity gap " + fmt(min_gap));
  o.require(gauss <= kGaussGapTol, "Gaussian gap " + fmt(gauss));
  o.require(chain <= kDoublingTol, "I(Y+;Y-) exceeds 2 eps_sub by " + fmt(chain));
  o.require(cf <= kDoublingTol, "c.f. gap exceeds 2 sqrt(eps_sub) by " + fmt(cf));
  if (o.ok)
    o.detail = "min gap " + fmt(min_gap) + ", chain excess " + fmt(chain) + ", c.f. excess " + fmt(cf);
  return o;
}

// 8. product-channel device
Outcome product_device() {
  Outcome o;
  double eq = 0.0, ineq = -1e300;
  for (std::uint64_t k = 0; k < 10; ++k) {
    Rng rng(808, k);
    auto atoms = [&] {
      const int K = 2 + static_cast<int>(rng.below(3));
      std::vector<double> p(K);
      for (double& x : p) x = rng.uniform(-2.0, 2.0);
      return Distribution::atoms1(p, random_weights(rng, K));
    };
    const ChannelModel c1 = ChannelModel::scalar(rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0));
    const ChannelModel c2 = ChannelModel::scalar(rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0));
    const ProductDegrade g = product_degrade(c1, c2, atoms(), atoms());
    eq = std::max(eq, std::abs(g.I_11_22 - g.I_1p_2m));
    ineq = std::max(ineq, g.I_tilde - g.I_1p_2m);
  }
  o.require(eq <= kEqualityTol, "equality leg off by " + fmt(eq));
  o.require(ineq <= kInequalityTol, "inequality leg exceeds by " + fmt(ineq));
  if (o.ok) o.detail = "equality error " + fmt(eq) + ", inequality excess " + fmt(ineq);
  return o;
}

// 9. Gaussian extremal optimum and random challengers
Outcome extremal() {
  Outcome o;
  double grid = 0.0, gap = -1e300;
  std::size_t viol = 0;
  std::uint64_t seed = 900;
  for (double lambda : {1.5, 2.0, 4.0}) {
    for (auto [g1, g2] : {std::pair{1.0, 1.0}, {2.0, 1.0}, {1.0, 2.0}}) {
      const ExtremalProblem pr{lambda, Mat::Constant(1, 1, 1.0), ChannelModel::scalar(g1), ChannelModel::scalar(g2)};
      grid = std::max(grid, std::abs(vlambda_gaussian(pr).value - dense_grid_vlambda(pr)));
      const ChallengeReport c = extremal_challenge(pr, 500, seed++, kChallengeTol);
      viol += c.violations;
      gap = std::max(gap, c.max_gap);
    }
  }
  o.require(grid <= kVlambdaTol, "dense-grid mismatch " + fmt(grid));
  o.require(viol == 0, std::to_string(viol) + " violations");
  if (o.ok) o.detail = "grid error " + fmt(grid) + ", max challenger gap " + fmt(gap);
  return o;
}

// 10. entropy stability on smoothed small atoms
Outcome entropy_stability() {
  Outcome o;
  const std::vector<Distribution> corpus = {
      Distribution::atoms1({-0.01, 0.01}, {0.5, 0.5}),
      Distribution::atoms1({-0.01, 0.005}, {1.0 / 3.0, 2.0 / 3.0}),
      Distribution::atoms1({-0.015, 0.0, 0.015}, {0.25, 0.5, 0.25}),
      Distribution::atoms1({-0.01, 0.005, 0.02}, {0.3, 0.5, 0.2}),
      Distribution::atoms1({-0.005, 0.005}, {0.4, 0.6}),
  };
  double ratio = 0.0;
  for (std::size_t k = 0; k < corpus.size(); ++k) {
    const std::string tag = "construction " + std::to_string(k);
    const EntropyAuditReport r =
        entropy_stability_audit(corpus[k], corpus[k], Mat::Identity(1, 1), Mat::Identity(1, 1));
    if (!r.applicable) {
      o.require(false, tag + " outside the hypotheses: " + r.reason);
      continue;
    }
    o.require(r.gap1 <= r.bounds.B && r.gap2 <= r.bounds.B, tag + ": entropy gap above B");
    o.require(r.psd_slack1 >= kPsdSlackTol && r.psd_slack2 >= kPsdSlackTol, tag + ": PSD slack " + fmt(r.psd_slack1));
    const EntropyBounds z = entropy_bounds(0.0, r.moments);
    o.require(z.B1 == 0.0 && z.B2 == 0.0 && z.B3 == 0.0 && z.B4 == 0.0 && z.B == 0.0, tag + ": chain nonzero at 0");
    ratio = std::max(ratio, std::max(r.gap1, r.gap2) / r.bounds.B);
  }
  if (o.ok) o.detail = "max gap/B " + fmt(ratio);
  return o;
}

// 11. reports independent of the worker count
Outcome determinism() {
  Outcome o;
  int n = 0;
  for (const auto& e : std::filesystem::directory_iterator(BERNSTAB_CONFIG_DIR)) {
    if (e.path().extension() != ".json") continue;
    std::ifstream in(e.path());
    const json c = json::parse(in);
    std::string first;
    for (int w : {1, 4}) {
      set_worker_count(w);
      const ExperimentResult r = run_experiment(c);
      const std::string s = r.report.dump(2) + "\n" + r.csv;
      if (w == 1) first = s;
      else o.require(s == first, e.path().filename().string() + " differs across worker counts");
    }
    ++n;
  }
  set_worker_count(1);
  o.require(n > 0, "no configs found");
  if (o.ok) o.detail = std::to_string(n) + " configs identical at 1 and 4 workers";
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> all = {
      {"c.f. axioms on 200 random laws", 5, cf_axioms},
      {"exact Bernstein corner", 30, exact_corner},
      {"c.f. gap, L1 and Pinsker chain", 60, pinsker_chain},
      {"doubling identity on independent pairs", 60, doubling_identity},
      {"surrogate-gap audit on near-Gaussian pairs", 120, surrogate_gap},
      {"constructive Cauchy-equation fits", 30, cauchy_fits},
      {"capacity gap and soft-doubling chain", 300, capacity_gap},
      {"product-channel device", 120, product_device},
      {"Gaussian extremal inequality", 600, extremal},
      {"entropy stability bound", 180, entropy_stability},
      {"determinism across worker counts", 600, determinism},
  };
  set_worker_count(1);
  int failed = 0;
  for (std::size_t i = 0; i < all.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = all[i].run();
    } catch (const std::exception& e) {
      o.ok = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > all[i].budget_s) {
      o.detail += "; over the runtime budget";
      o.ok = false;
    }
    failed += !o.ok;
    std::printf("%s criterion %zu: %s (%.1f s of %.0f s) %s\n", o.ok ? "PASS" : "FAIL", i + 1, all[i].name, secs,
                all[i].budget_s, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
