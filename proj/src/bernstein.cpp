#include "bernstab/bernstein.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bernstab/cauchy.hpp"
#include "bernstab/errors.hpp"
#include "bernstab/parallel.hpp"
#include "bernstab/rng.hpp"

namespace bernstab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

int by_dim(int d, int n1, int n2, int n3, int rest) { return d == 1 ? n1 : d == 2 ? n2 : d == 3 ? n3 : rest; }

// ln f along 0 -> t. The phase derivative along the ray is bounded by
// ||t||_1 E||X||_1 / floor, so steps of pi/4 in phase cannot alias.
class LogCF {
 public:
  LogCF(const Distribution& dist, double floor) : f_(dist), m1_(l1_moment_bound(dist)), floor_(floor) {}

  cplx operator()(const Vec& t) const {
    const double n1 = l1_norm(t);
    if (n1 == 0.0) return {0.0, 0.0};
    const double want = std::ceil(n1 * m1_ / (floor_ * kPi / 4.0));
    const int steps = static_cast<int>(std::clamp(want, 1.0, 1048576.0));
    cplx prev(1.0, 0.0);
    double phase = 0.0;
    Vec s(t.size());
    for (int k = 1; k <= steps; ++k) {
      s = (static_cast<double>(k) / steps) * t;
      const cplx cur = f_(s);
      if (std::abs(cur) < kBranchFloor) throw BranchLost("|f| fell below the floor on the ray");
      const double step = std::arg(cur / prev);
      if (std::abs(step) >= kPi - 1e-12) throw BranchLost("phase jump of pi between ray samples");
      phase += step;
      prev = cur;
    }
    return {std::log(std::abs(prev)), phase};
  }

  const CompiledCF& cf() const { return f_; }

 private:
  CompiledCF f_;
  double m1_;
  double floor_;
};

cplx gaussian_cf(const Vec& m, const Mat& Q, const Vec& t) {
  return std::exp(cplx(-0.5 * t.dot(Q * t), m.dot(t)));
}

struct Floor {
  double grid = 0.0;
  double pad = 0.0;
};

Floor modulus_floor(const Distribution& X1, const Distribution& X2, double T, int n) {
  const BallGrid g = ball_grid(X1.dim(), T, n);
  const CompiledCF f1(X1), f2(X2);
  std::vector<double> v(g.size());
  parallel_for(g.size(), [&](std::size_t i) {
    v[i] = std::min(std::abs(f1(g.point(i))), std::abs(f2(g.point(i))));
  });
  Floor out;
  out.grid = *std::min_element(v.begin(), v.end());
  // every point of the ball is within one spacing (sup norm) of a grid node
  out.pad = g.spacing * std::max(l1_moment_bound(X1), l1_moment_bound(X2));
  return out;
}

// Probed theta can undershoot the true supremum; the fits get headroom.
double headroom(double theta) { return 2.0 * theta + 1e-15; }

GaussianSurrogate fit_core(const Distribution& X1, const Distribution& X2, double T, const FitOptions& opt,
                           const DependenceReport& dep, double delta) {
  const int d = X1.dim();
  if (X2.dim() != d) throw DimensionMismatch("fit_surrogate: inputs differ in dimension");
  GaussianSurrogate s;
  s.d = d;
  s.T = T;
  s.valid_radius = T / 2.0;
  s.dependence = dep;
  s.epsilon_hat = dep.epsilon_hat;
  s.epsilon = std::max(dep.epsilon_hat, opt.epsilon_override.value_or(0.0));
  s.delta = delta;

  const Floor fl = modulus_floor(X1, X2, T, opt.n_p > 0 ? opt.n_p : by_dim(d, 401, 101, 31, 11));
  s.p_grid = fl.grid;
  s.p_pad = fl.pad;
  s.p = std::min(1.0, fl.grid - fl.pad);
  if (!(s.p > 0.0)) throw PFloorZero("min |f_i| over the T-ball is not bounded away from zero; shrink T");

  const double eff = s.epsilon + 4.0 * delta;
  s.eps_threshold = surrogate_threshold(d, s.p);
  if (eff > s.eps_threshold)
    throw ThresholdExceeded("dependence " + std::to_string(eff) + " above p^4/(360 d^2 (d+1)) = " +
                            std::to_string(s.eps_threshold));

  const LogCF g1(X1, s.p), g2(X2, s.p);
  const double Tb = T / (2.0 * d);

  // g~(t, x) = g1(t + x) - g1(t) - g1(x) is nearly -t'Qx
  SampledBiFunction gt;
  gt.dim = d;
  gt.T = Tb;
  gt.eval = [&](const Vec& a, const Vec& b) { return g1(a + b) - g1(a) - g1(b); };
  s.theta_bilinear = headroom(measure_theta_biadditive(gt, opt.n_probe, opt.seed));
  const BiadditiveFit bf = biadditive_fit(gt, s.theta_bilinear);
  Mat qr = -bf.matrix.real();
  qr = 0.5 * (qr + qr.transpose());
  s.Q_tilde_R = qr;

  // null directions of the inputs: the law sits on a hyperplane there
  Mat proj = Mat::Identity(d, d);
  {
    const Mat c = mean_cov(X1).cov + mean_cov(X2).cov;
    Eigen::SelfAdjointEigenSolver<Mat> es(c);
    const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    for (int k = 0; k < d; ++k) {
      if (es.eigenvalues()(k) > 1e-12 * scale) continue;
      const Vec u = es.eigenvectors().col(k);
      const Vec t = (s.valid_radius / l1_norm(u)) * u;
      if (std::abs(g1.cf()(t)) > 1.0 - 1e-10 && std::abs(g2.cf()(t)) > 1.0 - 1e-10) {
        proj -= u * u.transpose();
        ++s.null_directions;
      }
    }
  }

  s.shift = d / (s.valid_radius * s.valid_radius) * (720.0 * d * d * eff / std::pow(s.p, 4));
  Mat qh = qr + s.shift * Mat::Identity(d, d);
  if (s.null_directions > 0) qh = proj * qh * proj;
  s.Q_hat = psd_clip(0.5 * (qh + qh.transpose()));

  auto mean_of = [&](const LogCF& g, std::uint64_t stream, double& theta) {
    SampledFunction r;
    r.dim = d;
    r.T = Tb;
    r.eval = [&](const Vec& t) { return g(t) + 0.5 * t.dot(qr * t); };
    theta = headroom(measure_theta_additive(r, opt.n_probe, opt.seed ^ stream));
    const AdditiveFit af = kominek_fit(r, theta);
    Vec m = af.linear_map.imag();
    if (s.null_directions > 0) {
      // along null directions the law is a point mass in that coordinate
      const Vec mu = mean_cov(stream == 1 ? X1 : X2).mean;
      m = proj * m + (Mat::Identity(d, d) - proj) * mu;
    }
    return m;
  };
  s.m_hat_1 = mean_of(g1, 1, s.theta_linear_1);
  s.m_hat_2 = mean_of(g2, 2, s.theta_linear_2);

  s.certified_gap = surrogate_error_constant(d, s.p, eff);
  const BallGrid ag = ball_grid(d, s.valid_radius, opt.n_audit > 0 ? opt.n_audit : by_dim(d, 401, 61, 21, 11));
  std::vector<double> ratio(ag.size()), absd(ag.size());
  std::vector<char> bad(ag.size(), 0);
  parallel_for(ag.size(), [&](std::size_t k) {
    const Vec t = ag.vec(k);
    double r = 0.0, a = 0.0;
    for (int i = 1; i <= 2; ++i) {
      const cplx ph = s.phi(i, t);
      const double diff = std::abs((i == 1 ? g1.cf() : g2.cf())(t) - ph);
      if (diff > s.certified_gap * std::abs(ph) + 1e-12) bad[k] = 1;
      r = std::max(r, diff / std::abs(ph));
      a = std::max(a, diff);
    }
    ratio[k] = r;
    absd[k] = a;
  });
  s.audit_points = ag.size();
  s.audit_max_ratio = *std::max_element(ratio.begin(), ratio.end());
  s.audit_max_abs = *std::max_element(absd.begin(), absd.end());
  const auto failures = std::count(bad.begin(), bad.end(), 1);
  if (failures > 0)
    throw AuditFailure("Gaussian surrogate misses |f - Phi| <= C(eps)|Phi| at " + std::to_string(failures) +
                       " points of the T/2 ball");
  return s;
}

// unit directions in 1-norm inside span(B)
std::vector<Vec> sphere_directions(const Mat& B, int count, std::uint64_t seed) {
  std::vector<Vec> out;
  const int r = static_cast<int>(B.cols());
  if (r == 1) {
    out.push_back(B.col(0));
    out.push_back(-B.col(0));
  } else if (r == 2) {
    for (int j = 0; j < count; ++j) {
      const double a = 2.0 * kPi * j / count;
      out.push_back(std::cos(a) * B.col(0) + std::sin(a) * B.col(1));
    }
  } else {
    for (int i = 0; i < r; ++i) {
      out.push_back(B.col(i));
      out.push_back(-B.col(i));
    }
    Rng rng(seed, 0x5e11);
    while (static_cast<int>(out.size()) < count) {
      Vec c(r);
      for (int i = 0; i < r; ++i) c(i) = rng.normal();
      out.push_back(B * c);
    }
  }
  for (auto& u : out) u /= l1_norm(u);
  return out;
}

}  // namespace

cplx GaussianSurrogate::phi(int i, const Vec& t) const { return gaussian_cf(i == 1 ? m_hat_1 : m_hat_2, Q_hat, t); }

double surrogate_error_constant(int d, double p, double eps) {
  return 720.0 * d * d * (d + 1.0) * eps / std::pow(p, 4);
}

double surrogate_threshold(int d, double p) { return std::pow(p, 4) / (360.0 * d * d * (d + 1.0)); }

std::vector<double> doubling_sequence(int d, double p, double eps, double phi_t0_abs, int terms) {
  std::vector<double> c(static_cast<std::size_t>(std::max(terms, 1)));
  c[0] = surrogate_error_constant(d, p, eps);
  double ph = phi_t0_abs;  // |Phi(2^{k-1} t0)| = |Phi(t0)|^{4^{k-1}}
  for (std::size_t k = 1; k < c.size(); ++k) {
    const double prev = c[k - 1];
    const double a = 2.0 * ph + prev;
    c[k] = std::isfinite(prev) ? a * a * a * prev + 5.0 * eps : kInf;
    if (!std::isfinite(c[k])) c[k] = kInf;
    ph = (ph * ph) * (ph * ph);
  }
  return c;
}

StabilityBudget budget(int d, double p, double T, double epsilon, double delta, double phi_t0_abs) {
  if (d < 1) throw DimensionMismatch("budget: dimension");
  if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("budget: p must lie in (0, 1]");
  if (!(epsilon >= 0.0) || !(delta >= 0.0)) throw std::invalid_argument("budget: epsilon and delta must be >= 0");
  if (!(phi_t0_abs > 0.0 && phi_t0_abs < 1.0)) throw std::invalid_argument("budget: |Phi(t0)| must lie in (0, 1)");
  StabilityBudget b;
  b.d = d;
  b.p = p;
  b.T = T;
  b.epsilon = epsilon;
  b.delta = delta;
  b.phi_t0_abs = phi_t0_abs;
  const double e = b.effective_epsilon();
  b.C_eps = surrogate_error_constant(d, p, e);
  b.eps_threshold = surrogate_threshold(d, p);
  if (e > b.eps_threshold) throw ThresholdExceeded("epsilon + 4 delta exceeds p^4/(360 d^2 (d+1))");

  constexpr int kTerms = 64;
  const std::vector<double> seq = doubling_sequence(d, p, e, phi_t0_abs, kTerms);
  const std::vector<double> seq1 = doubling_sequence(d, p, 1.0, phi_t0_abs, kTerms);
  b.C_k.push_back(seq[0]);
  for (int k = 1; k < kTerms; ++k) {
    b.C_k.push_back(seq[static_cast<std::size_t>(k)]);
    if (!std::isfinite(seq[static_cast<std::size_t>(k)]) || seq[static_cast<std::size_t>(k)] <= seq[static_cast<std::size_t>(k - 1)])
      break;
  }

  double ph = phi_t0_abs;
  for (int k = 1; k < kTerms; ++k) {
    const double a = 2.0 * ph + seq[static_cast<std::size_t>(k - 1)];
    if (a * a * a <= 0.5) {
      b.k_star = k;
      break;
    }
    ph = (ph * ph) * (ph * ph);
  }
  if (b.k_star < 0) {
    b.C_tilde = kInf;
    b.C_tilde_at_one = kInf;
    return b;
  }
  // From the first k whose factor stays below 1/2 against the running
  // maximum M, every later term is <= max(M, 10 e).
  ph = std::pow(phi_t0_abs, std::pow(4.0, b.k_star - 1));
  double run = 0.0, run1 = 0.0;
  for (int i = 0; i < b.k_star; ++i) {
    run = std::max(run, seq[static_cast<std::size_t>(i)]);
    run1 = std::max(run1, seq1[static_cast<std::size_t>(i)]);
  }
  for (int k = b.k_star; k < kTerms; ++k) {
    const double m = std::max(run, 10.0 * e);
    const double a = 2.0 * ph + m;
    if (a * a * a <= 0.5) {
      b.converged = true;
      b.C_tilde = e > 0.0 ? m / e : 0.0;
      b.C_tilde_at_one = std::max(run1, 10.0);
      return b;
    }
    run = std::max(run, seq[static_cast<std::size_t>(k)]);
    run1 = std::max(run1, seq1[static_cast<std::size_t>(k)]);
    ph = (ph * ph) * (ph * ph);
  }
  b.C_tilde = kInf;
  b.C_tilde_at_one = kInf;
  return b;
}

Lemma3Report lemma3_audit(const JointPair& pair, double T, int n) {
  if (!std::holds_alternative<IndependentPair>(pair.node().v))
    throw std::invalid_argument("lemma3_audit: the pair must be independent");
  if (pair.d1() != pair.d2()) throw DimensionMismatch("lemma3_audit: blocks differ in dimension");
  const int d = pair.d1();
  if (n <= 0) n = by_dim(d, 201, 41, 15, 9);
  const DependenceReport dep = dependence_sup(sum_difference(pair), T, n);
  const CompiledCF f1(marginal1(pair)), f2(marginal2(pair));
  const BallGrid g = ball_grid(d, T, n);
  std::vector<double> res(g.size());
  parallel_for(g.size(), [&](std::size_t k) {
    const Vec t = g.vec(k);
    const Vec t2 = 2.0 * t;
    double r = 0.0;
    for (const CompiledCF* f : {&f1, &f2}) {
      const cplx a = (*f)(t);
      r = std::max(r, std::abs((*f)(t2) - a * a * std::norm(a)));
    }
    res[k] = r;
  });
  Lemma3Report rep;
  rep.max_residual = *std::max_element(res.begin(), res.end());
  rep.epsilon_hat = dep.epsilon_hat;
  rep.pad = dep.pad;
  rep.bound = 5.0 * (dep.epsilon_hat + dep.pad);
  rep.slack = rep.bound - rep.max_residual;
  rep.grid_points = g.size();
  rep.holds = rep.max_residual <= rep.bound + 1e-12;
  return rep;
}

GaussianSurrogate fit_surrogate(const Distribution& X1, const Distribution& X2, double T, const FitOptions& opt) {
  if (!(T > 0.0)) throw std::invalid_argument("fit_surrogate: T must be positive");
  const int d = X1.dim();
  const int n = opt.n_dep > 0 ? opt.n_dep : by_dim(d, 101, 21, 9, 5);
  const DependenceReport dep = dependence_sup(sum_difference(JointPair::independent(X1, X2)), T, n);
  return fit_core(X1, X2, T, opt, dep, 0.0);
}

GaussianSurrogate fit_surrogate(const JointPair& inputs, double T, const FitOptions& opt) {
  if (!(T > 0.0)) throw std::invalid_argument("fit_surrogate: T must be positive");
  if (inputs.d1() != inputs.d2()) throw DimensionMismatch("fit_surrogate: blocks differ in dimension");
  const int d = inputs.d1();
  const int n = opt.n_dep > 0 ? opt.n_dep : by_dim(d, 101, 21, 9, 5);
  // sum/difference frequencies t1 +- t2 reach radius 2T
  const double delta = dependence_sup(inputs, 2.0 * T, n).epsilon_hat;
  const DependenceReport dep = dependence_sup(sum_difference(inputs), T, n);
  return fit_core(marginal1(inputs), marginal2(inputs), T, opt, dep, delta);
}

ExtensionReport extend_unbounded(const GaussianSurrogate& s, const Distribution& X1, const Distribution& X2,
                                 const ExtensionOptions& opt) {
  const int d = s.d;
  if (X1.dim() != d || X2.dim() != d) throw DimensionMismatch("extend_unbounded: input dimension");
  Eigen::SelfAdjointEigenSolver<Mat> es(s.Q_hat);
  const double top = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  std::vector<int> keep;
  for (int k = 0; k < d; ++k)
    if (es.eigenvalues()(k) > 1e-12 * top) keep.push_back(k);
  if (keep.empty()) throw DegenerateAnchor("Q_hat vanishes; |Phi| = 1 everywhere");
  Mat B(d, static_cast<int>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) B.col(static_cast<int>(j)) = es.eigenvectors().col(keep[j]);

  ExtensionReport rep;
  const double r0 = s.T / 4.0;
  double best = kInf;
  for (const Vec& u : sphere_directions(B, 4096, opt.seed)) {
    const Vec t = r0 * u;
    const double q = t.dot(s.Q_hat * t);
    if (q < best) {
      best = q;
      rep.t0 = t;
    }
  }
  rep.phi_t0_abs = std::exp(-0.5 * best);
  if (rep.phi_t0_abs >= 1.0 - 1e-10) throw DegenerateAnchor("|Phi(t0)| is within 1e-10 of one");

  rep.budget = budget(d, s.p, s.T, s.epsilon, s.delta, rep.phi_t0_abs);
  rep.certified_gap = rep.budget.certified_gap();
  const std::vector<double> seq =
      doubling_sequence(d, s.p, rep.budget.effective_epsilon(), rep.phi_t0_abs, std::max(64, opt.shells + 1));

  const std::vector<Vec> dirs = sphere_directions(Mat::Identity(d, d), opt.directions, opt.seed);
  const CompiledCF f1(X1), f2(X2);
  for (int k = 1; k <= opt.shells; ++k) {
    ShellAudit sh;
    sh.k = k;
    sh.r_lo = std::ldexp(s.T, k - 2);
    sh.r_hi = std::ldexp(s.T, k - 1);
    sh.bound = seq[static_cast<std::size_t>(k)];
    const std::size_t nr = static_cast<std::size_t>(std::max(opt.radii, 2));
    std::vector<double> res(dirs.size() * nr);
    parallel_for(res.size(), [&](std::size_t idx) {
      const Vec& u = dirs[idx / nr];
      const double r = sh.r_lo + (sh.r_hi - sh.r_lo) * static_cast<double>(idx % nr) / static_cast<double>(nr - 1);
      const Vec t = r * u;
      res[idx] = std::max(std::abs(f1(t) - s.phi(1, t)), std::abs(f2(t) - s.phi(2, t)));
    });
    sh.points = res.size();
    sh.max_residual = *std::max_element(res.begin(), res.end());
    sh.ok = sh.max_residual <= sh.bound + 1e-10;
    if (!sh.ok) ++rep.failures;
    rep.shells.push_back(sh);
  }
  return rep;
}

double entropy_B1(double x, int d, double lambda_z_min) {
  if (x <= 0.0) return 0.0;
  const double dd = d;
  const double num = 2.0 * std::pow(dd * std::sqrt(-2.0 * std::log(x)), dd) * x + 4.0 * dd * std::pow(2.0 * kPi, dd / 2.0) * x;
  const double den = std::pow(2.0 * kPi, dd) * std::pow(-2.0 * std::log(std::exp(-lambda_z_min / 2.0) + x), dd / 2.0);
  return num / den;
}

EntropyBounds entropy_bounds(double x, const EntropyMoments& mom) {
  if (mom.d < 1) throw DimensionMismatch("entropy_bounds: dimension");
  if (!(mom.lambda_z_min > 0.0)) throw DegenerateNoise("entropy_bounds: noise covariance must be positive definite");
  if (!(x >= 0.0)) throw std::invalid_argument("entropy_bounds: negative c.f. error");
  const double dd = mom.d;
  EntropyBounds b;
  b.x = x;
  b.m = mom.density_peak + 1.0;
  b.nu = mom.second_moment + 1.0;
  b.c1 = dd / 2.0 * std::abs(std::log(4.0 * b.nu * kPi * std::exp(1.0) / dd)) + std::log(b.m * std::exp(2.0) / 2.0) + 1.0;
  b.c2 = dd / 2.0 + 2.0;
  if (x == 0.0) return b;
  if (!(x < 1.0 - std::exp(-mom.lambda_z_min / 2.0)))
    throw HypothesisFailed("c.f. error " + std::to_string(x) + " is not below 1 - exp(-lambda_min/2)");
  b.B1 = entropy_B1(x, mom.d, mom.lambda_z_min);
  b.T2 = std::pow(b.B1, -1.0 / (dd + 3.0));
  const double T2 = b.T2;
  b.B2 = 4.0 / (T2 * T2 * T2) + 2.0 * dd * mom.second_moment / (T2 * T2);
  b.B3 = 2.0 / T2 + std::sqrt(mom.fourth_moment) * std::sqrt(dd * mom.second_moment / (T2 * T2) + 2.0 / (T2 * T2 * T2));
  if (b.B2 > b.m) throw HypothesisFailed("l1 bound B2 exceeds the density cap m of the entropy-continuity lemma");
  b.B4 = b.B2 * (b.c1 - b.c2 * std::log(b.B2));
  b.B = std::max(b.B3, b.B4);
  return b;
}

EntropyBounds entropy_bounds(StabilityBudget& bud, const EntropyMoments& mom) {
  const EntropyBounds b = entropy_bounds(bud.certified_gap(), mom);
  bud.B1 = b.B1;
  bud.B2 = b.B2;
  bud.B3 = b.B3;
  bud.B4 = b.B4;
  bud.B = b.B;
  return b;
}

EntropyAuditReport entropy_stability_audit(const Distribution& X1, const Distribution& X2, const Mat& Q_Z1,
                                           const Mat& Q_Z2, const EntropyAuditOptions& opt) {
  const int d = X1.dim();
  if (X2.dim() != d || Q_Z1.rows() != d || Q_Z2.rows() != d) throw DimensionMismatch("entropy_stability_audit");
  const double lam = std::min(min_eigenvalue(Q_Z1), min_eigenvalue(Q_Z2));
  if (!(lam > 0.0)) throw DegenerateNoise("noise covariance must be positive definite");
  const Distribution Y1 = smooth(X1, Q_Z1);
  const Distribution Y2 = smooth(X2, Q_Z2);

  EntropyAuditReport rep;
  // beyond radius R both c.f.s are below exp(-27.6) in modulus
  rep.R = std::sqrt(2.0 * d * 27.6 / lam);
  rep.tail = 2.0 * std::exp(-27.6);
  const int ng = opt.n_global > 0 ? opt.n_global : by_dim(d, 201, 31, 11, 7);
  rep.epsilon_global = dependence_sup(sum_difference(JointPair::independent(Y1, Y2)), rep.R, ng).epsilon_hat + rep.tail;

  const Moments mo1 = mean_cov(Y1), mo2 = mean_cov(Y2);
  rep.moments.d = d;
  rep.moments.lambda_z_min = lam;
  rep.moments.second_moment = std::max(mo1.second().trace(), mo2.second().trace());
  rep.moments.density_peak = std::max(std::exp(-0.5 * log_det_spd(2.0 * kPi * Q_Z1)),
                                       std::exp(-0.5 * log_det_spd(2.0 * kPi * Q_Z2)));

  // pick the radius that minimizes the unbounded-domain error C~ eps
  const CompiledCF c1(Y1), c2(Y2);
  const std::vector<Vec> dirs = sphere_directions(Mat::Identity(d, d), 64, opt.extension.seed);
  struct Cand {
    double T;
    double score;
  };
  std::vector<Cand> cands;
  int below_threshold = 0;
  const int np = opt.fit.n_p > 0 ? opt.fit.n_p : by_dim(d, 401, 101, 31, 11);
  for (int j = 0; j < 64; ++j) {
    const double T = rep.R * std::pow(2.0, -j / 4.0);
    const Floor fl = modulus_floor(Y1, Y2, T, np);
    const double p = std::min(1.0, fl.grid - fl.pad);
    if (!(p > 0.0) || rep.epsilon_global > surrogate_threshold(d, p)) continue;
    double phi = 0.0;
    for (const Vec& u : dirs) {
      const Vec t = (T / 4.0) * u;
      phi = std::max({phi, std::abs(c1(t)), std::abs(c2(t))});
    }
    if (!(phi < 1.0 - 1e-10)) continue;
    ++below_threshold;
    const StabilityBudget b = budget(d, p, T, rep.epsilon_global, 0.0, phi);
    if (!b.converged) continue;
    cands.push_back({T, b.certified_gap()});
  }
  if (cands.empty()) {
    rep.reason = below_threshold == 0 ? "no radius satisfies the surrogate threshold"
                                      : "doubling recursion does not settle at any radius under the threshold";
    return rep;
  }
  std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) { return a.score < b.score; });

  FitOptions fo = opt.fit;
  fo.epsilon_override = rep.epsilon_global;
  std::string last_error;
  bool fitted = false;
  for (const Cand& c : cands) {
    try {
      rep.surrogate = fit_surrogate(Y1, Y2, c.T, fo);
      rep.extension = extend_unbounded(rep.surrogate, Y1, Y2, opt.extension);
      if (!rep.extension.budget.converged) throw NoConvergence("doubling recursion did not settle");
      rep.T = c.T;
      fitted = true;
      break;
    } catch (const ThresholdExceeded& e) {
      last_error = e.what();
    } catch (const PFloorZero& e) {
      last_error = e.what();
    } catch (const NoConvergence& e) {
      last_error = e.what();
    } catch (const DegenerateAnchor& e) {
      last_error = e.what();
    }
  }
  if (!fitted) {
    rep.reason = "surrogate fit failed at every candidate radius: " + last_error;
    return rep;
  }

  const GaussianSurrogate& s = rep.surrogate;
  const double lmax = max_eigenvalue(s.Q_hat);
  double m4 = 0.0;
  for (const Vec* m : {&s.m_hat_1, &s.m_hat_2}) {
    const double mm = m->squaredNorm();
    m4 = std::max(m4, mm * mm + 6.0 * mm * lmax + 3.0 * lmax * lmax);
  }
  rep.moments.fourth_moment = m4;
  try {
    rep.bounds = entropy_bounds(rep.extension.budget, rep.moments);
  } catch (const HypothesisFailed& e) {
    rep.reason = e.what();
    return rep;
  }
  rep.applicable = true;

  rep.h_Y1 = differential_entropy(Y1, opt.quad);
  rep.h_Y2 = differential_entropy(Y2, opt.quad);
  rep.h_G1 = gaussian_entropy(s.Q_hat);
  rep.h_G2 = rep.h_G1;
  rep.gap1 = std::abs(rep.h_Y1 - rep.h_G1);
  rep.gap2 = std::abs(rep.h_Y2 - rep.h_G2);
  const Mat I = Mat::Identity(d, d);
  rep.psd_slack1 = min_eigenvalue(mo1.second() + rep.bounds.B * I - (s.Q_hat + s.m_hat_1 * s.m_hat_1.transpose()));
  rep.psd_slack2 = min_eigenvalue(mo2.second() + rep.bounds.B * I - (s.Q_hat + s.m_hat_2 * s.m_hat_2.transpose()));
  rep.holds = rep.gap1 <= rep.bounds.B && rep.gap2 <= rep.bounds.B && rep.psd_slack1 >= -1e-9 &&
              rep.psd_slack2 >= -1e-9;
  return rep;
}

}  // namespace bernstab
