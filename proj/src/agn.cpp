#include "bernstab/agn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "bernstab/charfn.hpp"
#include "bernstab/errors.hpp"
#include "bernstab/parallel.hpp"
#include "bernstab/rng.hpp"

namespace bernstab {

namespace {

Mat block_diag(const Mat& a, const Mat& b) {
  Mat m = Mat::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  m.topLeftCorner(a.rows(), a.cols()) = a;
  m.bottomRightCorner(b.rows(), b.cols()) = b;
  return m;
}

double log_det_plus_identity(const Mat& G, const Mat& Q) {
  const int k = static_cast<int>(G.rows());
  const Mat m = G * Q * G.transpose() + Mat::Identity(k, k);
  return log_det_spd(0.5 * (m + m.transpose()));
}

int support_cardinality(int d) { return d * (d + 1) / 2 + 1; }

// Frobenius projection onto 0 <= P <= I.
Mat clip_unit(const Mat& p) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (p + p.transpose()));
  const Vec ev = es.eigenvalues().cwiseMax(0.0).cwiseMin(1.0);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

Distribution scaled(const Distribution& x, double c) {
  const int d = x.dim();
  return Distribution::affine(c * Mat::Identity(d, d), Vec::Zero(d), x);
}

}  // namespace

ChannelModel ChannelModel::make(Mat G, Mat Q_Z) {
  ChannelModel ch{std::move(G), std::move(Q_Z)};
  ch.validate();
  return ch;
}

ChannelModel ChannelModel::scalar(double g, double noise_var) {
  return make(Mat::Constant(1, 1, g), Mat::Constant(1, 1, noise_var));
}

void ChannelModel::validate() const {
  if (G.rows() == 0 || G.rows() != G.cols()) throw InvalidChannel("G must be square and non-empty");
  if (Q_Z.rows() != G.rows() || Q_Z.cols() != G.cols()) throw InvalidChannel("noise covariance has the wrong shape");
  if (!(condition_number(G) < 1e12)) throw InvalidChannel("G is singular or too ill-conditioned");
  if (!is_symmetric(Q_Z, 1e-12)) throw InvalidChannel("noise covariance is not symmetric");
  if (!(min_eigenvalue(Q_Z) > 0.0)) throw InvalidChannel("noise covariance must be positive definite");
}

Mat ChannelModel::Q_prime() const { return (G.transpose() * G).inverse(); }

Mat ChannelModel::equivalent_noise() const {
  const Mat gi = G.inverse();
  const Mat q = gi * Q_Z * gi.transpose();
  return 0.5 * (q + q.transpose());
}

P2PGap p2p_gap(const Distribution& X, const ChannelModel& ch, const std::optional<QuadratureSpec>& quad) {
  ch.validate();
  if (X.dim() != ch.dim()) throw DimensionMismatch("p2p_gap: input dimension");
  P2PGap out;
  const Mat qx = mean_cov(X).cov;
  const Mat qy = ch.G * qx * ch.G.transpose() + ch.Q_Z;
  out.gauss_cap = 0.5 * (log_det_spd(0.5 * (qy + qy.transpose())) - log_det_spd(ch.Q_Z));
  out.I_xy = mutual_information(X, ch.G, ch.Q_Z, quad);
  out.gap = out.gauss_cap - out.I_xy;
  return out;
}

DoublingAudit doubling_audit(const Distribution& X, const ChannelModel& ch, double tol,
                             const std::optional<QuadratureSpec>& quad) {
  const int d = ch.dim();
  if (X.dim() != d) throw DimensionMismatch("doubling_audit: input dimension");
  DoublingAudit a;
  a.tol = tol;
  const P2PGap pg = p2p_gap(X, ch, quad);
  a.eps_sub = std::max(0.0, pg.gap);

  const JointPair inputs = doubled(JointPair::independent(X, X));
  a.I_plus = mutual_information(marginal1(inputs), ch.G, ch.Q_Z, quad);
  a.I_minus = mutual_information(marginal2(inputs), ch.G, ch.Q_Z, quad);
  // the noise halves (Z1 +- Z2)/sqrt2 are independent, so the rotation
  // splits I(X+X-; Y+Y-) = I(X1X2; Y1Y2) = 2 I(X; Y)
  a.I_pm = a.I_plus + a.I_minus - 2.0 * pg.I_xy;
  a.mi_chain_holds = a.I_pm <= 2.0 * a.eps_sub + tol;

  const Distribution Y = smooth(Distribution::affine(ch.G, Vec::Zero(d), X), ch.Q_Z);
  const JointPair outputs = doubled(JointPair::independent(Y, Y));
  if (d == 1) {
    a.I_pm_direct = pair_mutual_information(outputs);
    a.mi_chain_holds = a.mi_chain_holds && a.I_pm_direct <= 2.0 * a.eps_sub + tol;
    const Mat G2 = block_diag(ch.G, ch.G);
    const Mat Q2 = block_diag(ch.Q_Z, ch.Q_Z);
    a.identity_lhs = mutual_information(joint_distribution(JointPair::independent(X, X)), G2, Q2);
    a.identity_rhs = mutual_information(joint_distribution(inputs), G2, Q2);
    a.identity_holds = std::abs(a.identity_lhs - a.identity_rhs) <= 1e-8;
  }

  // outside the 1-norm ball of radius R every c.f. term is below exp(-27.6)
  const double lam = min_eigenvalue(ch.Q_Z);
  a.cf_radius = std::sqrt(2.0 * d * 27.6 / lam);
  const int n = d == 1 ? 201 : d == 2 ? 31 : 11;
  a.cf_gap = dependence_sup(outputs, a.cf_radius, n).epsilon_hat;
  a.cf_chain_holds = a.cf_gap <= 2.0 * std::sqrt(a.eps_sub) + tol;
  return a;
}

ProductDegrade product_degrade(const ChannelModel& ch1, const ChannelModel& ch2, const Distribution& X1,
                               const Distribution& X2) {
  ch1.validate();
  ch2.validate();
  const int d = ch1.dim();
  if (ch2.dim() != d || X1.dim() != d || X2.dim() != d) throw DimensionMismatch("product_degrade: dimensions");
  ProductDegrade r;
  const JointPair indep = JointPair::independent(X1, X2);
  const JointPair dp = doubled(indep);
  const Mat q1 = ch1.equivalent_noise();
  const Mat q2 = ch2.equivalent_noise();

  r.I_11_22 = pair_mutual_information(
      smooth_pair(JointPair::linear_image(block_diag(ch1.G, ch2.G), d, dp), ch1.Q_Z, ch2.Q_Z));
  r.I_1p_2m = pair_mutual_information(smooth_pair(dp, q1, q2));
  const Mat q12 = q1 + q2;
  r.I_tilde = pair_mutual_information(doubled(smooth_pair(indep, q12, q12)));

  if ((q1 - q2).norm() <= 1e-14 * std::max(1.0, q1.norm())) {
    const Mat I = Mat::Identity(d, d);
    r.I_1p_2m_alt = mutual_information(marginal1(dp), I, q1) + mutual_information(marginal2(dp), I, q2) -
                    mutual_information(X1, I, q1) - mutual_information(X2, I, q2);
  }
  r.equality_holds = std::abs(r.I_11_22 - r.I_1p_2m) <= r.equality_tol;
  r.inequality_holds = r.I_tilde <= r.I_1p_2m + r.inequality_tol;
  return r;
}

void ExtremalProblem::validate() const {
  if (!(lambda > 1.0)) throw std::invalid_argument("extremal problem needs lambda > 1");
  const int d = dim();
  if (d < 1 || Q.cols() != d) throw DimensionMismatch("extremal problem: Q must be square");
  if (!is_symmetric(Q, 1e-12) || min_eigenvalue(Q) < -1e-12) throw std::invalid_argument("Q must be symmetric PSD");
  for (const ChannelModel* ch : {&ch1, &ch2}) {
    ch->validate();
    if (ch->dim() != d) throw DimensionMismatch("extremal problem: channel dimension");
    if (!ch->Q_Z.isIdentity(1e-12)) throw InvalidChannel("broadcast branches use identity noise; pre-whiten the channel");
  }
}

void validate_candidate(const FiniteVCandidate& c, const ExtremalProblem& pr) {
  const int d = pr.dim();
  if (c.v_weights.empty() || c.v_weights.size() != c.conditional_inputs.size())
    throw std::invalid_argument("candidate weights and conditionals differ in length");
  if (static_cast<int>(c.v_weights.size()) > support_cardinality(d))
    throw CapExceeded("alphabet larger than d(d+1)/2 + 1");
  double total = 0.0;
  Mat S = Mat::Zero(d, d);
  for (std::size_t v = 0; v < c.v_weights.size(); ++v) {
    if (!(c.v_weights[v] >= 0.0)) throw std::invalid_argument("negative letter probability");
    if (c.conditional_inputs[v].dim() != d) throw DimensionMismatch("candidate conditional dimension");
    total += c.v_weights[v];
    S += c.v_weights[v] * mean_cov(c.conditional_inputs[v]).second();
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("letter probabilities must sum to one");
  if (min_eigenvalue(pr.Q + 1e-9 * Mat::Identity(d, d) - S) < 0.0)
    throw CapExceeded("E[XX'] exceeds the covariance cap Q");
}

double slambda(const Distribution& X, const ExtremalProblem& pr) {
  const int d = pr.dim();
  const Mat I = Mat::Identity(d, d);
  return mutual_information(X, pr.ch1.G, I) - pr.lambda * mutual_information(X, pr.ch2.G, I);
}

double slambda(const FiniteVCandidate& c, const ExtremalProblem& pr) {
  double s = 0.0;
  for (std::size_t v = 0; v < c.v_weights.size(); ++v)
    if (c.v_weights[v] > 0.0) s += c.v_weights[v] * slambda(c.conditional_inputs[v], pr);
  return s;
}

double slambda_gaussian(const Mat& Q_hat, const ExtremalProblem& pr) {
  return 0.5 * log_det_plus_identity(pr.ch1.G, Q_hat) - 0.5 * pr.lambda * log_det_plus_identity(pr.ch2.G, Q_hat);
}

double slambda_cap(const ExtremalProblem& pr) {
  const Mat q1 = pr.ch1.Q_prime(), q2 = pr.ch2.Q_prime();
  return 0.5 * (log_det_spd(q1 + q2) - log_det_spd(q1));
}

VLambdaResult vlambda_gaussian(const ExtremalProblem& pr, std::uint64_t seed, int max_iters) {
  pr.validate();
  const int d = pr.dim();
  VLambdaResult res;
  if (d == 1) {
    const double q = pr.Q(0, 0);
    auto s = [&](double x) { return slambda_gaussian(Mat::Constant(1, 1, x), pr); };
    res.Q_hat_star = Mat::Zero(1, 1);
    if (q <= 0.0) return res;
    constexpr int kGrid = 20001;
    int bi = 0;
    double bv = s(0.0);
    for (int i = 1; i < kGrid; ++i) {
      const double v = s(q * i / (kGrid - 1));
      if (v > bv) {
        bv = v;
        bi = i;
      }
    }
    double lo = q * std::max(0, bi - 1) / (kGrid - 1);
    double hi = q * std::min(kGrid - 1, bi + 1) / (kGrid - 1);
    const double r = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = hi - r * (hi - lo), b = lo + r * (hi - lo);
    double fa = s(a), fb = s(b);
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, q); ++it) {
      if (fa < fb) {
        lo = a;
        a = b;
        fa = fb;
        b = lo + r * (hi - lo);
        fb = s(b);
      } else {
        hi = b;
        b = a;
        fb = fa;
        a = hi - r * (hi - lo);
        fa = s(a);
      }
      res.iterations = it + 1;
    }
    double x = fa > fb ? a : b;
    double v = std::max(fa, fb);
    if (bv > v) {
      v = bv;
      x = q * bi / (kGrid - 1);
    }
    res.Q_hat_star = Mat::Constant(1, 1, x);
    res.value = v;
    return res;
  }

  // Q_hat = W P W with 0 <= P <= I covers exactly 0 <= Q_hat <= Q
  const Mat W = psd_sqrt(pr.Q);
  const Mat I = Mat::Identity(d, d);
  auto value = [&](const Mat& P) { return slambda_gaussian(W * P * W, pr); };
  auto grad = [&](const Mat& P) {
    const Mat Qh = W * P * W;
    const Mat a1 = (pr.ch1.G * Qh * pr.ch1.G.transpose() + I).inverse();
    const Mat a2 = (pr.ch2.G * Qh * pr.ch2.G.transpose() + I).inverse();
    const Mat g = 0.5 * pr.ch1.G.transpose() * a1 * pr.ch1.G - 0.5 * pr.lambda * pr.ch2.G.transpose() * a2 * pr.ch2.G;
    const Mat gp = W * g * W;
    return Mat(0.5 * (gp + gp.transpose()));
  };
  std::vector<Mat> starts = {Mat::Zero(d, d), I, 0.5 * I};
  Rng rng(seed, 0x71a);
  for (int k = 0; k < 5; ++k) {
    Mat A(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) A(i, j) = rng.normal();
    starts.push_back(clip_unit(0.5 * (A + A.transpose())));
  }
  bool first = true;
  for (const Mat& s0 : starts) {
    Mat P = s0;
    double v = value(P);
    double step = 1.0;
    bool conv = false;
    int it = 0;
    for (; it < max_iters; ++it) {
      const Mat g = grad(P);
      bool moved = false;
      while (step > 1e-14) {
        const Mat Pn = clip_unit(P + step * g);
        const double vn = value(Pn);
        if (vn >= v + 1e-4 * (g.array() * (Pn - P).array()).sum()) {
          const double change = (Pn - P).norm();
          P = Pn;
          moved = change > 1e-13;
          v = vn;
          step = std::min(step * 2.0, 1e6);
          break;
        }
        step *= 0.5;
      }
      if (!moved) {
        conv = true;
        break;
      }
    }
    if (first || v > res.value) {
      res.value = v;
      res.Q_hat_star = W * P * W;
      res.iterations = it;
      res.converged = conv;
      first = false;
    }
  }
  return res;
}

FiniteVCandidate challenge_candidate(const ExtremalProblem& pr, std::uint64_t seed, std::size_t index) {
  const int d = pr.dim();
  Rng rng(seed, index);
  FiniteVCandidate c;
  const int K = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(support_cardinality(d))));
  double total = 0.0;
  for (int v = 0; v < K; ++v) {
    c.v_weights.push_back(rng.uniform(0.05, 1.0));
    total += c.v_weights.back();
  }
  for (auto& w : c.v_weights) w /= total;

  auto rand_vec = [&](double s) {
    Vec x(d);
    for (int i = 0; i < d; ++i) x(i) = s * rng.normal();
    return x;
  };
  auto rand_cov = [&]() {
    Mat A(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) A(i, j) = 0.7 * rng.normal();
    return Mat(A * A.transpose() + 0.01 * Mat::Identity(d, d));
  };
  for (int v = 0; v < K; ++v) {
    switch (rng.below(4)) {
      case 0: {
        const int n = 1 + static_cast<int>(rng.below(4));
        std::vector<Vec> pts;
        std::vector<double> w;
        for (int k = 0; k < n; ++k) {
          pts.push_back(rand_vec(1.0));
          w.push_back(rng.uniform(0.1, 1.0));
        }
        const double sw = std::accumulate(w.begin(), w.end(), 0.0);
        for (auto& x : w) x /= sw;
        c.conditional_inputs.push_back(Distribution::atoms(pts, w));
        break;
      }
      case 1:
        c.conditional_inputs.push_back(Distribution::gaussian(rand_vec(0.5), rand_cov()));
        break;
      case 2: {
        const double w = rng.uniform(0.1, 0.9);
        c.conditional_inputs.push_back(
            Distribution::mixture({Distribution::gaussian(rand_vec(1.0), rand_cov()),
                                   Distribution::gaussian(rand_vec(1.0), rand_cov())},
                                  {w, 1.0 - w}));
        break;
      }
      default: {
        const Vec a = rand_vec(1.0);
        c.conditional_inputs.push_back(Distribution::atoms({a, -a}, {0.5, 0.5}));
        break;
      }
    }
  }

  Mat S = Mat::Zero(d, d);
  for (int v = 0; v < K; ++v) S += c.v_weights[static_cast<std::size_t>(v)] * mean_cov(c.conditional_inputs[static_cast<std::size_t>(v)]).second();
  // largest scale keeping c^2 S <= Q, then a random fraction of it
  const Mat Wi = psd_sqrt(pr.Q).inverse();
  const double top = max_eigenvalue(Wi * S * Wi);
  const double scale = (top > 0.0 ? 1.0 / std::sqrt(top) : 1.0) * std::sqrt(rng.uniform(0.05, 1.0)) * (1.0 - 1e-12);
  for (auto& x : c.conditional_inputs) x = scaled(x, scale);
  return c;
}

ChallengeReport extremal_challenge(const ExtremalProblem& pr, std::size_t n_candidates, std::uint64_t seed,
                                   double tol) {
  pr.validate();
  if (!(min_eigenvalue(pr.Q) > 0.0)) throw std::invalid_argument("challenge needs a positive definite cap Q");
  ChallengeReport rep;
  rep.optimum = vlambda_gaussian(pr, seed);
  rep.cap = slambda_cap(pr);
  rep.tol = tol;
  rep.candidates = n_candidates;
  rep.rows.resize(n_candidates);
  parallel_for(n_candidates, [&](std::size_t i) {
    const FiniteVCandidate c = challenge_candidate(pr, seed, i);
    validate_candidate(c, pr);
    ChallengeRow row;
    row.index = i;
    row.letters = static_cast<int>(c.v_weights.size());
    row.value = slambda(c, pr);
    row.gap = row.value - rep.optimum.value;
    rep.rows[i] = row;
  });
  rep.max_value = -std::numeric_limits<double>::infinity();
  rep.max_gap = -std::numeric_limits<double>::infinity();
  for (const auto& row : rep.rows) {
    if (row.gap > tol) ++rep.violations;
    if (row.value > rep.max_value) {
      rep.max_value = row.value;
      rep.max_gap = row.gap;
      rep.argmax = row.index;
    }
  }
  return rep;
}

HighProbSet high_prob_set(const std::vector<double>& v_weights, double gamma, double lambda, int d) {
  if (!(lambda > 1.0)) throw std::invalid_argument("high_prob_set: lambda must exceed 1");
  if (!(gamma > 0.0)) throw std::invalid_argument("high_prob_set: gamma must be positive");
  if (v_weights.empty()) throw std::invalid_argument("high_prob_set: empty alphabet");
  HighProbSet h;
  if (d <= 0) {
    d = 1;
    while (support_cardinality(d) < static_cast<int>(v_weights.size())) ++d;
  }
  h.d = d;
  h.threshold = std::sqrt(2.0 / (gamma * (lambda - 1.0)));
  double mass = 0.0;
  double pmin = 1.0;
  for (std::size_t v = 0; v < v_weights.size(); ++v) {
    if (v_weights[v] > h.threshold) {
      h.S.push_back(v);
      mass += v_weights[v];
      pmin = std::min(pmin, v_weights[v]);
    }
  }
  if (h.S.empty()) throw EmptyS("no letter has probability above sqrt(2/(gamma(lambda-1)))");
  h.pr_SxS = mass * mass;
  h.lower_bound = 1.0 - d * (d + 1.0) * h.threshold;
  h.min_pair_mass = pmin * pmin;
  h.bounds_hold = h.pr_SxS >= h.lower_bound - 1e-15 && h.min_pair_mass > 2.0 / (gamma * (lambda - 1.0));
  return h;
}

}  // namespace bernstab
