#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bernstab/distribution.hpp"
#include "bernstab/info.hpp"

namespace bernstab {

// Y = G X + Z, Z ~ N(0, Q_Z).
struct ChannelModel {
  Mat G;
  Mat Q_Z;

  static ChannelModel make(Mat G, Mat Q_Z);
  static ChannelModel scalar(double g, double noise_var = 1.0);
  int dim() const { return static_cast<int>(G.rows()); }
  Mat Q_prime() const;         // (G'G)^{-1}
  Mat equivalent_noise() const;  // G^{-1} Q_Z G^{-T}: the identity-gain form
  void validate() const;
};

struct P2PGap {
  double I_xy = 0.0;
  double gauss_cap = 0.0;
  double gap = 0.0;
};

P2PGap p2p_gap(const Distribution& X, const ChannelModel& ch, const std::optional<QuadratureSpec>& quad = std::nullopt);

struct DoublingAudit {
  double eps_sub = 0.0;
  double I_plus = 0.0;   // I(X+; Y+)
  double I_minus = 0.0;  // I(X-; Y-)
  double I_pm = 0.0;     // I(Y+; Y-) through the identity route
  double I_pm_direct = -1.0;  // joint quadrature, d = 1 only (-1 when skipped)
  double cf_gap = 0.0;
  double cf_radius = 0.0;
  double identity_lhs = -1.0;  // I(X1 X2; Y1 Y2), d = 1 only
  double identity_rhs = -1.0;  // I(X+ X-; Y+ Y-)
  double tol = 1e-6;
  bool mi_chain_holds = false;
  bool cf_chain_holds = false;
  bool identity_holds = true;
};

DoublingAudit doubling_audit(const Distribution& X, const ChannelModel& ch, double tol = 1e-6,
                             const std::optional<QuadratureSpec>& quad = std::nullopt);

struct ProductDegrade {
  double I_11_22 = 0.0;       // I(Y_{11,+}; Y_{22,-})
  double I_1p_2m = 0.0;       // I(Y_{1,+}; Y_{2,-})
  double I_tilde = 0.0;       // I(Y~+; Y~-)
  double I_1p_2m_alt = -1.0;  // identity route, equal noise covariances only
  double equality_tol = 1e-8;
  double inequality_tol = 1e-6;
  bool equality_holds = false;
  bool inequality_holds = false;
};

ProductDegrade product_degrade(const ChannelModel& ch1, const ChannelModel& ch2, const Distribution& X1,
                               const Distribution& X2);

// Broadcast channel Y_k = G_k X + Z_k with identity noise.
struct ExtremalProblem {
  double lambda = 2.0;
  Mat Q;
  ChannelModel ch1;
  ChannelModel ch2;
  int dim() const { return static_cast<int>(Q.rows()); }
  void validate() const;
};

struct FiniteVCandidate {
  std::vector<double> v_weights;
  std::vector<Distribution> conditional_inputs;
};

// Checks the alphabet bound and the covariance cap; throws CapExceeded.
void validate_candidate(const FiniteVCandidate& c, const ExtremalProblem& pr);

double slambda(const Distribution& X, const ExtremalProblem& pr);
double slambda(const FiniteVCandidate& c, const ExtremalProblem& pr);
double slambda_gaussian(const Mat& Q_hat, const ExtremalProblem& pr);
// 1/2 log det(Q'1 + Q'2) / det Q'1
double slambda_cap(const ExtremalProblem& pr);

struct VLambdaResult {
  Mat Q_hat_star;
  double value = 0.0;
  int iterations = 0;
  bool converged = true;
};

VLambdaResult vlambda_gaussian(const ExtremalProblem& pr, std::uint64_t seed = 0, int max_iters = 4000);

struct ChallengeRow {
  std::size_t index = 0;
  int letters = 0;
  double value = 0.0;
  double gap = 0.0;  // value - Gaussian optimum
};

struct ChallengeReport {
  VLambdaResult optimum;
  double cap = 0.0;
  double tol = 1e-4;
  std::size_t candidates = 0;
  std::size_t violations = 0;
  double max_value = 0.0;
  double max_gap = 0.0;
  std::size_t argmax = 0;
  std::vector<ChallengeRow> rows;
};

ChallengeReport extremal_challenge(const ExtremalProblem& pr, std::size_t n_candidates, std::uint64_t seed,
                                   double tol = 1e-4);

// The random candidate used by extremal_challenge for a given index.
FiniteVCandidate challenge_candidate(const ExtremalProblem& pr, std::uint64_t seed, std::size_t index);

struct HighProbSet {
  std::vector<std::size_t> S;
  double threshold = 0.0;  // sqrt(2 / (gamma (lambda - 1)))
  double pr_SxS = 0.0;
  double lower_bound = 0.0;  // 1 - d(d+1) threshold
  double min_pair_mass = 0.0;
  int d = 1;
  bool bounds_hold = false;
};

// d = 0 takes the smallest dimension whose support-lemma cardinality covers the alphabet.
HighProbSet high_prob_set(const std::vector<double>& v_weights, double gamma, double lambda, int d = 0);

}  // namespace bernstab
