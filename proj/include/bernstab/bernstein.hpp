#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bernstab/charfn.hpp"
#include "bernstab/distribution.hpp"
#include "bernstab/info.hpp"

namespace bernstab {

struct StabilityBudget {
  int d = 1;
  double p = 1.0;
  double T = 0.0;
  double epsilon = 0.0;
  double delta = 0.0;
  double phi_t0_abs = 0.0;
  double C_eps = 0.0;
  double eps_threshold = 0.0;
  std::vector<double> C_k;  // C_0 = C_eps, stopped at the first non-increase or k = 64
  int k_star = -1;          // first k with (2|Phi(2^{k-1} t0)| + C_{k-1})^3 <= 1/2; -1 if none
  double C_tilde = 0.0;     // sup_k C_k / (epsilon + 4 delta)
  double C_tilde_at_one = 0.0;
  bool converged = false;
  // filled by entropy_bounds
  double B1 = 0.0, B2 = 0.0, B3 = 0.0, B4 = 0.0, B = 0.0;

  double effective_epsilon() const { return epsilon + 4.0 * delta; }
  double certified_gap() const { return C_tilde * effective_epsilon(); }
};

double surrogate_error_constant(int d, double p, double eps);  // 720 d^2 (d+1) eps / p^4
double surrogate_threshold(int d, double p);                    // p^4 / (360 d^2 (d+1))

StabilityBudget budget(int d, double p, double T, double epsilon, double delta, double phi_t0_abs);

// The doubling recursion itself, 64 terms, starting from C_0 at epsilon.
std::vector<double> doubling_sequence(int d, double p, double eps, double phi_t0_abs, int terms = 64);

struct Lemma3Report {
  double max_residual = 0.0;
  double epsilon_hat = 0.0;
  double pad = 0.0;
  double bound = 0.0;  // 5 (epsilon_hat + pad)
  double slack = 0.0;
  std::size_t grid_points = 0;
  bool holds = false;
};

// |f_i(2t) - f_i(t)^2 |f_i(t)|^2| on the ball grid, against 5x the measured
// dependence of (X1+X2, X1-X2).
Lemma3Report lemma3_audit(const JointPair& pair, double T, int n = 0);

struct FitOptions {
  int n_dep = 0;    // dependence grid per axis (0: by dimension)
  int n_p = 0;      // grid for the modulus floor
  int n_audit = 0;  // grid for the T/2 audit
  int n_probe = 512;
  std::uint64_t seed = 0;
  // used as a floor for the measured dependence
  std::optional<double> epsilon_override;
};

struct GaussianSurrogate {
  int d = 1;
  Vec m_hat_1;
  Vec m_hat_2;
  Mat Q_hat;
  Mat Q_tilde_R;
  double valid_radius = 0.0;
  double certified_gap = 0.0;  // C(eps) relative to |Phi| on the valid ball

  double T = 0.0;
  double p = 0.0;
  double p_grid = 0.0;
  double p_pad = 0.0;
  double epsilon = 0.0;      // used
  double epsilon_hat = 0.0;  // measured on the sum/difference pair
  double delta = 0.0;        // input dependence (coupled inputs only)
  double eps_threshold = 0.0;
  double shift = 0.0;
  DependenceReport dependence;
  double theta_bilinear = 0.0;
  double theta_linear_1 = 0.0;
  double theta_linear_2 = 0.0;
  int null_directions = 0;
  double audit_max_ratio = 0.0;  // max |f - Phi| / |Phi|
  double audit_max_abs = 0.0;
  std::size_t audit_points = 0;

  cplx phi(int i, const Vec& t) const;
};

GaussianSurrogate fit_surrogate(const Distribution& X1, const Distribution& X2, double T, const FitOptions& opt = {});
// Dependent inputs: epsilon is replaced by epsilon + 4 delta, delta measured at radius 2T.
GaussianSurrogate fit_surrogate(const JointPair& inputs, double T, const FitOptions& opt = {});

struct ShellAudit {
  int k = 0;
  double r_lo = 0.0;
  double r_hi = 0.0;
  double bound = 0.0;
  double max_residual = 0.0;
  std::size_t points = 0;
  bool ok = false;
};

struct ExtensionOptions {
  int shells = 8;
  int directions = 64;
  int radii = 16;
  std::uint64_t seed = 0;
};

struct ExtensionReport {
  Vec t0;
  double phi_t0_abs = 0.0;
  StabilityBudget budget;
  double certified_gap = 0.0;  // C_tilde (eps + 4 delta)
  std::vector<ShellAudit> shells;
  int failures = 0;
};

ExtensionReport extend_unbounded(const GaussianSurrogate& s, const Distribution& X1, const Distribution& X2,
                                 const ExtensionOptions& opt = {});

struct EntropyMoments {
  int d = 1;
  double lambda_z_min = 1.0;
  double second_moment = 0.0;  // max_i E||Y_i||_2^2
  double fourth_moment = 0.0;  // sup_u E|u'Y_g|^4 over unit u
  double density_peak = 0.0;   // max_i det(2 pi Q_Zi)^{-1/2}
};

struct EntropyBounds {
  double x = 0.0;  // the sup c.f. error the bounds are evaluated at
  double B1 = 0.0, T2 = 0.0, B2 = 0.0, B3 = 0.0, B4 = 0.0, B = 0.0;
  double c1 = 0.0, c2 = 0.0, m = 0.0, nu = 0.0;
};

double entropy_B1(double x, int d, double lambda_z_min);
// Throws HypothesisFailed unless x < 1 - exp(-lambda_z_min / 2).
EntropyBounds entropy_bounds(double x, const EntropyMoments& mom);
// Uses budget.certified_gap() and writes B1..B4, B into the budget.
EntropyBounds entropy_bounds(StabilityBudget& b, const EntropyMoments& mom);

struct EntropyAuditOptions {
  int n_global = 0;  // dependence grid at the global radius
  FitOptions fit;
  ExtensionOptions extension;
  std::optional<QuadratureSpec> quad;
};

struct EntropyAuditReport {
  bool applicable = false;
  std::string reason;
  double R = 0.0;
  double epsilon_global = 0.0;
  double tail = 0.0;
  double T = 0.0;
  GaussianSurrogate surrogate;
  ExtensionReport extension;
  EntropyMoments moments;
  EntropyBounds bounds;
  double h_Y1 = 0.0, h_Y2 = 0.0;
  double h_G1 = 0.0, h_G2 = 0.0;
  double gap1 = 0.0, gap2 = 0.0;
  double psd_slack1 = 0.0, psd_slack2 = 0.0;  // min eigenvalue of E[YY'] + B I - E[Y_g Y_g']
  bool holds = false;
};

EntropyAuditReport entropy_stability_audit(const Distribution& X1, const Distribution& X2, const Mat& Q_Z1,
                                           const Mat& Q_Z2, const EntropyAuditOptions& opt = {});

}  // namespace bernstab
