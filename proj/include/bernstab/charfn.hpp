#pragma once

#include <cstddef>
#include <vector>

#include "bernstab/distribution.hpp"
#include "bernstab/linalg.hpp"

namespace bernstab {

// Characteristic function compiled into a product of Gaussian-mixture
// factors, each evaluated at a linear image of t:
//   f(t) = exp(j o't) * prod_k sum_c w_kc exp(j mu_kc' P_k t - 1/2 (P_k t)' S_kc (P_k t))
class CompiledCF {
 public:
  explicit CompiledCF(const Distribution& dist);

  int dim() const { return dim_; }
  cplx operator()(const double* t) const;
  cplx operator()(const Vec& t) const { return (*this)(t.data()); }

 private:
  struct Factor {
    int dim = 0;
    Mat proj;                     // dim x d
    bool identity = false;        // proj is the d x d identity
    bool atomic = true;           // all component covariances vanish
    std::vector<double> weights;
    std::vector<double> means;    // K*dim
    std::vector<double> covs;     // K*dim*dim
  };
  void add(const Distribution& dist, const Mat& proj);

  int dim_ = 0;
  Vec offset_;
  std::vector<Factor> factors_;
};

cplx cf_eval(const Distribution& dist, const Vec& t);

// Joint c.f. of a pair at (t1, t2). Independent pairs factor exactly.
class CompiledJointCF {
 public:
  explicit CompiledJointCF(const JointPair& pair);
  int d1() const { return d1_; }
  int d2() const { return d2_; }
  cplx operator()(const double* t1, const double* t2) const;

 private:
  int d1_ = 0;
  int d2_ = 0;
  bool independent_ = false;
  std::vector<CompiledCF> parts_;  // either {x1, x2} or {joint}
};

cplx joint_cf_eval(const JointPair& pair, const Vec& t1, const Vec& t2);

// ln f(t) on the branch continuous along the segment 0 -> t.
cplx second_cf(const Distribution& dist, const Vec& t, int ray_steps = 256);

inline constexpr double kBranchFloor = 1e-8;

// Tensor grid on [-T, T]^d restricted to the 1-norm ball of radius T.
// Axis values are T*(k-h)/h with h = (n-1)/2, so 0 is always a node;
// points are stored row-major in lexicographic order.
struct BallGrid {
  int dim = 0;
  double T = 0.0;
  int n = 0;
  double spacing = 0.0;
  std::vector<double> coords;  // size() * dim
  std::size_t size() const { return dim == 0 ? 0 : coords.size() / static_cast<std::size_t>(dim); }
  const double* point(std::size_t i) const { return coords.data() + i * static_cast<std::size_t>(dim); }
  Vec vec(std::size_t i) const { return Eigen::Map<const Vec>(point(i), dim); }
};

BallGrid ball_grid(int dim, double T, int n);

struct CFGrid {
  BallGrid grid;
  std::vector<cplx> values;
};

CFGrid cf_grid(const Distribution& dist, double T, int n);

struct DependenceReport {
  double epsilon_hat = 0.0;
  double T = 0.0;
  int n = 0;
  double spacing = 0.0;
  Vec witness_t1;
  Vec witness_t2;
  bool robust = false;
  // Lipschitz allowance: epsilon_hat + pad bounds the sup over the ball
  double pad = 0.0;
  double excluded_fraction = 0.0;
  std::size_t grid_points = 0;  // |grid1| * |grid2|
};

DependenceReport dependence_sup(const JointPair& pair, double T, int n);
DependenceReport robust_dependence_sup(const JointPair& pair, double T, int n, double floor);

struct DecayCertificate {
  double c = 0.0;
  double T = 0.0;
};

// Largest c with |f(t)| <= 1 - c ||t||_1^2 on the audit grid of radius T,
// starting at T_max and halving T until c >= 1e-6.
DecayCertificate decay_certificate(const Distribution& dist, double T_max, int n_audit = 0);

}  // namespace bernstab
