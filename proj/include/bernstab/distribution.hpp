#pragma once

#include <cmath>
#include <memory>
#include <variant>
#include <vector>

#include "bernstab/linalg.hpp"

namespace bernstab {

struct DistNode;

// Immutable handle to a d-dimensional law built from the five constructors
// below. Copies share the underlying node.
class Distribution {
 public:
  static Distribution gaussian(Vec mean, Mat cov);
  static Distribution atoms(std::vector<Vec> points, std::vector<double> weights);
  static Distribution mixture(std::vector<Distribution> components, std::vector<double> weights);
  static Distribution affine(Mat matrix, Vec offset, Distribution base);
  static Distribution indep_sum(Distribution left, Distribution right);

  // scalar conveniences
  static Distribution gaussian1(double mean, double var);
  static Distribution atoms1(const std::vector<double>& points, const std::vector<double>& weights);

  int dim() const { return dim_; }
  const DistNode& node() const { return *node_; }

 private:
  Distribution(std::shared_ptr<const DistNode> node, int dim) : node_(std::move(node)), dim_(dim) {}
  std::shared_ptr<const DistNode> node_;
  int dim_ = 0;
};

struct Gaussian {
  Vec mean;
  Mat cov;
};
struct Atoms {
  std::vector<Vec> points;
  std::vector<double> weights;
};
struct Mixture {
  std::vector<Distribution> components;
  std::vector<double> weights;
};
struct Affine {
  Mat matrix;  // k x d
  Vec offset;  // k
  Distribution base;
};
struct IndepSum {
  Distribution left;
  Distribution right;
};

struct DistNode {
  std::variant<Gaussian, Atoms, Mixture, Affine, IndepSum> v;
};

struct Moments {
  Vec mean;
  Mat cov;
  Mat second() const { return cov + mean * mean.transpose(); }
};

Moments mean_cov(const Distribution& dist);

// E||X||_1 bounded through second moments: sum_i sqrt(E X_i^2).
double l1_moment_bound(const Distribution& dist);

// X + Z with Z ~ N(0, noise_cov) independent of X.
Distribution smooth(const Distribution& dist, const Mat& noise_cov);

// Translate a law by a.
Distribution shifted(const Distribution& dist, const Vec& a);

bool is_gaussian(const Distribution& dist);

// Flattened Gaussian-mixture form. Atoms become zero-covariance components.
struct GaussianComponent {
  double weight;
  Vec mean;
  Mat cov;
};
using GaussianMixture = std::vector<GaussianComponent>;

GaussianMixture to_gaussian_mixture(const Distribution& dist, std::size_t max_components = 1u << 18);

// Closed-form density of a Gaussian mixture whose components are all
// non-degenerate. Throws NoDensity otherwise.
class MixtureDensity {
 public:
  explicit MixtureDensity(const GaussianMixture& mix);
  explicit MixtureDensity(const Distribution& dist) : MixtureDensity(to_gaussian_mixture(dist)) {}

  int dim() const { return dim_; }
  std::size_t size() const { return weights_.size(); }
  double log_pdf(const double* y) const;
  double pdf(const double* y) const { return std::exp(log_pdf(y)); }
  double pdf(const Vec& y) const { return pdf(y.data()); }

  // Single component: the law is Gaussian with this mean/cov.
  bool single_gaussian() const { return weights_.size() == 1; }
  const Mat& first_cov() const { return covs_.front(); }
  const Mat& component_cov(std::size_t i) const { return covs_[i]; }
  const Vec& component_mean(std::size_t i) const { return mean_vecs_[i]; }
  Vec mean() const;
  Mat cov() const;

 private:
  int dim_ = 0;
  std::vector<double> log_norm_;  // log w - d/2 log 2pi - log det L
  std::vector<double> means_;     // K*d
  std::vector<double> linv_;      // K*d*d, inverse Cholesky factors, row-major lower
  std::vector<double> weights_;
  std::vector<Mat> covs_;
  std::vector<Vec> mean_vecs_;
};

double density(const Distribution& dist, const Vec& y);

// ---------------------------------------------------------------------------
// Pairs of random vectors.

struct PairNode;

class JointPair {
 public:
  static JointPair independent(Distribution x1, Distribution x2);
  // points are (d1+d2)-vectors; the first d1 coordinates belong to X1
  static JointPair coupled_atoms(std::vector<Vec> points, std::vector<double> weights, int d1);
  // rows [0, d1_out) of matrix give the first output block
  static JointPair linear_image(Mat matrix, int d1_out, JointPair base);
  // any joint law of dimension d1+d2
  static JointPair joint_law(Distribution law, int d1);

  int d1() const { return d1_; }
  int d2() const { return d2_; }
  const PairNode& node() const { return *node_; }

 private:
  JointPair(std::shared_ptr<const PairNode> node, int d1, int d2)
      : node_(std::move(node)), d1_(d1), d2_(d2) {}
  std::shared_ptr<const PairNode> node_;
  int d1_ = 0;
  int d2_ = 0;
};

struct IndependentPair {
  Distribution x1;
  Distribution x2;
};
struct CoupledAtoms {
  std::vector<Vec> points;
  std::vector<double> weights;
};
struct LinearImage {
  Mat matrix;
  JointPair base;
};
struct JointLaw {
  Distribution law;
};

struct PairNode {
  std::variant<IndependentPair, CoupledAtoms, LinearImage, JointLaw> v;
};

// The (d1+d2)-dimensional law of the stacked pair.
Distribution joint_distribution(const JointPair& pair);
Distribution marginal1(const JointPair& pair);
Distribution marginal2(const JointPair& pair);

// ((X1+X2)/sqrt2, (X1-X2)/sqrt2)
JointPair doubled(const JointPair& pair);
// (X1+X2, X1-X2), the unnormalized map
JointPair sum_difference(const JointPair& pair);

// (X1+Z1, X2+Z2) with independent Gaussian noises.
JointPair smooth_pair(const JointPair& pair, const Mat& noise1, const Mat& noise2);

}  // namespace bernstab
