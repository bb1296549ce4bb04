#include "bernstab/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "bernstab/errors.hpp"

namespace bernstab {

namespace {

void check_weights(const std::vector<double>& w, const char* what) {
  if (w.empty()) throw InvalidDistribution(std::string(what) + ": no weights");
  double s = 0.0;
  for (double x : w) {
    if (!(x >= 0.0)) throw InvalidDistribution(std::string(what) + ": negative or NaN weight");
    s += x;
  }
  if (std::abs(s - 1.0) > 1e-12)
    throw InvalidDistribution(std::string(what) + ": weights sum to " + std::to_string(s));
}

template <class T>
std::shared_ptr<const DistNode> make_node(T&& alt) {
  return std::make_shared<const DistNode>(DistNode{std::forward<T>(alt)});
}

}  // namespace

Distribution Distribution::gaussian(Vec mean, Mat cov) {
  const int d = static_cast<int>(mean.size());
  if (cov.rows() != d || cov.cols() != d) throw DimensionMismatch("gaussian: cov is not d x d");
  if (!mean.allFinite() || !cov.allFinite()) throw InvalidDistribution("gaussian: non-finite entry");
  if (!is_symmetric(cov, 1e-12)) throw InvalidDistribution("gaussian: covariance not symmetric");
  Mat q = psd_clip(cov, 1e-10);
  return Distribution(make_node(Gaussian{std::move(mean), std::move(q)}), d);
}

Distribution Distribution::atoms(std::vector<Vec> points, std::vector<double> weights) {
  if (points.empty() || points.size() != weights.size())
    throw InvalidDistribution("atoms: points and weights differ in length");
  const int d = static_cast<int>(points.front().size());
  for (const auto& p : points) {
    if (p.size() != d) throw DimensionMismatch("atoms: inconsistent point dimension");
    if (!p.allFinite()) throw InvalidDistribution("atoms: non-finite point");
  }
  check_weights(weights, "atoms");
  return Distribution(make_node(Atoms{std::move(points), std::move(weights)}), d);
}

Distribution Distribution::mixture(std::vector<Distribution> components, std::vector<double> weights) {
  if (components.empty() || components.size() != weights.size())
    throw InvalidDistribution("mixture: components and weights differ in length");
  const int d = components.front().dim();
  for (const auto& c : components)
    if (c.dim() != d) throw DimensionMismatch("mixture: inconsistent component dimension");
  check_weights(weights, "mixture");
  return Distribution(make_node(Mixture{std::move(components), std::move(weights)}), d);
}

Distribution Distribution::affine(Mat matrix, Vec offset, Distribution base) {
  if (matrix.cols() != base.dim()) throw DimensionMismatch("affine: matrix columns != base dimension");
  if (offset.size() != matrix.rows()) throw DimensionMismatch("affine: offset length != matrix rows");
  if (!matrix.allFinite() || !offset.allFinite()) throw InvalidDistribution("affine: non-finite entry");
  // A(Bx + c) + b = (AB)x + (Ac + b)
  if (const auto* inner = std::get_if<Affine>(&base.node().v)) {
    Mat m = matrix * inner->matrix;
    Vec o = matrix * inner->offset + offset;
    return affine(std::move(m), std::move(o), inner->base);
  }
  const int k = static_cast<int>(matrix.rows());
  return Distribution(make_node(Affine{std::move(matrix), std::move(offset), std::move(base)}), k);
}

Distribution Distribution::indep_sum(Distribution left, Distribution right) {
  if (left.dim() != right.dim()) throw DimensionMismatch("indep_sum: dimensions differ");
  const int d = left.dim();
  return Distribution(make_node(IndepSum{std::move(left), std::move(right)}), d);
}

Distribution Distribution::gaussian1(double mean, double var) {
  return gaussian(Vec::Constant(1, mean), Mat::Constant(1, 1, var));
}

Distribution Distribution::atoms1(const std::vector<double>& points, const std::vector<double>& weights) {
  std::vector<Vec> p;
  p.reserve(points.size());
  for (double x : points) p.push_back(Vec::Constant(1, x));
  return atoms(std::move(p), weights);
}

Moments mean_cov(const Distribution& dist) {
  const int d = dist.dim();
  return std::visit(
      [d](const auto& n) -> Moments {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Gaussian>) {
          return {n.mean, n.cov};
        } else if constexpr (std::is_same_v<T, Atoms>) {
          Vec m = Vec::Zero(d);
          for (std::size_t i = 0; i < n.points.size(); ++i) m += n.weights[i] * n.points[i];
          Mat q = Mat::Zero(d, d);
          for (std::size_t i = 0; i < n.points.size(); ++i) {
            const Vec c = n.points[i] - m;
            q += n.weights[i] * c * c.transpose();
          }
          return {m, q};
        } else if constexpr (std::is_same_v<T, Mixture>) {
          // law of total covariance
          std::vector<Moments> parts;
          Vec m = Vec::Zero(d);
          for (std::size_t i = 0; i < n.components.size(); ++i) {
            parts.push_back(mean_cov(n.components[i]));
            m += n.weights[i] * parts.back().mean;
          }
          Mat q = Mat::Zero(d, d);
          for (std::size_t i = 0; i < parts.size(); ++i) {
            const Vec c = parts[i].mean - m;
            q += n.weights[i] * (parts[i].cov + c * c.transpose());
          }
          return {m, q};
        } else if constexpr (std::is_same_v<T, Affine>) {
          const Moments b = mean_cov(n.base);
          return {n.matrix * b.mean + n.offset, n.matrix * b.cov * n.matrix.transpose()};
        } else {
          const Moments a = mean_cov(n.left);
          const Moments b = mean_cov(n.right);
          return {a.mean + b.mean, a.cov + b.cov};
        }
      },
      dist.node().v);
}

double l1_moment_bound(const Distribution& dist) {
  const Moments m = mean_cov(dist);
  double s = 0.0;
  for (int i = 0; i < dist.dim(); ++i) s += std::sqrt(std::max(0.0, m.cov(i, i) + m.mean(i) * m.mean(i)));
  return s;
}

Distribution smooth(const Distribution& dist, const Mat& noise_cov) {
  if (noise_cov.rows() != dist.dim() || noise_cov.cols() != dist.dim())
    throw DimensionMismatch("smooth: noise covariance dimension");
  if (!is_symmetric(noise_cov, 1e-12) || min_eigenvalue(noise_cov) <= 0.0)
    throw DegenerateNoise("smoothing noise must be positive definite");
  return Distribution::indep_sum(dist, Distribution::gaussian(Vec::Zero(dist.dim()), noise_cov));
}

Distribution shifted(const Distribution& dist, const Vec& a) {
  return Distribution::affine(Mat::Identity(dist.dim(), dist.dim()), a, dist);
}

bool is_gaussian(const Distribution& dist) {
  return std::visit(
      [](const auto& n) -> bool {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Gaussian>) {
          return true;
        } else if constexpr (std::is_same_v<T, Atoms>) {
          return n.points.size() == 1;
        } else if constexpr (std::is_same_v<T, Mixture>) {
          return n.components.size() == 1 && is_gaussian(n.components.front());
        } else if constexpr (std::is_same_v<T, Affine>) {
          return is_gaussian(n.base);
        } else {
          return is_gaussian(n.left) && is_gaussian(n.right);
        }
      },
      dist.node().v);
}

// ---------------------------------------------------------------------------

namespace {

bool close(double a, double b) { return std::abs(a - b) <= 1e-13 * (1.0 + std::abs(a) + std::abs(b)); }

bool same_component(const GaussianComponent& a, const GaussianComponent& b) {
  for (Eigen::Index i = 0; i < a.mean.size(); ++i)
    if (!close(a.mean(i), b.mean(i))) return false;
  for (Eigen::Index i = 0; i < a.cov.size(); ++i)
    if (!close(a.cov.data()[i], b.cov.data()[i])) return false;
  return true;
}

bool lex_less(const GaussianComponent& a, const GaussianComponent& b) {
  for (Eigen::Index i = 0; i < a.mean.size(); ++i)
    if (a.mean(i) != b.mean(i)) return a.mean(i) < b.mean(i);
  for (Eigen::Index i = 0; i < a.cov.size(); ++i)
    if (a.cov.data()[i] != b.cov.data()[i]) return a.cov.data()[i] < b.cov.data()[i];
  return false;
}

GaussianMixture merge(GaussianMixture mix) {
  std::stable_sort(mix.begin(), mix.end(), lex_less);
  GaussianMixture out;
  for (auto& c : mix) {
    if (c.weight <= 0.0) continue;
    if (!out.empty() && same_component(out.back(), c))
      out.back().weight += c.weight;
    else
      out.push_back(std::move(c));
  }
  return out;
}

GaussianMixture flatten(const Distribution& dist, std::size_t cap) {
  const int d = dist.dim();
  return std::visit(
      [&](const auto& n) -> GaussianMixture {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Gaussian>) {
          return {{1.0, n.mean, n.cov}};
        } else if constexpr (std::is_same_v<T, Atoms>) {
          GaussianMixture m;
          for (std::size_t i = 0; i < n.points.size(); ++i) m.push_back({n.weights[i], n.points[i], Mat::Zero(d, d)});
          return merge(std::move(m));
        } else if constexpr (std::is_same_v<T, Mixture>) {
          GaussianMixture m;
          for (std::size_t i = 0; i < n.components.size(); ++i)
            for (auto& c : flatten(n.components[i], cap)) {
              c.weight *= n.weights[i];
              m.push_back(std::move(c));
            }
          return merge(std::move(m));
        } else if constexpr (std::is_same_v<T, Affine>) {
          GaussianMixture m = flatten(n.base, cap);
          for (auto& c : m) {
            c.mean = n.matrix * c.mean + n.offset;
            c.cov = n.matrix * c.cov * n.matrix.transpose();
          }
          return merge(std::move(m));
        } else {
          const GaussianMixture a = flatten(n.left, cap);
          const GaussianMixture b = flatten(n.right, cap);
          if (a.size() * b.size() > cap) throw NoDensity("mixture expansion exceeds component cap");
          GaussianMixture m;
          m.reserve(a.size() * b.size());
          for (const auto& x : a)
            for (const auto& y : b) m.push_back({x.weight * y.weight, x.mean + y.mean, x.cov + y.cov});
          return merge(std::move(m));
        }
      },
      dist.node().v);
}

}  // namespace

GaussianMixture to_gaussian_mixture(const Distribution& dist, std::size_t max_components) {
  GaussianMixture m = flatten(dist, max_components);
  double s = 0.0;
  for (const auto& c : m) s += c.weight;
  for (auto& c : m) c.weight /= s;
  return m;
}

MixtureDensity::MixtureDensity(const GaussianMixture& mix) {
  if (mix.empty()) throw NoDensity("empty mixture");
  dim_ = static_cast<int>(mix.front().mean.size());
  const int d = dim_;
  if (d > 16) throw NoDensity("density evaluation supports d <= 16");
  for (const auto& c : mix) {
    const double scale = std::max(1e-300, c.cov.cwiseAbs().maxCoeff());
    if (c.cov.size() == 0 || min_eigenvalue(c.cov) <= 1e-12 * scale)
      throw NoDensity("mixture has a degenerate component; smooth the law first");
    Eigen::LLT<Mat> llt(c.cov);
    if (llt.info() != Eigen::Success) throw NoDensity("component covariance not positive definite");
    const Mat l = llt.matrixL();
    const Mat li = l.triangularView<Eigen::Lower>().solve(Mat::Identity(d, d));
    double logdet_l = 0.0;
    for (int i = 0; i < d; ++i) logdet_l += std::log(l(i, i));
    log_norm_.push_back(std::log(c.weight) - 0.5 * d * std::log(2.0 * kPi) - logdet_l);
    for (int i = 0; i < d; ++i) means_.push_back(c.mean(i));
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) linv_.push_back(li(i, j));
    weights_.push_back(c.weight);
    covs_.push_back(c.cov);
    mean_vecs_.push_back(c.mean);
  }
}

double MixtureDensity::log_pdf(const double* y) const {
  const int d = dim_;
  const std::size_t k = weights_.size();
  double best = -std::numeric_limits<double>::infinity();
  // two passes: max exponent, then shifted sum
  thread_local std::vector<double> ex;
  ex.resize(k);
  double diff[16];
  for (std::size_t c = 0; c < k; ++c) {
    const double* m = &means_[c * d];
    const double* li = &linv_[c * d * d];
    for (int i = 0; i < d; ++i) diff[i] = y[i] - m[i];
    double q = 0.0;
    for (int i = 0; i < d; ++i) {
      double s = 0.0;
      for (int j = 0; j <= i; ++j) s += li[i * d + j] * diff[j];
      q += s * s;
    }
    ex[c] = log_norm_[c] - 0.5 * q;
    best = std::max(best, ex[c]);
  }
  if (!std::isfinite(best)) return best;
  double s = 0.0;
  for (std::size_t c = 0; c < k; ++c) s += std::exp(ex[c] - best);
  return best + std::log(s);
}

Vec MixtureDensity::mean() const {
  Vec m = Vec::Zero(dim_);
  for (std::size_t c = 0; c < weights_.size(); ++c) m += weights_[c] * mean_vecs_[c];
  return m;
}

Mat MixtureDensity::cov() const {
  const Vec m = mean();
  Mat q = Mat::Zero(dim_, dim_);
  for (std::size_t c = 0; c < weights_.size(); ++c) {
    const Vec e = mean_vecs_[c] - m;
    q += weights_[c] * (covs_[c] + e * e.transpose());
  }
  return q;
}

double density(const Distribution& dist, const Vec& y) {
  if (y.size() != dist.dim()) throw DimensionMismatch("density: point dimension");
  return MixtureDensity(dist).pdf(y);
}

}  // namespace bernstab
