#include "bernstab/linalg.hpp"

#include <cmath>

#include "bernstab/errors.hpp"

namespace bernstab {

Mat psd_clip(const Mat& q, double tol) {
  if (q.rows() != q.cols()) throw DimensionMismatch("covariance must be square");
  if (q.size() == 0) return q;
  const Mat s = 0.5 * (q + q.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(s);
  Vec ev = es.eigenvalues();
  bool clipped = false;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) < -tol)
      throw InvalidDistribution("matrix has eigenvalue " + std::to_string(ev(i)) +
                                " below -" + std::to_string(tol));
    if (ev(i) < 0.0) {
      ev(i) = 0.0;
      clipped = true;
    }
  }
  if (!clipped) return s;
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

bool is_symmetric(const Mat& q, double tol) {
  if (q.rows() != q.cols()) return false;
  return (q - q.transpose()).cwiseAbs().maxCoeff() <= tol * std::max(1.0, q.cwiseAbs().maxCoeff());
}

double min_eigenvalue(const Mat& q) {
  if (q.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (q + q.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double max_eigenvalue(const Mat& q) {
  if (q.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (q + q.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

Mat psd_sqrt(const Mat& q) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (q + q.transpose()));
  Vec ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

double log_det_spd(const Mat& q) {
  Eigen::LLT<Mat> llt(0.5 * (q + q.transpose()));
  if (llt.info() != Eigen::Success) throw Degenerate("matrix is not positive definite");
  const Mat& l = llt.matrixL();
  double s = 0.0;
  for (Eigen::Index i = 0; i < q.rows(); ++i) s += std::log(l(i, i));
  return 2.0 * s;
}

double condition_number(const Mat& a) {
  Eigen::JacobiSVD<Mat> svd(a);
  const Vec& sv = svd.singularValues();
  if (sv.size() == 0) return 1.0;
  const double lo = sv(sv.size() - 1);
  if (lo <= 0.0) return std::numeric_limits<double>::infinity();
  return sv(0) / lo;
}

double l1_norm(const Vec& v) { return v.cwiseAbs().sum(); }

double pairwise_sum(const double* x, std::size_t n) {
  if (n <= 16) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise_sum(x, h) + pairwise_sum(x + h, n - h);
}

}  // namespace bernstab
