#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace bernstab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

inline constexpr double kPi = 3.14159265358979323846;

// Eigenvalues at or above -tol are clipped to zero; anything more negative throws.
Mat psd_clip(const Mat& q, double tol = 1e-10);

// Symmetric check used for covariance validation.
bool is_symmetric(const Mat& q, double tol = 1e-12);

double min_eigenvalue(const Mat& q);
double max_eigenvalue(const Mat& q);

// Principal square root of a PSD matrix.
Mat psd_sqrt(const Mat& q);

// log det of a symmetric positive definite matrix (Cholesky). Throws if not PD.
double log_det_spd(const Mat& q);

// 2-norm condition number via singular values.
double condition_number(const Mat& a);

double l1_norm(const Vec& v);

// Stable sums with a fixed evaluation order.
class NeumaierSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

double pairwise_sum(const double* x, std::size_t n);

}  // namespace bernstab
