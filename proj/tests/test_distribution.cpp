#include <doctest.h>

#include <cmath>
#include <map>

#include "bernstab/distribution.hpp"
#include "bernstab/errors.hpp"
#include "bernstab/experiment.hpp"
#include "bernstab/linalg.hpp"

using namespace bernstab;

namespace {

Mat m2(double a, double b, double c, double d) {
  Mat m(2, 2);
  m << a, b, c, d;
  return m;
}

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

// aggregate the atom weights of a mixture by location (d = 1)
std::map<long long, double> atom_masses(const Distribution& d) {
  std::map<long long, double> out;
  for (const auto& c : to_gaussian_mixture(d)) out[std::llround(c.mean(0) * 1e9)] += c.weight;
  return out;
}

}  // namespace

TEST_SUITE("distributions") {
  TEST_CASE("mean_cov of a Gaussian returns its parameters") {
    const Vec m = v2(0.3, -1.2);
    const Mat Q = m2(2.0, 0.4, 0.4, 1.0);
    const Moments mo = mean_cov(Distribution::gaussian(m, Q));
    CHECK((mo.mean - m).norm() < 1e-15);
    CHECK((mo.cov - Q).norm() < 1e-15);
  }

  TEST_CASE("mean_cov of BPSK is (0, 1)") {
    const Moments mo = mean_cov(Distribution::atoms1({-1.0, 1.0}, {0.5, 0.5}));
    CHECK(std::abs(mo.mean(0)) < 1e-15);
    CHECK(std::abs(mo.cov(0, 0) - 1.0) < 1e-15);
  }

  TEST_CASE("independent covariances add") {
    const Mat Q1 = m2(1.0, 0.2, 0.2, 0.5), Q2 = m2(0.3, -0.1, -0.1, 2.0);
    const auto s = Distribution::indep_sum(Distribution::gaussian(Vec::Zero(2), Q1), Distribution::gaussian(Vec::Zero(2), Q2));
    const Moments mo = mean_cov(s);
    CHECK(mo.mean.norm() < 1e-15);
    CHECK((mo.cov - (Q1 + Q2)).norm() < 1e-14);
  }

  TEST_CASE("affine and mixture moments match hand computation") {
    // X = 0.3 N(1, 1) + 0.7 delta_{-2}; Y = 2X + 1
    const auto X = Distribution::mixture({Distribution::gaussian1(1.0, 1.0), Distribution::atoms1({-2.0}, {1.0})}, {0.3, 0.7});
    const auto Y = Distribution::affine(Mat::Constant(1, 1, 2.0), Vec::Constant(1, 1.0), X);
    const double mean = 0.3 * 1.0 + 0.7 * -2.0;
    const double second = 0.3 * (1.0 + 1.0) + 0.7 * 4.0;
    const Moments mo = mean_cov(Y);
    CHECK(mo.mean(0) == doctest::Approx(2.0 * mean + 1.0).epsilon(1e-14));
    CHECK(mo.cov(0, 0) == doctest::Approx(4.0 * (second - mean * mean)).epsilon(1e-14));
  }

  TEST_CASE("smoothing a point mass gives the standard normal peak") {
    for (int d = 1; d <= 3; ++d) {
      const auto Y = smooth(Distribution::atoms({Vec::Zero(d)}, {1.0}), Mat::Identity(d, d));
      CHECK(density(Y, Vec::Zero(d)) == doctest::Approx(std::pow(2.0 * M_PI, -d / 2.0)).epsilon(1e-14));
    }
  }

  TEST_CASE("smoothing a Gaussian adds covariances") {
    const Mat Q = m2(1.0, 0.3, 0.3, 2.0), Z = m2(0.5, 0.0, 0.0, 0.25);
    const auto Y = smooth(Distribution::gaussian(Vec::Zero(2), Q), Z);
    CHECK(is_gaussian(Y));
    CHECK((mean_cov(Y).cov - (Q + Z)).norm() < 1e-14);
  }

  TEST_CASE("smoothed BPSK density at zero") {
    const auto Y = smooth(Distribution::atoms1({-1.0, 1.0}, {0.5, 0.5}), Mat::Identity(1, 1));
    // two shifted unit normals, each e^{-1/2} / sqrt(2 pi)
    CHECK(density(Y, Vec::Zero(1)) == doctest::Approx(std::exp(-0.5) / std::sqrt(2.0 * M_PI)).epsilon(1e-14));
  }

  TEST_CASE("doubling iid Gaussians gives independent copies") {
    const Mat Q = m2(1.5, -0.4, -0.4, 0.7);
    const auto X = Distribution::gaussian(Vec::Zero(2), Q);
    const JointPair dp = doubled(JointPair::independent(X, X));
    const Moments mo = mean_cov(joint_distribution(dp));
    CHECK((mo.cov.topLeftCorner(2, 2) - Q).norm() < 1e-14);
    CHECK((mo.cov.bottomRightCorner(2, 2) - Q).norm() < 1e-14);
    CHECK(mo.cov.topRightCorner(2, 2).norm() < 1e-14);
    CHECK(is_gaussian(marginal1(dp)));
  }

  TEST_CASE("doubled BPSK sum takes values -sqrt2, 0, sqrt2") {
    const auto bpsk = Distribution::atoms1({-1.0, 1.0}, {0.5, 0.5});
    const auto masses = atom_masses(marginal1(doubled(JointPair::independent(bpsk, bpsk))));
    REQUIRE(masses.size() == 3);
    CHECK(masses.at(std::llround(-std::sqrt(2.0) * 1e9)) == doctest::Approx(0.25));
    CHECK(masses.at(0) == doctest::Approx(0.5));
    CHECK(masses.at(std::llround(std::sqrt(2.0) * 1e9)) == doctest::Approx(0.25));
  }

  TEST_CASE("doubling scales iid means by sqrt2") {
    const auto X = Distribution::atoms({v2(1.0, 0.0), v2(0.5, 2.0)}, {0.25, 0.75});
    const auto dp = doubled(JointPair::independent(X, X));
    CHECK((mean_cov(marginal1(dp)).mean - std::sqrt(2.0) * mean_cov(X).mean).norm() < 1e-14);
    CHECK(mean_cov(marginal2(dp)).mean.norm() < 1e-14);
  }

  TEST_CASE("invalid inputs are rejected") {
    CHECK_THROWS_AS(Distribution::atoms1({0.0, 1.0}, {0.5, 0.6}), InvalidDistribution);
    CHECK_THROWS_AS(Distribution::atoms1({0.0, 1.0}, {-0.5, 1.5}), InvalidDistribution);
    CHECK_THROWS_AS(Distribution::gaussian(Vec::Zero(2), m2(1.0, 0.0, 0.0, -1.0)), InvalidDistribution);
    CHECK_THROWS_AS(Distribution::gaussian(Vec::Zero(2), m2(1.0, 0.5, 0.0, 1.0)), InvalidDistribution);
    CHECK_THROWS_AS(Distribution::gaussian(Vec::Zero(3), Mat::Identity(2, 2)), DimensionMismatch);
    CHECK_THROWS_AS(Distribution::indep_sum(Distribution::gaussian1(0, 1), Distribution::gaussian(Vec::Zero(2), Mat::Identity(2, 2))),
                    DimensionMismatch);
  }

  TEST_CASE("tiny negative eigenvalues are clipped") {
    const auto X = Distribution::gaussian(Vec::Zero(2), m2(1.0, 0.0, 0.0, -5e-11));
    CHECK(min_eigenvalue(mean_cov(X).cov) >= 0.0);
  }

  TEST_CASE("property: random laws have PSD covariance and unit total mass") {
    for (std::uint64_t s = 0; s < 100; ++s) {
      Rng rng(11, s);
      const int d = 1 + static_cast<int>(rng.below(3));
      const auto X = random_distribution(rng, d);
      CHECK(min_eigenvalue(mean_cov(X).cov) >= -1e-10);
      double mass = 0.0;
      for (const auto& c : to_gaussian_mixture(X)) mass += c.weight;
      CHECK(std::abs(mass - 1.0) < 1e-12);
    }
  }

  TEST_CASE("property: mixture moments agree with their flattened form") {
    for (std::uint64_t s = 0; s < 50; ++s) {
      Rng rng(12, s);
      const auto X = random_distribution(rng, 2);
      Vec mean = Vec::Zero(2);
      Mat second = Mat::Zero(2, 2);
      for (const auto& c : to_gaussian_mixture(X)) {
        mean += c.weight * c.mean;
        second += c.weight * (c.cov + c.mean * c.mean.transpose());
      }
      const Moments mo = mean_cov(X);
      CHECK((mo.mean - mean).norm() < 1e-10 * (1.0 + mean.norm()));
      CHECK((mo.second() - second).norm() < 1e-9 * (1.0 + second.norm()));
    }
  }
}
