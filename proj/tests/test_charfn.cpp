#include <doctest.h>

#include <cmath>

#include "bernstab/charfn.hpp"
#include "bernstab/errors.hpp"
#include "bernstab/experiment.hpp"

using namespace bernstab;

namespace {

Vec s(double x) { return Vec::Constant(1, x); }

const Distribution& bpsk() {
  static const Distribution d = Distribution::atoms1({-1.0, 1.0}, {0.5, 0.5});
  return d;
}

// X1 = X2 = B, B uniform on {0, 1}
JointPair coupled01() {
  Vec a(2), b(2);
  a << 0.0, 0.0;
  b << 1.0, 1.0;
  return JointPair::coupled_atoms({a, b}, {0.5, 0.5}, 1);
}

}  // namespace

TEST_SUITE("charfn") {
  TEST_CASE("f(0) = 1 for random laws") {
    for (std::uint64_t k = 0; k < 40; ++k) {
      Rng rng(3, k);
      const int d = 1 + static_cast<int>(rng.below(3));
      CHECK(std::abs(cf_eval(random_distribution(rng, d), Vec::Zero(d)) - 1.0) < 1e-12);
    }
  }

  TEST_CASE("standard Gaussian at e1") {
    for (int d = 1; d <= 3; ++d) {
      Vec t = Vec::Zero(d);
      t(0) = 1.0;
      CHECK(std::abs(cf_eval(Distribution::gaussian(Vec::Zero(d), Mat::Identity(d, d)), t) - std::exp(-0.5)) < 1e-15);
    }
  }

  TEST_CASE("BPSK c.f. is cos t") {
    for (double t : {-3.0, -0.7, 0.0, 0.4, 2.5, 11.0}) CHECK(std::abs(cf_eval(bpsk(), s(t)) - std::cos(t)) < 1e-15);
  }

  TEST_CASE("joint c.f. of an independent pair factors") {
    const auto X1 = Distribution::gaussian1(0.5, 2.0);
    const auto X2 = Distribution::atoms1({-1.0, 0.0, 3.0}, {0.2, 0.5, 0.3});
    const auto p = JointPair::independent(X1, X2);
    for (double a : {-1.3, 0.2, 2.0})
      for (double b : {-0.4, 0.9})
        CHECK(std::abs(joint_cf_eval(p, s(a), s(b)) - cf_eval(X1, s(a)) * cf_eval(X2, s(b))) < 1e-15);
    CHECK(std::abs(joint_cf_eval(p, s(0), s(0)) - 1.0) < 1e-15);
  }

  TEST_CASE("doubled iid pair through the transposed doubling matrix") {
    // (t, t) pulls back to (sqrt2 t, 0) and (t, 0) to (t/sqrt2, t/sqrt2)
    const auto X = Distribution::atoms1({-1.0, 0.5, 2.0}, {0.3, 0.3, 0.4});
    const auto dp = doubled(JointPair::independent(X, X));
    for (double t : {-1.1, 0.3, 1.7}) {
      CHECK(std::abs(joint_cf_eval(dp, s(t), s(t)) - cf_eval(X, s(std::sqrt(2.0) * t))) < 1e-14);
      const cplx h = cf_eval(X, s(t / std::sqrt(2.0)));
      CHECK(std::abs(joint_cf_eval(dp, s(t), s(0.0)) - h * h) < 1e-14);
    }
  }

  TEST_CASE("second c.f.") {
    CHECK(std::abs(second_cf(bpsk(), s(0.0))) == 0.0);
    Vec m(2), t(2);
    m << 0.7, -1.5;
    t << 2.0, 1.0;
    Mat Q(2, 2);
    Q << 1.0, 0.2, 0.2, 0.5;
    const cplx g = second_cf(Distribution::gaussian(m, Q), t);
    CHECK(std::abs(g - cplx(-0.5 * t.dot(Q * t), m.dot(t))) < 1e-12);
    CHECK_THROWS_AS(second_cf(bpsk(), s(M_PI / 2.0)), BranchLost);
  }

  TEST_CASE("second c.f. keeps the continuous branch past pi") {
    // shifted Gaussian: g(t) = 3jt - t^2/2 reaches imaginary part 6 > pi
    const cplx g = second_cf(Distribution::gaussian1(3.0, 0.01), s(2.0));
    CHECK(std::abs(g - cplx(-0.02, 6.0)) < 1e-12);
  }

  TEST_CASE("dependence of independent pairs vanishes") {
    const auto p = JointPair::independent(Distribution::gaussian1(0.0, 1.0), bpsk());
    CHECK(dependence_sup(p, 1.0, 51).epsilon_hat < 1e-12);
    CHECK(robust_dependence_sup(p, 1.0, 51, 1e-6).epsilon_hat < 1e-12);
  }

  TEST_CASE("doubled iid Gaussian pair is independent") {
    Mat Q(2, 2);
    Q << 1.0, 0.3, 0.3, 0.6;
    const auto X = Distribution::gaussian(Vec::Zero(2), Q);
    CHECK(dependence_sup(doubled(JointPair::independent(X, X)), 1.0, 15).epsilon_hat < 1e-10);
  }

  TEST_CASE("coupled atoms dependence matches the dense-grid oracle") {
    // gap = |sin(t1/2) sin(t2/2)|, maximal at the corner of the box
    const double oracle = std::pow(std::sin(0.5), 2);
    const DependenceReport r = dependence_sup(coupled01(), 1.0, 101);
    CHECK(r.epsilon_hat == doctest::Approx(oracle).epsilon(1e-12));
    // the grid value plus its Lipschitz pad bounds the true sup
    CHECK(r.epsilon_hat + r.pad >= 0.2298488470659302);
  }

  TEST_CASE("robust dependence of coupled atoms is the ratio form") {
    const DependenceReport r = robust_dependence_sup(coupled01(), 1.0, 101, 1e-6);
    CHECK(r.epsilon_hat == doctest::Approx(std::pow(std::tan(0.5), 2)).epsilon(1e-12));
  }

  TEST_CASE("robust dependence survives the product-channel image") {
    // Y_kk = 2 X_k + Z_k: the Gaussian factors cancel in the ratio and frequencies pull back by 2
    const JointPair base = coupled01();
    const Mat G = 2.0 * Mat::Identity(2, 2);
    const JointPair img = smooth_pair(JointPair::linear_image(G, 1, base), Mat::Identity(1, 1), Mat::Identity(1, 1));
    const double a = robust_dependence_sup(img, 0.5, 41, 1e-9).epsilon_hat;
    const double b = robust_dependence_sup(base, 1.0, 41, 1e-9).epsilon_hat;
    CHECK(a == doctest::Approx(b).epsilon(1e-10));
  }

  TEST_CASE("decay certificate") {
    const DecayCertificate g = decay_certificate(Distribution::gaussian1(0.0, 1.0), 1.0);
    CHECK(g.T == 1.0);
    CHECK(g.c >= 0.25);
    const DecayCertificate b = decay_certificate(bpsk(), 0.5);
    CHECK(b.c == doctest::Approx((1.0 - std::cos(0.5)) / 0.25).epsilon(1e-9));
    // the certificate must hold on a much finer grid
    for (int i = 1; i <= 10000; ++i) {
      const double t = 0.5 * i / 10000.0;
      CHECK_MESSAGE(std::abs(std::cos(t)) <= 1.0 - b.c * t * t + 1e-12, t);
    }
    CHECK_THROWS_AS(decay_certificate(Distribution::atoms1({0.0}, {1.0}), 1.0), Degenerate);
  }

  TEST_CASE("property: conjugate symmetry and modulus bound") {
    for (std::uint64_t k = 0; k < 40; ++k) {
      Rng rng(4, k);
      const int d = 1 + static_cast<int>(rng.below(3));
      const CompiledCF f(random_distribution(rng, d));
      for (int i = 0; i < 20; ++i) {
        Vec t(d);
        for (int c = 0; c < d; ++c) t(c) = 3.0 * rng.normal();
        CHECK(std::abs(f(t)) <= 1.0 + 1e-12);
        CHECK(std::abs(f(Vec(-t)) - std::conj(f(t))) < 1e-12);
      }
    }
  }

  TEST_CASE("ball grid keeps the origin and the 1-norm ball") {
    const BallGrid g = ball_grid(2, 1.5, 7);
    bool origin = false;
    for (std::size_t i = 0; i < g.size(); ++i) {
      CHECK(std::abs(g.point(i)[0]) + std::abs(g.point(i)[1]) <= 1.5 + 1e-12);
      origin = origin || (g.point(i)[0] == 0.0 && g.point(i)[1] == 0.0);
    }
    CHECK(origin);
  }
}
