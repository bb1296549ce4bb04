#include <doctest.h>

#include <cmath>

#include "bernstab/agn.hpp"
#include "bernstab/errors.hpp"
#include "bernstab/experiment.hpp"

using namespace bernstab;

namespace {

constexpr double kBpskMI = 0.33683082034683176;  // scipy quadrature

Distribution bpsk() { return Distribution::atoms1({-1.0, 1.0}, {0.5, 0.5}); }

ExtremalProblem scalar_problem(double lambda, double q, double g1, double g2) {
  return ExtremalProblem{lambda, Mat::Constant(1, 1, q), ChannelModel::scalar(g1), ChannelModel::scalar(g2)};
}

}  // namespace

TEST_SUITE("agn") {
  TEST_CASE("Gaussian input closes the capacity gap") {
    for (int d = 1; d <= 2; ++d) {
      const double P = 2.5;
      const auto X = Distribution::gaussian(Vec::Zero(d), P * Mat::Identity(d, d));
      const P2PGap g = p2p_gap(X, ChannelModel::make(Mat::Identity(d, d), Mat::Identity(d, d)));
      CHECK(std::abs(g.gap) < 1e-9);
      CHECK(g.gauss_cap == doctest::Approx(d / 2.0 * std::log(1.0 + P)).epsilon(1e-14));
    }
  }

  TEST_CASE("point mass has zero information and zero gap") {
    const P2PGap g = p2p_gap(Distribution::atoms1({0.4}, {1.0}), ChannelModel::scalar(1.0));
    CHECK(std::abs(g.I_xy) < 1e-12);
    CHECK(std::abs(g.gap) < 1e-12);
  }

  TEST_CASE("BPSK gap") {
    const P2PGap g = p2p_gap(bpsk(), ChannelModel::scalar(1.0));
    CHECK(std::abs(g.gap - (0.5 * std::log(2.0) - kBpskMI)) < 1e-8);
    CHECK(g.gap > 0.0);
  }

  TEST_CASE("invalid channels") {
    CHECK_THROWS_AS(ChannelModel::make(Mat::Zero(1, 1), Mat::Identity(1, 1)), InvalidChannel);
    CHECK_THROWS_AS(ChannelModel::make(Mat::Identity(1, 1), Mat::Zero(1, 1)), InvalidChannel);
  }

  TEST_CASE("doubling audit on a Gaussian input") {
    const DoublingAudit a = doubling_audit(Distribution::gaussian1(0.0, 2.0), ChannelModel::scalar(1.0));
    CHECK(a.eps_sub < 1e-9);
    CHECK(a.I_pm < 1e-8);
    CHECK(a.mi_chain_holds);
    CHECK(a.cf_chain_holds);
  }

  TEST_CASE("doubling audit on BPSK") {
    const DoublingAudit a = doubling_audit(bpsk(), ChannelModel::scalar(1.0));
    CHECK(a.eps_sub > 0.0);
    CHECK(a.I_pm <= 2.0 * a.eps_sub + 1e-6);
    CHECK(std::abs(a.I_pm_direct - a.I_pm) < 1e-6);
    CHECK(a.cf_gap <= 2.0 * std::sqrt(a.eps_sub) + 1e-6);
    CHECK(std::abs(a.identity_lhs - a.identity_rhs) < 1e-8);
    CHECK(a.mi_chain_holds);
    CHECK(a.cf_chain_holds);
    CHECK(a.identity_holds);
  }

  TEST_CASE("product device") {
    const ProductDegrade g = product_degrade(ChannelModel::scalar(1.0), ChannelModel::scalar(2.0),
                                             Distribution::gaussian1(0.0, 1.0), Distribution::gaussian1(0.0, 1.0));
    CHECK(g.I_11_22 < 1e-8);
    CHECK(g.I_1p_2m < 1e-8);
    CHECK(g.I_tilde < 1e-8);

    const ProductDegrade a = product_degrade(ChannelModel::scalar(1.0), ChannelModel::scalar(2.0), bpsk(),
                                             Distribution::atoms1({-1.0, 0.0, 2.0}, {0.3, 0.4, 0.3}));
    CHECK(a.equality_holds);
    CHECK(a.inequality_holds);
    CHECK(a.I_tilde <= a.I_1p_2m + 1e-6);

    const ProductDegrade e = product_degrade(ChannelModel::scalar(1.5), ChannelModel::scalar(1.5), bpsk(), bpsk());
    CHECK(std::abs(e.I_1p_2m - e.I_1p_2m_alt) < 1e-8);
  }

  TEST_CASE("s_lambda closed form and the no-signal case") {
    const ExtremalProblem pr = scalar_problem(2.0, 1.0, 2.0, 1.0);
    const double q = 0.6;
    CHECK(slambda_gaussian(Mat::Constant(1, 1, q), pr) ==
          doctest::Approx(0.5 * std::log(4 * q + 1) - 1.0 * std::log(q + 1)).epsilon(1e-14));
    CHECK(slambda_gaussian(Mat::Zero(1, 1), pr) == 0.0);
    CHECK(std::abs(slambda(Distribution::gaussian1(0.0, q), pr) - slambda_gaussian(Mat::Constant(1, 1, q), pr)) < 1e-12);
  }

  TEST_CASE("BPSK s_lambda sits under the cap") {
    const ExtremalProblem pr = scalar_problem(2.0, 1.0, 1.0, 1.0);
    const double v = slambda(bpsk(), pr);
    CHECK(std::abs(v + kBpskMI) < 1e-8);
    CHECK(v <= slambda_cap(pr) + 1e-6);
  }

  TEST_CASE("Gaussian extremal optimum") {
    const VLambdaResult z = vlambda_gaussian(scalar_problem(2.0, 1.0, 1.0, 1.0));
    CHECK(z.Q_hat_star(0, 0) < 1e-9);
    CHECK(std::abs(z.value) < 1e-12);

    const ExtremalProblem near1 = scalar_problem(1.01, 1.0, 2.0, 1.0);
    CHECK(std::abs(vlambda_gaussian(near1).value - dense_grid_vlambda(near1)) < 1e-6);

    const VLambdaResult q0 = vlambda_gaussian(scalar_problem(2.0, 0.0, 2.0, 1.0));
    CHECK(q0.value == 0.0);
  }

  TEST_CASE("Gaussian extremal optimum in two dimensions stays feasible") {
    Mat Q(2, 2), G1(2, 2);
    Q << 1.0, 0.3, 0.3, 2.0;
    G1 << 2.0, 0.5, 0.0, 1.0;
    const ExtremalProblem pr{1.5, Q, ChannelModel::make(G1, Mat::Identity(2, 2)),
                             ChannelModel::make(Mat::Identity(2, 2), Mat::Identity(2, 2))};
    const VLambdaResult v = vlambda_gaussian(pr, 3);
    CHECK(v.converged);
    CHECK(min_eigenvalue(v.Q_hat_star) >= -1e-10);
    CHECK(min_eigenvalue(Q - v.Q_hat_star) >= -1e-10);
    // no random feasible point beats it
    Rng rng(9);
    for (int k = 0; k < 200; ++k) {
      Mat A(2, 2);
      A << rng.normal(), rng.normal(), rng.normal(), rng.normal();
      Mat P = A * A.transpose();
      P /= std::max(1.0, max_eigenvalue(P));
      const Mat W = psd_sqrt(Q);
      CHECK(slambda_gaussian(W * P * W, pr) <= v.value + 1e-9);
    }
  }

  TEST_CASE("challenge candidates") {
    const ExtremalProblem pr = scalar_problem(2.0, 1.0, 2.0, 1.0);
    const VLambdaResult v = vlambda_gaussian(pr);
    FiniteVCandidate opt{{1.0}, {Distribution::gaussian(Vec::Zero(1), v.Q_hat_star)}};
    CHECK(std::abs(slambda(opt, pr) - v.value) < 1e-4);
    FiniteVCandidate big{{1.0}, {Distribution::gaussian1(0.0, 2.0)}};
    CHECK_THROWS_AS(validate_candidate(big, pr), CapExceeded);

    const ChallengeReport c = extremal_challenge(pr, 500, 42);
    CHECK(c.candidates == 500);
    CHECK(c.violations == 0);
    CHECK(c.max_gap <= 1e-4);
    for (const auto& r : c.rows) CHECK(r.value <= slambda_cap(pr) + 1e-6);
  }

  TEST_CASE("high-probability letters") {
    const HighProbSet u = high_prob_set({0.25, 0.25, 0.25, 0.25}, 800.0, 2.0, 2);
    CHECK(u.threshold == doctest::Approx(0.05));
    CHECK(u.S.size() == 4);
    CHECK(u.pr_SxS == doctest::Approx(1.0));
    CHECK(u.lower_bound == doctest::Approx(0.7));
    CHECK(u.bounds_hold);

    const HighProbSet one = high_prob_set({1.0}, 100.0, 2.0, 1);
    CHECK(one.S.size() == 1);
    CHECK(one.pr_SxS == doctest::Approx(1.0));

    const HighProbSet two = high_prob_set({0.9, 0.1}, 8.0, 2.0, 1);
    CHECK(two.threshold == doctest::Approx(0.5));
    REQUIRE(two.S.size() == 1);
    CHECK(two.S[0] == 0);
    CHECK(two.pr_SxS == doctest::Approx(0.81));

    CHECK_THROWS_AS(high_prob_set({0.5, 0.5}, 2.0, 2.0, 1), EmptyS);
  }

  TEST_CASE("property: capacity gap is nonnegative over a small corpus") {
    for (std::uint64_t k = 0; k < 8; ++k) {
      Rng rng(31, k);
      std::vector<double> pts, w;
      const int K = 2 + static_cast<int>(rng.below(3));
      double tot = 0.0;
      for (int i = 0; i < K; ++i) {
        pts.push_back(rng.uniform(-2.0, 2.0));
        w.push_back(rng.uniform(0.1, 1.0));
        tot += w.back();
      }
      for (double& x : w) x /= tot;
      CHECK(p2p_gap(Distribution::atoms1(pts, w), ChannelModel::scalar(rng.uniform(0.5, 2.0))).gap >= -1e-9);
    }
  }
}
