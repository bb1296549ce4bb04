#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "bernstab/distribution.hpp"

namespace bernstab {

enum class QuadScheme { trapezoid, gauss_legendre };

struct QuadratureSpec {
  Vec center;
  Vec box_half_width;
  int points_per_axis = 0;
  QuadScheme scheme = QuadScheme::trapezoid;
};

// Box mean +- 8 sd per axis; points chosen from the narrowest component.
QuadratureSpec default_quadrature(const MixtureDensity& dens);
// Smallest box covering the defaults of both densities.
QuadratureSpec covering_quadrature(const MixtureDensity& a, const MixtureDensity& b);

// Integrates m functions at once. fn(y, out) writes out[0..m).
std::vector<double> integrate(const QuadratureSpec& q, int m,
                              const std::function<void(const double*, double*)>& fn);

inline constexpr double kMassTolerance = 1e-8;

// -int p log p in nats. Single-Gaussian laws use the closed form.
double differential_entropy(const Distribution& dist, const std::optional<QuadratureSpec>& quad = std::nullopt);
double gaussian_entropy(const Mat& cov);

// I(X; GX+Z), Z ~ N(0, Q_Z), as h(Y) - h(Z).
double mutual_information(const Distribution& input, const Mat& G, const Mat& Q_Z,
                          const std::optional<QuadratureSpec>& quad = std::nullopt);

// I(X1; X2) of a pair whose joint law has a density.
double pair_mutual_information(const JointPair& pair, const std::optional<QuadratureSpec>& quad = std::nullopt);

double l1_distance(const Distribution& p, const Distribution& q, const std::optional<QuadratureSpec>& quad = std::nullopt);

// || p_{12} - p_1 p_2 ||_1
double pair_l1_gap(const JointPair& pair, const std::optional<QuadratureSpec>& quad = std::nullopt);

struct PinskerChain {
  double cf_gap = 0.0;
  double l1 = 0.0;
  double sqrt_2I = 0.0;
  double mi = 0.0;
  double tol = 0.0;
  bool holds = false;
};

PinskerChain pinsker_chain_audit(const JointPair& pair, const Vec& t1, const Vec& t2, double tol = 1e-6,
                                 const std::optional<QuadratureSpec>& quad = std::nullopt);

}  // namespace bernstab
