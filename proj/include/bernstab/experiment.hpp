#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "bernstab/rng.hpp"
#include "bernstab/serialize.hpp"

namespace bernstab {

struct ExperimentResult {
  ojson report;
  std::string csv;  // empty when the kind has no table
  bool passed = false;
};

// Validates the config (ConfigError on schema problems, std::invalid_argument
// on out-of-range parameters) and runs it. Library errors raised while running
// become a failed assertion instead of propagating.
ExperimentResult run_experiment(const json& config, std::optional<std::uint64_t> seed_override = std::nullopt);

// Random law in dimension d built from all five constructors; depth bounds nesting.
Distribution random_distribution(Rng& rng, int d, int depth = 2);

// Additive test function <c, x> + (theta/3) sin(a'x + phi) e^{j psi}: theta-additive everywhere.
struct SyntheticAdditive {
  CVec c;
  Vec a;
  double phi = 0.0, psi = 0.0, theta = 0.0;
  cplx operator()(const Vec& x) const;
};
SyntheticAdditive synthetic_additive(Rng& rng, int d, double theta);

// x'My + (theta/3) sin(a'(x+y) + phi) cos(b'(x-y)), M symmetric complex.
struct SyntheticBiadditive {
  CMat M;
  Vec a, b;
  double phi = 0.0, theta = 0.0;
  cplx operator()(const Vec& x, const Vec& y) const;
};
SyntheticBiadditive synthetic_biadditive(Rng& rng, int d, double theta);

// max over a dense q-grid on [0, Q] of the Gaussian extremal objective (d = 1 only).
double dense_grid_vlambda(const ExtremalProblem& pr, int points = 200001);

}  // namespace bernstab
