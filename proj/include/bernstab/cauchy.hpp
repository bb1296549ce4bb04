#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "bernstab/linalg.hpp"

namespace bernstab {

// Black-box g on the box [-T, T)^dim. Some fits evaluate outside the box
// (Hyers needs the whole space); tiling fits never do.
struct SampledFunction {
  int dim = 1;
  double T = 1.0;
  std::function<cplx(const Vec&)> eval;
  // each coordinate projection is assumed to have a continuity point
  bool continuity_assumed = true;
};

// g(x, y) on [-T, T)^dim x [-T, T)^dim.
struct SampledBiFunction {
  int dim = 1;
  double T = 1.0;
  std::function<cplx(const Vec&, const Vec&)> eval;
  bool continuity_assumed = true;
};

struct AdditiveFit {
  CVec linear_map;  // G(x) = <c, x>
  double theta = 0.0;
  double certified_bound = 0.0;
  double domain_T = 0.0;
  double max_residual = 0.0;
  std::size_t audit_points = 0;
  std::string route;  // hyers, skof, kominek
};

struct BiadditiveFit {
  CMat matrix;  // G(x, y) = x' M y, M symmetric
  double theta = 0.0;
  double certified_bound = 0.0;
  double domain_T = 0.0;
  double max_residual = 0.0;
  std::size_t audit_points = 0;
};

struct HyersOptions {
  int n_max = 40;
  bool audit = true;
};

double measure_theta_additive(const SampledFunction& g, int n_probe, std::uint64_t seed);
double measure_theta_biadditive(const SampledBiFunction& g, int n_probe, std::uint64_t seed);

// Slope of g along unit vector e_i via 2^-n g(2^n e_i), with the geometric
// tail test at every doubling. Throws NoConvergence.
cplx hyers_slope(const std::function<cplx(double)>& g1d, double theta, int n_max = 40);

AdditiveFit hyers_fit(const SampledFunction& g, double theta, const HyersOptions& opt = {});
AdditiveFit skof_extend_fit(const SampledFunction& g, double theta, const HyersOptions& opt = {});
AdditiveFit kominek_fit(const SampledFunction& g, double theta, const HyersOptions& opt = {});
BiadditiveFit biadditive_fit(const SampledBiFunction& g, double theta, const HyersOptions& opt = {});

// Tiled extension of a 1-D function given on [-T, T): -k g(-T) + g(r), x = kT + r.
cplx skof_tile(const std::function<cplx(double)>& g1d, double T, double x);

// Per-axis audit resolution: 101, reduced so the full grid stays near 2e5 points.
int audit_points_per_axis(int total_dims);

}  // namespace bernstab
