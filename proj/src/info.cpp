#include "bernstab/info.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "bernstab/charfn.hpp"
#include "bernstab/errors.hpp"
#include "bernstab/parallel.hpp"

namespace bernstab {

namespace {

constexpr double kBoxSd = 8.0;

int odd_at_least(double x) {
  int n = static_cast<int>(std::ceil(x));
  if (n % 2 == 0) ++n;
  return n;
}

// per-dimension point budget
void point_range(int d, int& lo, int& hi) {
  if (d == 1) {
    lo = 2049;
    hi = 32769;
  } else if (d == 2) {
    lo = 129;
    hi = 1025;
  } else {
    lo = 41;
    hi = 81;
  }
}

void legendre_rule(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(static_cast<std::size_t>(n), 0.0);
  w.assign(static_cast<std::size_t>(n), 0.0);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = 1.0, p2 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
      }
      pp = n * (z * p1 - p2) / (z * z - 1.0);
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) < 1e-15) break;
    }
    x[static_cast<std::size_t>(i)] = -z;
    x[static_cast<std::size_t>(n - 1 - i)] = z;
    w[static_cast<std::size_t>(i)] = w[static_cast<std::size_t>(n - 1 - i)] = 2.0 / ((1.0 - z * z) * pp * pp);
  }
}

struct Axis {
  std::vector<double> x;
  std::vector<double> w;
};

Axis make_axis(double c, double hw, int n, QuadScheme scheme) {
  Axis a;
  if (scheme == QuadScheme::trapezoid) {
    const double h = 2.0 * hw / (n - 1);
    for (int k = 0; k < n; ++k) {
      a.x.push_back(c - hw + h * k);
      a.w.push_back((k == 0 || k == n - 1) ? 0.5 * h : h);
    }
  } else {
    legendre_rule(n, a.x, a.w);
    for (int k = 0; k < n; ++k) {
      a.x[static_cast<std::size_t>(k)] = c + hw * a.x[static_cast<std::size_t>(k)];
      a.w[static_cast<std::size_t>(k)] *= hw;
    }
  }
  return a;
}

MixtureDensity density_of(const Distribution& dist) { return MixtureDensity(to_gaussian_mixture(dist)); }

void check_mass(double mass, const char* what) {
  if (!(mass >= 1.0 - kMassTolerance))
    throw MassDeficit(std::string(what) + ": box captures mass " + std::to_string(mass));
}

}  // namespace

QuadratureSpec default_quadrature(const MixtureDensity& dens) {
  const int d = dens.dim();
  const Vec m = dens.mean();
  const Mat q = dens.cov();
  QuadratureSpec s;
  s.center = m;
  s.box_half_width = Vec(d);
  double sd_min = std::numeric_limits<double>::infinity();
  for (int i = 0; i < d; ++i) s.box_half_width(i) = kBoxSd * std::sqrt(std::max(q(i, i), 0.0));
  // components far from the mean still get 8 of their own sd
  for (std::size_t c = 0; c < dens.size(); ++c) {
    const Mat& cc = dens.component_cov(c);
    const Vec& mc = dens.component_mean(c);
    for (int i = 0; i < d; ++i)
      s.box_half_width(i) = std::max(s.box_half_width(i), std::abs(mc(i) - m(i)) + kBoxSd * std::sqrt(cc(i, i)));
    sd_min = std::min(sd_min, std::sqrt(std::max(min_eigenvalue(cc), 0.0)));
  }
  int lo, hi;
  point_range(d, lo, hi);
  const double hw_max = s.box_half_width.maxCoeff();
  // trapezoid error decays like exp(-2 pi^2 sd^2 / h^2); h <= sd/4 is ample
  const int want = odd_at_least(std::min(1e9, 2.0 * hw_max / (sd_min / 4.0) + 1.0));
  s.points_per_axis = std::clamp(want, lo, hi);
  if (s.points_per_axis % 2 == 0) ++s.points_per_axis;
  return s;
}

QuadratureSpec covering_quadrature(const MixtureDensity& a, const MixtureDensity& b) {
  const QuadratureSpec qa = default_quadrature(a);
  const QuadratureSpec qb = default_quadrature(b);
  QuadratureSpec s;
  const Vec lo = (qa.center - qa.box_half_width).cwiseMin(qb.center - qb.box_half_width);
  const Vec hi = (qa.center + qa.box_half_width).cwiseMax(qb.center + qb.box_half_width);
  s.center = 0.5 * (lo + hi);
  s.box_half_width = 0.5 * (hi - lo);
  s.points_per_axis = std::max(qa.points_per_axis, qb.points_per_axis);
  return s;
}

std::vector<double> integrate(const QuadratureSpec& q, int m, const std::function<void(const double*, double*)>& fn) {
  const int d = static_cast<int>(q.center.size());
  if (d < 1 || q.box_half_width.size() != d) throw DimensionMismatch("quadrature box");
  const int n = q.points_per_axis;
  if (n < 3) throw std::invalid_argument("quadrature needs at least 3 points per axis");
  std::vector<Axis> axes;
  for (int i = 0; i < d; ++i) axes.push_back(make_axis(q.center(i), q.box_half_width(i), n, q.scheme));

  // one row per index of the first axis
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(m)));
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t r) {
    std::vector<NeumaierSum> acc(static_cast<std::size_t>(m));
    std::vector<double> y(static_cast<std::size_t>(d));
    std::vector<double> out(static_cast<std::size_t>(m));
    std::vector<int> idx(static_cast<std::size_t>(d), 0);
    idx[0] = static_cast<int>(r);
    while (true) {
      double w = 1.0;
      for (int i = 0; i < d; ++i) {
        y[static_cast<std::size_t>(i)] = axes[static_cast<std::size_t>(i)].x[static_cast<std::size_t>(idx[i])];
        w *= axes[static_cast<std::size_t>(i)].w[static_cast<std::size_t>(idx[i])];
      }
      fn(y.data(), out.data());
      for (int k = 0; k < m; ++k) acc[static_cast<std::size_t>(k)].add(w * out[static_cast<std::size_t>(k)]);
      int i = d - 1;
      while (i >= 1 && ++idx[static_cast<std::size_t>(i)] == n) idx[static_cast<std::size_t>(i--)] = 0;
      if (i < 1) break;
    }
    for (int k = 0; k < m; ++k) rows[r][static_cast<std::size_t>(k)] = acc[static_cast<std::size_t>(k)].value();
  });
  std::vector<double> total(static_cast<std::size_t>(m));
  for (int k = 0; k < m; ++k) {
    NeumaierSum s;
    for (int r = 0; r < n; ++r) s.add(rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(k)]);
    total[static_cast<std::size_t>(k)] = s.value();
  }
  return total;
}

double gaussian_entropy(const Mat& cov) {
  const int d = static_cast<int>(cov.rows());
  return 0.5 * (d * std::log(2.0 * kPi * std::exp(1.0)) + log_det_spd(cov));
}

double differential_entropy(const Distribution& dist, const std::optional<QuadratureSpec>& quad) {
  const MixtureDensity dens = density_of(dist);
  if (dens.single_gaussian()) return gaussian_entropy(dens.first_cov());
  const QuadratureSpec q = quad ? *quad : default_quadrature(dens);
  const auto r = integrate(q, 2, [&](const double* y, double* out) {
    const double lp = dens.log_pdf(y);
    const double p = std::exp(lp);
    out[0] = p;
    out[1] = p > 0.0 ? -p * lp : 0.0;
  });
  check_mass(r[0], "differential_entropy");
  return r[1];
}

double mutual_information(const Distribution& input, const Mat& G, const Mat& Q_Z,
                          const std::optional<QuadratureSpec>& quad) {
  if (G.cols() != input.dim() || Q_Z.rows() != G.rows() || Q_Z.cols() != G.rows())
    throw DimensionMismatch("mutual_information: channel dimensions");
  const int k = static_cast<int>(G.rows());
  const Distribution y = smooth(Distribution::affine(G, Vec::Zero(k), input), Q_Z);
  const MixtureDensity dens = density_of(y);
  if (dens.single_gaussian()) return 0.5 * (log_det_spd(dens.first_cov()) - log_det_spd(Q_Z));
  return differential_entropy(y, quad) - gaussian_entropy(Q_Z);
}

double pair_mutual_information(const JointPair& pair, const std::optional<QuadratureSpec>& quad) {
  const MixtureDensity joint = density_of(joint_distribution(pair));
  const int d1 = pair.d1();
  if (joint.single_gaussian()) {
    const Mat& q = joint.first_cov();
    const int d2 = pair.d2();
    return 0.5 * (log_det_spd(q.topLeftCorner(d1, d1)) + log_det_spd(q.bottomRightCorner(d2, d2)) - log_det_spd(q));
  }
  const MixtureDensity p1 = density_of(marginal1(pair));
  const MixtureDensity p2 = density_of(marginal2(pair));
  const QuadratureSpec q = quad ? *quad : default_quadrature(joint);
  const auto r = integrate(q, 2, [&](const double* y, double* out) {
    const double lj = joint.log_pdf(y);
    const double pj = std::exp(lj);
    out[0] = pj;
    out[1] = pj > 0.0 ? pj * (lj - p1.log_pdf(y) - p2.log_pdf(y + d1)) : 0.0;
  });
  check_mass(r[0], "pair_mutual_information");
  return r[1];
}

namespace {

// |p - q| has kinks where the densities cross, which costs the trapezoid its
// spectral accuracy; take the full point budget instead.
QuadratureSpec kink_refined(QuadratureSpec s) {
  int lo, hi;
  point_range(static_cast<int>(s.center.size()), lo, hi);
  s.points_per_axis = std::max(s.points_per_axis, hi);
  return s;
}

// the |p - q| kink leaves a clean h^2 trapezoid error; cancel it against the nested half grid
template <class F>
std::vector<double> integrate_extrapolated(const QuadratureSpec& fine, int n_out, int abs_index, F&& f) {
  auto r = integrate(fine, n_out, f);
  QuadratureSpec coarse = fine;
  coarse.points_per_axis = (fine.points_per_axis + 1) / 2;
  const auto c = integrate(coarse, n_out, f);
  r[abs_index] = (4.0 * r[abs_index] - c[abs_index]) / 3.0;
  return r;
}

}  // namespace

double l1_distance(const Distribution& p, const Distribution& q, const std::optional<QuadratureSpec>& quad) {
  if (p.dim() != q.dim()) throw DimensionMismatch("l1_distance: dimensions differ");
  const MixtureDensity a = density_of(p);
  const MixtureDensity b = density_of(q);
  const auto f = [&](const double* y, double* out) {
    const double pa = a.pdf(y);
    const double pb = b.pdf(y);
    out[0] = pa;
    out[1] = pb;
    out[2] = std::abs(pa - pb);
  };
  const auto r = quad ? integrate(*quad, 3, f) : integrate_extrapolated(kink_refined(covering_quadrature(a, b)), 3, 2, f);
  check_mass(r[0], "l1_distance");
  check_mass(r[1], "l1_distance");
  return std::min(2.0, r[2]);
}

double pair_l1_gap(const JointPair& pair, const std::optional<QuadratureSpec>& quad) {
  const MixtureDensity joint = density_of(joint_distribution(pair));
  const MixtureDensity p1 = density_of(marginal1(pair));
  const MixtureDensity p2 = density_of(marginal2(pair));
  const int d1 = pair.d1();
  const auto f = [&](const double* y, double* out) {
    const double pj = joint.pdf(y);
    out[0] = pj;
    out[1] = std::abs(pj - p1.pdf(y) * p2.pdf(y + d1));
  };
  const auto r = quad ? integrate(*quad, 2, f) : integrate_extrapolated(kink_refined(default_quadrature(joint)), 2, 1, f);
  check_mass(r[0], "pair_l1_gap");
  return std::min(2.0, r[1]);
}

PinskerChain pinsker_chain_audit(const JointPair& pair, const Vec& t1, const Vec& t2, double tol,
                                 const std::optional<QuadratureSpec>& quad) {
  PinskerChain c;
  c.cf_gap = std::abs(joint_cf_eval(pair, t1, t2) - cf_eval(marginal1(pair), t1) * cf_eval(marginal2(pair), t2));
  c.l1 = pair_l1_gap(pair, quad);
  c.mi = pair_mutual_information(pair, quad);
  c.sqrt_2I = std::sqrt(2.0 * std::max(0.0, c.mi));
  c.tol = tol;
  c.holds = c.cf_gap <= c.l1 + tol && c.l1 <= c.sqrt_2I + tol;
  return c;
}

}  // namespace bernstab
