#include "bernstab/cauchy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "bernstab/errors.hpp"
#include "bernstab/parallel.hpp"
#include "bernstab/rng.hpp"

namespace bernstab {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

double audit_tol(double gmax) { return 1e-10 * (1.0 + gmax); }

// uniform nodes on [-T, T), n per axis, odometer order
std::vector<double> box_nodes(int n, double T) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) v[static_cast<std::size_t>(k)] = -T + 2.0 * T * k / n;
  return v;
}

Vec node_point(const std::vector<double>& ax, std::size_t flat, int dims) {
  const std::size_t n = ax.size();
  Vec p(dims);
  for (int i = dims - 1; i >= 0; --i) {
    p(i) = ax[flat % n];
    flat /= n;
  }
  return p;
}

std::size_t ipow(std::size_t b, int e) {
  std::size_t r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

struct AuditResult {
  double max_residual = 0.0;
  double max_abs = 0.0;
  std::size_t points = 0;
};

// residual(p) over the grid [-T, T)^dims, reduced in index order
AuditResult audit_grid(int dims, double T, const std::function<void(const Vec&, double&, double&)>& residual) {
  const int n = audit_points_per_axis(dims);
  const std::vector<double> ax = box_nodes(n, T);
  const std::size_t total = ipow(static_cast<std::size_t>(n), dims);
  std::vector<double> res(total), mag(total);
  parallel_for(total, [&](std::size_t i) { residual(node_point(ax, i, dims), res[i], mag[i]); });
  AuditResult a;
  a.points = total;
  for (std::size_t i = 0; i < total; ++i) {
    a.max_residual = std::max(a.max_residual, res[i]);
    a.max_abs = std::max(a.max_abs, mag[i]);
  }
  return a;
}

void check_domain(int dim, double T) {
  if (dim < 1) throw DimensionMismatch("sampled function dimension");
  if (!(T > 0.0)) throw std::invalid_argument("domain half-width must be positive");
}

// uniform point of [-T, T)^d
Vec draw(Rng& rng, int d, double T) {
  Vec x(d);
  for (int i = 0; i < d; ++i) x(i) = rng.uniform(-T, T);
  return x;
}

// <c, x> without conjugation
cplx apply(const CVec& c, const Vec& x) { return (c.array() * x.array().cast<cplx>()).sum(); }

bool in_box(const Vec& x, double T) { return (x.array() >= -T).all() && (x.array() < T).all(); }

void tail_check(cplx prev, cplx cur, double theta, int n) {
  const double allowed = theta * std::ldexp(1.0, -(n - 1));
  const double slack_re = 64.0 * kEps * (std::abs(prev.real()) + std::abs(cur.real())) + 1e-300;
  const double slack_im = 64.0 * kEps * (std::abs(prev.imag()) + std::abs(cur.imag())) + 1e-300;
  if (std::abs(cur.real() - prev.real()) > allowed + slack_re || std::abs(cur.imag() - prev.imag()) > allowed + slack_im)
    throw NoConvergence("doubling sequence left its geometric tail at step " + std::to_string(n));
}

CVec slopes_from(const std::function<cplx(int, double)>& coord_fn, int dim, double theta, int n_max) {
  CVec c(dim);
  for (int i = 0; i < dim; ++i) c(i) = hyers_slope([&](double s) { return coord_fn(i, s); }, theta, n_max);
  return c;
}

}  // namespace

int audit_points_per_axis(int total_dims) {
  if (total_dims < 1) return 1;
  const double cap = 2e5;
  int n = 101;
  while (n > 3 && std::pow(static_cast<double>(n), total_dims) > cap) --n;
  return n;
}

double measure_theta_additive(const SampledFunction& g, int n_probe, std::uint64_t seed) {
  check_domain(g.dim, g.T);
  Rng rng(seed, 0xadd);
  std::vector<std::pair<Vec, Vec>> probes;
  probes.reserve(static_cast<std::size_t>(n_probe));
  while (static_cast<int>(probes.size()) < n_probe) {
    Vec x = draw(rng, g.dim, g.T);
    Vec y = draw(rng, g.dim, g.T);
    if (!in_box(x + y, g.T)) y = -0.5 * y;  // keep the draw count fixed
    if (!in_box(x + y, g.T)) continue;
    probes.emplace_back(std::move(x), std::move(y));
  }
  // the edge -T enters every tiling, so probe it explicitly
  for (int i = 0; i < g.dim; ++i) {
    Vec e = Vec::Zero(g.dim);
    e(i) = -g.T;
    for (int k = 1; k < 8; ++k) {
      Vec r = Vec::Zero(g.dim);
      r(i) = g.T * k / 8.0;
      probes.emplace_back(e, r);
      probes.emplace_back(r, e);
    }
  }
  std::vector<double> v(probes.size());
  parallel_for(probes.size(), [&](std::size_t k) {
    const auto& [x, y] = probes[k];
    v[k] = std::abs(g.eval(x + y) - g.eval(x) - g.eval(y));
  });
  return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
}

double measure_theta_biadditive(const SampledBiFunction& g, int n_probe, std::uint64_t seed) {
  check_domain(g.dim, g.T);
  Rng rng(seed, 0xb1add);
  struct Probe {
    Vec a, b, c;
  };
  std::vector<Probe> probes;
  while (static_cast<int>(probes.size()) < n_probe) {
    Vec a = draw(rng, g.dim, g.T);
    Vec b = draw(rng, g.dim, g.T);
    Vec c = draw(rng, g.dim, g.T);
    if (!in_box(a + b, g.T)) b = -0.5 * b;
    if (!in_box(a + b, g.T)) continue;
    probes.push_back({std::move(a), std::move(b), std::move(c)});
  }
  std::vector<double> v(probes.size());
  parallel_for(probes.size(), [&](std::size_t k) {
    const auto& p = probes[k];
    const double first = std::abs(g.eval(p.a + p.b, p.c) - g.eval(p.a, p.c) - g.eval(p.b, p.c));
    const double second = std::abs(g.eval(p.c, p.a + p.b) - g.eval(p.c, p.a) - g.eval(p.c, p.b));
    v[k] = std::max(first, second);
  });
  return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
}

cplx hyers_slope(const std::function<cplx(double)>& g1d, double theta, int n_max) {
  if (n_max < 1) throw std::invalid_argument("hyers: n_max must be positive");
  cplx prev = g1d(1.0);
  for (int n = 1; n <= n_max; ++n) {
    const double s = std::ldexp(1.0, n);
    const cplx cur = g1d(s) / s;
    if (!std::isfinite(cur.real()) || !std::isfinite(cur.imag())) throw NoConvergence("non-finite doubling value");
    tail_check(prev, cur, theta, n);
    prev = cur;
  }
  return prev;
}

cplx skof_tile(const std::function<cplx(double)>& g1d, double T, double x) {
  const double k = std::floor(x / T);
  double r = std::fma(-k, T, x);
  if (r < 0.0) r = 0.0;
  if (r >= T) r = std::nextafter(T, 0.0);
  return -k * g1d(-T) + g1d(r);
}

AdditiveFit hyers_fit(const SampledFunction& g, double theta, const HyersOptions& opt) {
  check_domain(g.dim, g.T);
  const int d = g.dim;
  AdditiveFit fit;
  fit.route = "hyers";
  fit.theta = theta;
  fit.domain_T = g.T;
  fit.certified_bound = theta;
  fit.linear_map = slopes_from(
      [&](int i, double s) {
        Vec x = Vec::Zero(d);
        x(i) = s;
        return g.eval(x);
      },
      d, theta, opt.n_max);
  if (opt.audit) {
    const CVec c = fit.linear_map;
    const AuditResult a = audit_grid(d, g.T, [&](const Vec& x, double& res, double& mag) {
      const cplx gx = g.eval(x);
      res = std::abs(gx - apply(c, x));
      mag = std::abs(gx);
    });
    fit.max_residual = a.max_residual;
    fit.audit_points = a.points;
    if (a.max_residual > fit.certified_bound + audit_tol(a.max_abs))
      throw BoundViolated("Hyers residual exceeds theta");
  }
  return fit;
}

AdditiveFit skof_extend_fit(const SampledFunction& g, double theta, const HyersOptions& opt) {
  check_domain(g.dim, g.T);
  if (g.dim != 1) throw DimensionMismatch("skof_extend_fit is one-dimensional");
  const double T = g.T;
  auto g1 = [&](double s) {
    Vec x(1);
    x(0) = s;
    return g.eval(x);
  };
  AdditiveFit fit;
  fit.route = "skof";
  fit.theta = theta;
  fit.domain_T = T;
  fit.certified_bound = 3.0 * theta;
  fit.linear_map = CVec(1);
  // the tiled extension is 2 theta-additive on the whole line
  fit.linear_map(0) = hyers_slope([&](double s) { return skof_tile(g1, T, s); }, 2.0 * theta, opt.n_max);
  if (opt.audit) {
    const cplx c = fit.linear_map(0);
    const AuditResult a = audit_grid(1, T, [&](const Vec& x, double& res, double& mag) {
      const cplx gx = g.eval(x);
      res = std::abs(gx - c * x(0));
      mag = std::abs(gx);
    });
    fit.max_residual = a.max_residual;
    fit.audit_points = a.points;
    if (a.max_residual > fit.certified_bound + audit_tol(a.max_abs))
      throw BoundViolated("tiled-extension residual exceeds 3 theta");
  }
  return fit;
}

AdditiveFit kominek_fit(const SampledFunction& g, double theta, const HyersOptions& opt) {
  check_domain(g.dim, g.T);
  const int d = g.dim;
  AdditiveFit fit;
  fit.route = "kominek";
  fit.theta = theta;
  fit.domain_T = g.T;
  fit.certified_bound = (4.0 * d - 1.0) * theta;
  fit.linear_map = CVec(d);
  HyersOptions inner = opt;
  inner.audit = false;
  for (int i = 0; i < d; ++i) {
    SampledFunction gi;
    gi.dim = 1;
    gi.T = g.T;
    gi.eval = [&, i](const Vec& s) {
      Vec x = Vec::Zero(d);
      x(i) = s(0);
      return g.eval(x);
    };
    fit.linear_map(i) = skof_extend_fit(gi, theta, inner).linear_map(0);
  }
  if (opt.audit) {
    const CVec c = fit.linear_map;
    const AuditResult a = audit_grid(d, g.T, [&](const Vec& x, double& res, double& mag) {
      const cplx gx = g.eval(x);
      res = std::abs(gx - apply(c, x));
      mag = std::abs(gx);
    });
    fit.max_residual = a.max_residual;
    fit.audit_points = a.points;
    if (a.max_residual > fit.certified_bound + audit_tol(a.max_abs))
      throw BoundViolated("coordinatewise fit residual exceeds (4d-1) theta");
  }
  return fit;
}

BiadditiveFit biadditive_fit(const SampledBiFunction& g, double theta, const HyersOptions& opt) {
  check_domain(g.dim, g.T);
  const int d = g.dim;
  const double T = g.T;

  {
    Rng rng(0x5e7, static_cast<std::uint64_t>(d));
    for (int k = 0; k < 64; ++k) {
      const Vec x = draw(rng, d, T);
      const Vec y = draw(rng, d, T);
      const cplx a = g.eval(x, y);
      const cplx b = g.eval(y, x);
      if (std::abs(a - b) > 1e-10 * std::max(1.0, std::abs(a))) throw NotSymmetric("g(x,y) differs from g(y,x)");
    }
  }

  CMat m(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      auto gij = [&](double x, double y) {
        Vec a = Vec::Zero(d), b = Vec::Zero(d);
        a(i) = x;
        b(j) = y;
        return g.eval(a, b);
      };
      // slope in x of the tiled section at fixed y in [-T, T)
      auto inner = [&](double y) {
        return hyers_slope([&](double x) { return skof_tile([&](double s) { return gij(s, y); }, T, x); }, 2.0 * theta,
                           opt.n_max);
      };
      // G*(x0, y) is theta-additive in y only for x0 inside [-T, T); take x0 = -T
      const double x0 = -T;
      const cplx at_edge = x0 * inner(-T);
      auto outer = [&](double y) {
        const double k = std::floor(y / T);
        double r = std::fma(-k, T, y);
        if (r < 0.0) r = 0.0;
        if (r >= T) r = std::nextafter(T, 0.0);
        return -k * at_edge + x0 * inner(r);
      };
      m(i, j) = hyers_slope(outer, 2.0 * theta, opt.n_max) / x0;
    }
  }
  BiadditiveFit fit;
  fit.matrix = 0.5 * (m + m.transpose());
  fit.theta = theta;
  fit.domain_T = T;
  fit.certified_bound = d == 1 ? 6.0 * theta : (7.0 * d * d - 1.0) * theta;
  if (opt.audit) {
    const CMat mm = fit.matrix;
    const AuditResult a = audit_grid(2 * d, T, [&](const Vec& p, double& res, double& mag) {
      const Vec x = p.head(d);
      const Vec y = p.tail(d);
      const cplx gx = g.eval(x, y);
      const CVec xc = x.cast<cplx>();
      const CVec yc = y.cast<cplx>();
      res = std::abs(gx - (xc.transpose() * mm * yc)(0, 0));
      mag = std::abs(gx);
    });
    fit.max_residual = a.max_residual;
    fit.audit_points = a.points;
    if (a.max_residual > fit.certified_bound + audit_tol(a.max_abs))
      throw BoundViolated("bilinear fit residual exceeds its certified multiple of theta");
  }
  return fit;
}

}  // namespace bernstab
