#include "bernstab/charfn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bernstab/errors.hpp"
#include "bernstab/parallel.hpp"

namespace bernstab {

CompiledCF::CompiledCF(const Distribution& dist) : dim_(dist.dim()), offset_(Vec::Zero(dist.dim())) {
  add(dist, Mat::Identity(dim_, dim_));
}

// proj maps outer frequencies t (dim_) to frequencies of `dist`.
void CompiledCF::add(const Distribution& dist, const Mat& proj) {
  if (const auto* s = std::get_if<IndepSum>(&dist.node().v)) {
    add(s->left, proj);
    add(s->right, proj);
    return;
  }
  if (const auto* a = std::get_if<Affine>(&dist.node().v)) {
    // f_{Ax+b}(s) = e^{j b's} f_X(A's), s = proj t
    offset_ += proj.transpose() * a->offset;
    add(a->base, a->matrix.transpose() * proj);
    return;
  }
  const GaussianMixture mix = to_gaussian_mixture(dist);
  Factor f;
  f.dim = dist.dim();
  f.proj = proj;
  f.identity = proj.rows() == proj.cols() && proj.isIdentity(0.0);
  for (const auto& c : mix) {
    f.weights.push_back(c.weight);
    for (int i = 0; i < f.dim; ++i) f.means.push_back(c.mean(i));
    for (int i = 0; i < f.dim; ++i)
      for (int j = 0; j < f.dim; ++j) {
        f.covs.push_back(c.cov(i, j));
        if (c.cov(i, j) != 0.0) f.atomic = false;
      }
  }
  factors_.push_back(std::move(f));
}

cplx CompiledCF::operator()(const double* t) const {
  double ph = 0.0;
  for (int i = 0; i < dim_; ++i) ph += offset_(i) * t[i];
  cplx out = ph == 0.0 ? cplx(1.0, 0.0) : std::polar(1.0, ph);
  thread_local std::vector<double> s;
  for (const auto& f : factors_) {
    const int k = f.dim;
    s.resize(static_cast<std::size_t>(k));
    if (f.identity) {
      std::copy(t, t + k, s.begin());
    } else {
      for (int i = 0; i < k; ++i) {
        double acc = 0.0;
        for (int j = 0; j < dim_; ++j) acc += f.proj(i, j) * t[j];
        s[static_cast<std::size_t>(i)] = acc;
      }
    }
    double re = 0.0, im = 0.0;
    const std::size_t nc = f.weights.size();
    for (std::size_t c = 0; c < nc; ++c) {
      const double* mu = &f.means[c * static_cast<std::size_t>(k)];
      double a = 0.0;
      for (int i = 0; i < k; ++i) a += mu[i] * s[static_cast<std::size_t>(i)];
      double q = 0.0;
      if (!f.atomic) {
        const double* sg = &f.covs[c * static_cast<std::size_t>(k * k)];
        for (int i = 0; i < k; ++i) {
          double r = 0.0;
          for (int j = 0; j < k; ++j) r += sg[i * k + j] * s[static_cast<std::size_t>(j)];
          q += s[static_cast<std::size_t>(i)] * r;
        }
      }
      const double mag = f.weights[c] * std::exp(-0.5 * q);
      re += mag * std::cos(a);
      im += mag * std::sin(a);
    }
    out *= cplx(re, im);
  }
  return out;
}

cplx cf_eval(const Distribution& dist, const Vec& t) {
  if (t.size() != dist.dim()) throw DimensionMismatch("cf_eval: frequency dimension");
  return CompiledCF(dist)(t);
}

CompiledJointCF::CompiledJointCF(const JointPair& pair) : d1_(pair.d1()), d2_(pair.d2()) {
  if (const auto* ip = std::get_if<IndependentPair>(&pair.node().v)) {
    independent_ = true;
    parts_.emplace_back(ip->x1);
    parts_.emplace_back(ip->x2);
  } else {
    parts_.emplace_back(joint_distribution(pair));
  }
}

cplx CompiledJointCF::operator()(const double* t1, const double* t2) const {
  if (independent_) return parts_[0](t1) * parts_[1](t2);
  double buf[64];
  std::vector<double> heap;
  double* t = buf;
  if (d1_ + d2_ > 64) {
    heap.resize(static_cast<std::size_t>(d1_ + d2_));
    t = heap.data();
  }
  std::copy(t1, t1 + d1_, t);
  std::copy(t2, t2 + d2_, t + d1_);
  return parts_[0](t);
}

cplx joint_cf_eval(const JointPair& pair, const Vec& t1, const Vec& t2) {
  if (t1.size() != pair.d1() || t2.size() != pair.d2()) throw DimensionMismatch("joint_cf_eval: frequency dimension");
  return CompiledJointCF(pair)(t1.data(), t2.data());
}

cplx second_cf(const Distribution& dist, const Vec& t, int ray_steps) {
  if (t.size() != dist.dim()) throw DimensionMismatch("second_cf: frequency dimension");
  if (ray_steps < 1) throw std::invalid_argument("second_cf: ray_steps must be positive");
  if (t.isZero(0.0)) return {0.0, 0.0};
  const CompiledCF f(dist);
  cplx prev(1.0, 0.0);
  double phase = 0.0;
  for (int k = 1; k <= ray_steps; ++k) {
    const Vec s = (static_cast<double>(k) / ray_steps) * t;
    const cplx cur = f(s);
    if (std::abs(cur) < kBranchFloor) throw BranchLost("|f| fell below the floor on the ray");
    const double step = std::arg(cur / prev);
    if (std::abs(step) >= kPi - 1e-12) throw BranchLost("phase jump of pi between ray samples");
    phase += step;
    prev = cur;
  }
  return {std::log(std::abs(prev)), phase};
}

BallGrid ball_grid(int dim, double T, int n) {
  if (dim < 1) throw DimensionMismatch("ball_grid: dimension");
  if (!(T > 0.0)) throw std::invalid_argument("ball_grid: T must be positive");
  if (n < 3 || n % 2 == 0) throw std::invalid_argument("ball_grid: points per axis must be odd and >= 3");
  const int h = (n - 1) / 2;
  std::vector<double> axis(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) axis[static_cast<std::size_t>(k)] = (static_cast<double>(k - h) / h) * T;
  BallGrid g;
  g.dim = dim;
  g.T = T;
  g.n = n;
  g.spacing = T / h;
  const double lim = T * (1.0 + 1e-12);
  std::vector<int> idx(static_cast<std::size_t>(dim), 0);
  // odometer with the last coordinate fastest
  while (true) {
    double norm = 0.0;
    for (int i = 0; i < dim; ++i) norm += std::abs(axis[static_cast<std::size_t>(idx[i])]);
    if (norm <= lim)
      for (int i = 0; i < dim; ++i) g.coords.push_back(axis[static_cast<std::size_t>(idx[i])]);
    int i = dim - 1;
    while (i >= 0 && ++idx[static_cast<std::size_t>(i)] == n) idx[static_cast<std::size_t>(i--)] = 0;
    if (i < 0) break;
  }
  return g;
}

CFGrid cf_grid(const Distribution& dist, double T, int n) {
  CFGrid out{ball_grid(dist.dim(), T, n), {}};
  const CompiledCF f(dist);
  out.values.resize(out.grid.size());
  parallel_for(out.grid.size(), [&](std::size_t i) { out.values[i] = f(out.grid.point(i)); });
  return out;
}

namespace {

struct RowBest {
  double value = -1.0;
  std::size_t j = 0;
  std::size_t counted = 0;
};

DependenceReport sweep(const JointPair& pair, double T, int n, bool robust, double floor) {
  const BallGrid g1 = ball_grid(pair.d1(), T, n);
  const BallGrid g2 = ball_grid(pair.d2(), T, n);
  const Distribution m1 = marginal1(pair);
  const Distribution m2 = marginal2(pair);
  const CompiledCF f1(m1);
  const CompiledCF f2(m2);
  const CompiledJointCF fj(pair);

  std::vector<cplx> v1(g1.size()), v2(g2.size());
  parallel_for(g1.size(), [&](std::size_t i) { v1[i] = f1(g1.point(i)); });
  parallel_for(g2.size(), [&](std::size_t i) { v2[i] = f2(g2.point(i)); });

  std::vector<RowBest> rows(g1.size());
  parallel_for(g1.size(), [&](std::size_t i) {
    RowBest best;
    const double a1 = std::abs(v1[i]);
    for (std::size_t j = 0; j < g2.size(); ++j) {
      const cplx prod = v1[i] * v2[j];
      double val;
      if (robust) {
        const double den = a1 * std::abs(v2[j]);
        if (den < floor) continue;
        val = std::abs(fj(g1.point(i), g2.point(j)) - prod) / den;
      } else {
        val = std::abs(fj(g1.point(i), g2.point(j)) - prod);
      }
      ++best.counted;
      if (val > best.value) {
        best.value = val;
        best.j = j;
      }
    }
    rows[i] = best;
  });

  DependenceReport rep;
  rep.T = T;
  rep.n = n;
  rep.spacing = g1.spacing;
  rep.robust = robust;
  rep.grid_points = g1.size() * g2.size();
  std::size_t counted = 0;
  std::size_t bi = 0, bj = 0;
  double best = -1.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    counted += rows[i].counted;
    if (rows[i].counted > 0 && rows[i].value > best) {
      best = rows[i].value;
      bi = i;
      bj = rows[i].j;
    }
  }
  if (counted == 0) throw AllBelowFloor("no grid point has |f1||f2| above the floor");
  rep.epsilon_hat = std::max(0.0, best);
  rep.witness_t1 = g1.vec(bi);
  rep.witness_t2 = g2.vec(bj);
  rep.excluded_fraction = 1.0 - static_cast<double>(counted) / static_cast<double>(rep.grid_points);
  if (!robust) rep.pad = 2.0 * rep.spacing * (l1_moment_bound(m1) + l1_moment_bound(m2));
  return rep;
}

}  // namespace

DependenceReport dependence_sup(const JointPair& pair, double T, int n) { return sweep(pair, T, n, false, 0.0); }

DependenceReport robust_dependence_sup(const JointPair& pair, double T, int n, double floor) {
  if (!(floor > 0.0)) throw std::invalid_argument("robust_dependence_sup: floor must be positive");
  return sweep(pair, T, n, true, floor);
}

DecayCertificate decay_certificate(const Distribution& dist, double T_max, int n_audit) {
  if (!(T_max > 0.0)) throw std::invalid_argument("decay_certificate: T_max must be positive");
  const Moments mc = mean_cov(dist);
  if (min_eigenvalue(mc.cov) <= 1e-8) throw Degenerate("covariance has a null direction; law sits on a hyperplane");
  const int d = dist.dim();
  if (n_audit <= 0) n_audit = d == 1 ? 2001 : d == 2 ? 201 : d == 3 ? 41 : 15;
  const CompiledCF f(dist);
  double T = T_max;
  for (int iter = 0; iter < 80; ++iter, T *= 0.5) {
    const BallGrid g = ball_grid(d, T, n_audit);
    std::vector<double> ratio(g.size(), std::numeric_limits<double>::infinity());
    parallel_for(g.size(), [&](std::size_t i) {
      const double* t = g.point(i);
      double nrm = 0.0;
      for (int k = 0; k < d; ++k) nrm += std::abs(t[k]);
      if (nrm > 0.0) ratio[i] = (1.0 - std::abs(f(t))) / (nrm * nrm);
    });
    const double c = *std::min_element(ratio.begin(), ratio.end());
    if (c >= 1e-6) return {c, T};
  }
  throw Degenerate("no decay constant found down to tiny radii");
}

}  // namespace bernstab
