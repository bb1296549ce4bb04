#include "bernstab/serialize.hpp"

#include <charconv>
#include <cmath>

#include "bernstab/errors.hpp"

namespace bernstab {

namespace {

void require(bool ok, const std::string& where, const std::string& what) {
  if (!ok) throw ConfigError(where + ": " + what);
}

double number(const json& j, const std::string& where) {
  require(j.is_number(), where, "expected a number");
  return j.get<double>();
}

const json& member(const json& j, const char* key, const std::string& where) {
  require(j.is_object() && j.contains(key), where, std::string("missing field '") + key + "'");
  return j.at(key);
}

void only_keys(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  require(j.is_object(), where, "expected an object");
  for (const auto& [k, v] : j.items()) {
    (void)v;
    bool known = false;
    for (const char* a : keys) known = known || k == a;
    require(known, where, "unknown field '" + k + "'");
  }
}

std::vector<double> weights_from(const json& j, const std::string& where) {
  require(j.is_array() && !j.empty(), where, "expected a non-empty array of weights");
  std::vector<double> w;
  for (std::size_t i = 0; i < j.size(); ++i) w.push_back(number(j[i], where + "[" + std::to_string(i) + "]"));
  return w;
}

// A point is either a number (1-D) or an array.
Vec point_from(const json& j, const std::string& where) {
  if (j.is_number()) return Vec::Constant(1, j.get<double>());
  return vec_from_json(j, where);
}

int int_from(const json& j, const std::string& where) {
  require(j.is_number_integer(), where, "expected an integer");
  return j.get<int>();
}

}  // namespace

Vec vec_from_json(const json& j, const std::string& where) {
  require(j.is_array() && !j.empty(), where, "expected a non-empty array");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
    v(static_cast<Eigen::Index>(i)) = number(j[i], where + "[" + std::to_string(i) + "]");
  return v;
}

Mat mat_from_json(const json& j, const std::string& where) {
  if (j.is_number()) return Mat::Constant(1, 1, j.get<double>());
  require(j.is_array() && !j.empty() && j[0].is_array(), where, "expected an array of rows");
  const std::size_t r = j.size(), c = j[0].size();
  Mat m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  for (std::size_t i = 0; i < r; ++i) {
    require(j[i].is_array() && j[i].size() == c, where, "ragged matrix");
    for (std::size_t k = 0; k < c; ++k)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          number(j[i][k], where + "[" + std::to_string(i) + "][" + std::to_string(k) + "]");
  }
  return m;
}

Distribution distribution_from_json(const json& j, const std::string& where) {
  const json& t = member(j, "type", where);
  require(t.is_string(), where + ".type", "expected a string");
  const std::string type = t.get<std::string>();
  try {
    if (type == "gaussian") {
      only_keys(j, {"type", "mean", "cov"}, where);
      return Distribution::gaussian(point_from(member(j, "mean", where), where + ".mean"),
                                    mat_from_json(member(j, "cov", where), where + ".cov"));
    }
    if (type == "atoms") {
      only_keys(j, {"type", "points", "weights"}, where);
      const json& pts = member(j, "points", where);
      require(pts.is_array() && !pts.empty(), where + ".points", "expected a non-empty array");
      std::vector<Vec> p;
      for (std::size_t i = 0; i < pts.size(); ++i) p.push_back(point_from(pts[i], where + ".points"));
      return Distribution::atoms(std::move(p), weights_from(member(j, "weights", where), where + ".weights"));
    }
    if (type == "mixture") {
      only_keys(j, {"type", "components", "weights"}, where);
      const json& cs = member(j, "components", where);
      require(cs.is_array() && !cs.empty(), where + ".components", "expected a non-empty array");
      std::vector<Distribution> comps;
      for (std::size_t i = 0; i < cs.size(); ++i)
        comps.push_back(distribution_from_json(cs[i], where + ".components[" + std::to_string(i) + "]"));
      return Distribution::mixture(std::move(comps), weights_from(member(j, "weights", where), where + ".weights"));
    }
    if (type == "affine") {
      only_keys(j, {"type", "matrix", "offset", "base"}, where);
      return Distribution::affine(mat_from_json(member(j, "matrix", where), where + ".matrix"),
                                  point_from(member(j, "offset", where), where + ".offset"),
                                  distribution_from_json(member(j, "base", where), where + ".base"));
    }
    if (type == "indep_sum") {
      only_keys(j, {"type", "left", "right"}, where);
      return Distribution::indep_sum(distribution_from_json(member(j, "left", where), where + ".left"),
                                     distribution_from_json(member(j, "right", where), where + ".right"));
    }
  } catch (const InvalidDistribution& e) {
    throw ConfigError(where + ": " + e.what());
  } catch (const DimensionMismatch& e) {
    throw ConfigError(where + ": " + e.what());
  }
  throw ConfigError(where + ": unknown distribution type '" + type + "'");
}

JointPair pair_from_json(const json& j, const std::string& where) {
  const json& t = member(j, "type", where);
  require(t.is_string(), where + ".type", "expected a string");
  const std::string type = t.get<std::string>();
  try {
    if (type == "independent") {
      only_keys(j, {"type", "x1", "x2"}, where);
      return JointPair::independent(distribution_from_json(member(j, "x1", where), where + ".x1"),
                                    distribution_from_json(member(j, "x2", where), where + ".x2"));
    }
    if (type == "coupled_atoms") {
      only_keys(j, {"type", "points", "weights", "d1"}, where);
      const json& pts = member(j, "points", where);
      require(pts.is_array() && !pts.empty(), where + ".points", "expected a non-empty array");
      std::vector<Vec> p;
      for (std::size_t i = 0; i < pts.size(); ++i) p.push_back(vec_from_json(pts[i], where + ".points"));
      return JointPair::coupled_atoms(std::move(p), weights_from(member(j, "weights", where), where + ".weights"),
                                      int_from(member(j, "d1", where), where + ".d1"));
    }
    if (type == "linear_image") {
      only_keys(j, {"type", "matrix", "d1", "base"}, where);
      return JointPair::linear_image(mat_from_json(member(j, "matrix", where), where + ".matrix"),
                                     int_from(member(j, "d1", where), where + ".d1"),
                                     pair_from_json(member(j, "base", where), where + ".base"));
    }
    if (type == "joint_law") {
      only_keys(j, {"type", "law", "d1"}, where);
      return JointPair::joint_law(distribution_from_json(member(j, "law", where), where + ".law"),
                                  int_from(member(j, "d1", where), where + ".d1"));
    }
  } catch (const InvalidDistribution& e) {
    throw ConfigError(where + ": " + e.what());
  } catch (const DimensionMismatch& e) {
    throw ConfigError(where + ": " + e.what());
  }
  throw ConfigError(where + ": unknown pair type '" + type + "'");
}

ojson to_json(const Vec& v) {
  ojson a = ojson::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

ojson to_json(const Mat& m) {
  ojson a = ojson::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    ojson row = ojson::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    a.push_back(row);
  }
  return a;
}

ojson to_json(const CVec& v) {
  ojson a = ojson::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(ojson::array({v(i).real(), v(i).imag()}));
  return a;
}

ojson to_json(const Distribution& d) {
  ojson j;
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Gaussian>) {
          j["type"] = "gaussian";
          j["mean"] = to_json(n.mean);
          j["cov"] = to_json(n.cov);
        } else if constexpr (std::is_same_v<T, Atoms>) {
          j["type"] = "atoms";
          ojson pts = ojson::array();
          for (const auto& p : n.points) pts.push_back(to_json(p));
          j["points"] = pts;
          j["weights"] = n.weights;
        } else if constexpr (std::is_same_v<T, Mixture>) {
          j["type"] = "mixture";
          ojson cs = ojson::array();
          for (const auto& c : n.components) cs.push_back(to_json(c));
          j["components"] = cs;
          j["weights"] = n.weights;
        } else if constexpr (std::is_same_v<T, Affine>) {
          j["type"] = "affine";
          j["matrix"] = to_json(n.matrix);
          j["offset"] = to_json(n.offset);
          j["base"] = to_json(n.base);
        } else {
          j["type"] = "indep_sum";
          j["left"] = to_json(n.left);
          j["right"] = to_json(n.right);
        }
      },
      d.node().v);
  return j;
}

ojson to_json(const JointPair& p) {
  ojson j;
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, IndependentPair>) {
          j["type"] = "independent";
          j["x1"] = to_json(n.x1);
          j["x2"] = to_json(n.x2);
        } else if constexpr (std::is_same_v<T, CoupledAtoms>) {
          j["type"] = "coupled_atoms";
          ojson pts = ojson::array();
          for (const auto& q : n.points) pts.push_back(to_json(q));
          j["points"] = pts;
          j["weights"] = n.weights;
          j["d1"] = p.d1();
        } else if constexpr (std::is_same_v<T, LinearImage>) {
          j["type"] = "linear_image";
          j["matrix"] = to_json(n.matrix);
          j["d1"] = p.d1();
          j["base"] = to_json(n.base);
        } else {
          j["type"] = "joint_law";
          j["law"] = to_json(n.law);
          j["d1"] = p.d1();
        }
      },
      p.node().v);
  return j;
}

ojson to_json(const DependenceReport& r) {
  ojson j;
  j["epsilon_hat"] = r.epsilon_hat;
  j["T"] = r.T;
  j["n"] = r.n;
  j["spacing"] = r.spacing;
  j["witness_t1"] = to_json(r.witness_t1);
  j["witness_t2"] = to_json(r.witness_t2);
  j["robust"] = r.robust;
  j["pad"] = r.pad;
  j["excluded_fraction"] = r.excluded_fraction;
  j["grid_points"] = r.grid_points;
  return j;
}

ojson to_json(const Lemma3Report& r) {
  ojson j;
  j["max_residual"] = r.max_residual;
  j["epsilon_hat"] = r.epsilon_hat;
  j["pad"] = r.pad;
  j["bound"] = r.bound;
  j["slack"] = r.slack;
  j["grid_points"] = r.grid_points;
  j["holds"] = r.holds;
  return j;
}

ojson to_json(const StabilityBudget& b) {
  ojson j;
  j["d"] = b.d;
  j["p"] = b.p;
  j["T"] = b.T;
  j["epsilon"] = b.epsilon;
  j["delta"] = b.delta;
  j["phi_t0_abs"] = b.phi_t0_abs;
  j["C_eps"] = b.C_eps;
  j["eps_threshold"] = b.eps_threshold;
  j["C_k"] = b.C_k;
  j["k_star"] = b.k_star;
  j["C_tilde"] = b.C_tilde;
  j["C_tilde_at_one"] = b.C_tilde_at_one;
  j["converged"] = b.converged;
  j["B1"] = b.B1;
  j["B2"] = b.B2;
  j["B3"] = b.B3;
  j["B4"] = b.B4;
  j["B"] = b.B;
  return j;
}

ojson to_json(const GaussianSurrogate& s) {
  ojson j;
  j["d"] = s.d;
  j["m_hat_1"] = to_json(s.m_hat_1);
  j["m_hat_2"] = to_json(s.m_hat_2);
  j["Q_hat"] = to_json(s.Q_hat);
  j["Q_tilde_R"] = to_json(s.Q_tilde_R);
  j["valid_radius"] = s.valid_radius;
  j["certified_gap"] = s.certified_gap;
  j["T"] = s.T;
  j["p"] = s.p;
  j["p_grid"] = s.p_grid;
  j["p_pad"] = s.p_pad;
  j["epsilon"] = s.epsilon;
  j["epsilon_hat"] = s.epsilon_hat;
  j["delta"] = s.delta;
  j["eps_threshold"] = s.eps_threshold;
  j["shift"] = s.shift;
  j["dependence"] = to_json(s.dependence);
  j["theta_bilinear"] = s.theta_bilinear;
  j["theta_linear_1"] = s.theta_linear_1;
  j["theta_linear_2"] = s.theta_linear_2;
  j["null_directions"] = s.null_directions;
  j["audit_max_ratio"] = s.audit_max_ratio;
  j["audit_max_abs"] = s.audit_max_abs;
  j["audit_points"] = s.audit_points;
  return j;
}

ojson to_json(const ExtensionReport& r) {
  ojson j;
  j["t0"] = to_json(r.t0);
  j["phi_t0_abs"] = r.phi_t0_abs;
  j["budget"] = to_json(r.budget);
  j["certified_gap"] = r.certified_gap;
  ojson shells = ojson::array();
  for (const auto& s : r.shells) {
    ojson o;
    o["k"] = s.k;
    o["r_lo"] = s.r_lo;
    o["r_hi"] = s.r_hi;
    o["bound"] = s.bound;
    o["max_residual"] = s.max_residual;
    o["points"] = s.points;
    o["ok"] = s.ok;
    shells.push_back(o);
  }
  j["shells"] = shells;
  j["failures"] = r.failures;
  return j;
}

ojson to_json(const EntropyBounds& b) {
  ojson j;
  j["x"] = b.x;
  j["B1"] = b.B1;
  j["T2"] = b.T2;
  j["B2"] = b.B2;
  j["B3"] = b.B3;
  j["B4"] = b.B4;
  j["B"] = b.B;
  j["c1"] = b.c1;
  j["c2"] = b.c2;
  j["m"] = b.m;
  j["nu"] = b.nu;
  return j;
}

ojson to_json(const EntropyAuditReport& r) {
  ojson j;
  j["applicable"] = r.applicable;
  j["reason"] = r.reason;
  j["R"] = r.R;
  j["epsilon_global"] = r.epsilon_global;
  j["tail"] = r.tail;
  if (r.applicable) {
    j["T"] = r.T;
    j["surrogate"] = to_json(r.surrogate);
    j["extension"] = to_json(r.extension);
    j["bounds"] = to_json(r.bounds);
    j["h_Y1"] = r.h_Y1;
    j["h_Y2"] = r.h_Y2;
    j["h_G1"] = r.h_G1;
    j["h_G2"] = r.h_G2;
    j["gap1"] = r.gap1;
    j["gap2"] = r.gap2;
    j["psd_slack1"] = r.psd_slack1;
    j["psd_slack2"] = r.psd_slack2;
  }
  j["moments"] = {{"second_moment", r.moments.second_moment},
                  {"fourth_moment", r.moments.fourth_moment},
                  {"density_peak", r.moments.density_peak},
                  {"lambda_z_min", r.moments.lambda_z_min}};
  j["holds"] = r.holds;
  return j;
}

ojson to_json(const AdditiveFit& f) {
  ojson j;
  j["route"] = f.route;
  j["linear_map"] = to_json(f.linear_map);
  j["theta"] = f.theta;
  j["certified_bound"] = f.certified_bound;
  j["domain_T"] = f.domain_T;
  j["max_residual"] = f.max_residual;
  j["audit_points"] = f.audit_points;
  return j;
}

ojson to_json(const BiadditiveFit& f) {
  ojson j;
  ojson re = to_json(Mat(f.matrix.real()));
  ojson im = to_json(Mat(f.matrix.imag()));
  j["matrix_re"] = re;
  j["matrix_im"] = im;
  j["theta"] = f.theta;
  j["certified_bound"] = f.certified_bound;
  j["domain_T"] = f.domain_T;
  j["max_residual"] = f.max_residual;
  j["audit_points"] = f.audit_points;
  return j;
}

ojson to_json(const P2PGap& g) { return ojson{{"I_xy", g.I_xy}, {"gauss_cap", g.gauss_cap}, {"gap", g.gap}}; }

ojson to_json(const DoublingAudit& a) {
  ojson j;
  j["eps_sub"] = a.eps_sub;
  j["I_plus"] = a.I_plus;
  j["I_minus"] = a.I_minus;
  j["I_pm"] = a.I_pm;
  j["I_pm_direct"] = a.I_pm_direct;
  j["cf_gap"] = a.cf_gap;
  j["cf_radius"] = a.cf_radius;
  j["identity_lhs"] = a.identity_lhs;
  j["identity_rhs"] = a.identity_rhs;
  j["tol"] = a.tol;
  j["mi_chain_holds"] = a.mi_chain_holds;
  j["cf_chain_holds"] = a.cf_chain_holds;
  j["identity_holds"] = a.identity_holds;
  return j;
}

ojson to_json(const ProductDegrade& p) {
  ojson j;
  j["I_11_22"] = p.I_11_22;
  j["I_1p_2m"] = p.I_1p_2m;
  j["I_tilde"] = p.I_tilde;
  j["I_1p_2m_alt"] = p.I_1p_2m_alt;
  j["equality_tol"] = p.equality_tol;
  j["inequality_tol"] = p.inequality_tol;
  j["equality_holds"] = p.equality_holds;
  j["inequality_holds"] = p.inequality_holds;
  return j;
}

ojson to_json(const VLambdaResult& v) {
  return ojson{{"Q_hat_star", to_json(v.Q_hat_star)},
               {"value", v.value},
               {"iterations", v.iterations},
               {"converged", v.converged}};
}

ojson to_json(const HighProbSet& h) {
  ojson j;
  j["S"] = h.S;
  j["threshold"] = h.threshold;
  j["pr_SxS"] = h.pr_SxS;
  j["lower_bound"] = h.lower_bound;
  j["min_pair_mass"] = h.min_pair_mass;
  j["d"] = h.d;
  j["bounds_hold"] = h.bounds_hold;
  return j;
}

ojson to_json(const ChallengeReport& r) {
  ojson j;
  j["optimum"] = to_json(r.optimum);
  j["cap"] = r.cap;
  j["tol"] = r.tol;
  j["candidates"] = r.candidates;
  j["violations"] = r.violations;
  j["max_value"] = r.max_value;
  j["max_gap"] = r.max_gap;
  j["argmax"] = r.argmax;
  return j;
}

void CsvTable::add_row(std::vector<std::string> row) {
  if (row.size() != header_.size()) throw std::invalid_argument("csv row width differs from the header");
  rows_.push_back(std::move(row));
}

std::string CsvTable::quote(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string CsvTable::field(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

std::string CsvTable::str() const {
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += quote(cells[i]);
    }
    out += "\r\n";
  };
  line(header_);
  for (const auto& r : rows_) line(r);
  return out;
}

}  // namespace bernstab
