#include <cmath>

#include "bernstab/distribution.hpp"
#include "bernstab/errors.hpp"

namespace bernstab {

namespace {

template <class T>
std::shared_ptr<const PairNode> make_pair_node(T&& alt) {
  return std::make_shared<const PairNode>(PairNode{std::forward<T>(alt)});
}

Mat block_selector(int rows_total, int start, int count) {
  Mat s = Mat::Zero(count, rows_total);
  s.block(0, start, count, count).setIdentity();
  return s;
}

Mat doubling_matrix(int d, double scale) {
  Mat m(2 * d, 2 * d);
  const Mat id = Mat::Identity(d, d);
  m << id, id, id, -id;
  return scale * m;
}

}  // namespace

JointPair JointPair::independent(Distribution x1, Distribution x2) {
  const int d1 = x1.dim();
  const int d2 = x2.dim();
  return JointPair(make_pair_node(IndependentPair{std::move(x1), std::move(x2)}), d1, d2);
}

JointPair JointPair::coupled_atoms(std::vector<Vec> points, std::vector<double> weights, int d1) {
  // reuse the atom validation
  const Distribution law = Distribution::atoms(points, weights);
  if (d1 < 1 || d1 >= law.dim()) throw DimensionMismatch("coupled_atoms: split must leave both blocks non-empty");
  const int d2 = law.dim() - d1;
  return JointPair(make_pair_node(CoupledAtoms{std::move(points), std::move(weights)}), d1, d2);
}

JointPair JointPair::linear_image(Mat matrix, int d1_out, JointPair base) {
  if (matrix.cols() != base.d1() + base.d2()) throw DimensionMismatch("linear_image: matrix columns");
  if (d1_out < 1 || d1_out >= matrix.rows()) throw DimensionMismatch("linear_image: output split");
  if (!matrix.allFinite()) throw InvalidDistribution("linear_image: non-finite entry");
  if (const auto* inner = std::get_if<LinearImage>(&base.node().v)) {
    return linear_image(matrix * inner->matrix, d1_out, inner->base);
  }
  const int d2 = static_cast<int>(matrix.rows()) - d1_out;
  return JointPair(make_pair_node(LinearImage{std::move(matrix), std::move(base)}), d1_out, d2);
}

JointPair JointPair::joint_law(Distribution law, int d1) {
  if (d1 < 1 || d1 >= law.dim()) throw DimensionMismatch("joint_law: split must leave both blocks non-empty");
  const int d2 = law.dim() - d1;
  return JointPair(make_pair_node(JointLaw{std::move(law)}), d1, d2);
}

Distribution joint_distribution(const JointPair& pair) {
  const int d = pair.d1() + pair.d2();
  return std::visit(
      [&](const auto& n) -> Distribution {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, IndependentPair>) {
          Mat e1 = Mat::Zero(d, pair.d1());
          e1.topRows(pair.d1()).setIdentity();
          Mat e2 = Mat::Zero(d, pair.d2());
          e2.bottomRows(pair.d2()).setIdentity();
          return Distribution::indep_sum(Distribution::affine(e1, Vec::Zero(d), n.x1),
                                         Distribution::affine(e2, Vec::Zero(d), n.x2));
        } else if constexpr (std::is_same_v<T, CoupledAtoms>) {
          return Distribution::atoms(n.points, n.weights);
        } else if constexpr (std::is_same_v<T, LinearImage>) {
          if (const auto* ip = std::get_if<IndependentPair>(&n.base.node().v)) {
            const int b1 = n.base.d1();
            const int b2 = n.base.d2();
            return Distribution::indep_sum(
                Distribution::affine(n.matrix.leftCols(b1), Vec::Zero(d), ip->x1),
                Distribution::affine(n.matrix.rightCols(b2), Vec::Zero(d), ip->x2));
          }
          return Distribution::affine(n.matrix, Vec::Zero(d), joint_distribution(n.base));
        } else {
          return n.law;
        }
      },
      pair.node().v);
}

namespace {

Distribution marginal(const JointPair& pair, int which) {
  const int d = pair.d1() + pair.d2();
  const int start = which == 1 ? 0 : pair.d1();
  const int count = which == 1 ? pair.d1() : pair.d2();
  if (const auto* ip = std::get_if<IndependentPair>(&pair.node().v)) return which == 1 ? ip->x1 : ip->x2;
  if (const auto* li = std::get_if<LinearImage>(&pair.node().v)) {
    if (const auto* ip = std::get_if<IndependentPair>(&li->base.node().v)) {
      const int b1 = li->base.d1();
      const int b2 = li->base.d2();
      const Mat rows = li->matrix.middleRows(start, count);
      return Distribution::indep_sum(Distribution::affine(rows.leftCols(b1), Vec::Zero(count), ip->x1),
                                     Distribution::affine(rows.rightCols(b2), Vec::Zero(count), ip->x2));
    }
  }
  return Distribution::affine(block_selector(d, start, count), Vec::Zero(count), joint_distribution(pair));
}

}  // namespace

Distribution marginal1(const JointPair& pair) { return marginal(pair, 1); }
Distribution marginal2(const JointPair& pair) { return marginal(pair, 2); }

JointPair doubled(const JointPair& pair) {
  if (pair.d1() != pair.d2()) throw DimensionMismatch("doubling needs equal block dimensions");
  return JointPair::linear_image(doubling_matrix(pair.d1(), 1.0 / std::sqrt(2.0)), pair.d1(), pair);
}

JointPair sum_difference(const JointPair& pair) {
  if (pair.d1() != pair.d2()) throw DimensionMismatch("sum/difference needs equal block dimensions");
  return JointPair::linear_image(doubling_matrix(pair.d1(), 1.0), pair.d1(), pair);
}

JointPair smooth_pair(const JointPair& pair, const Mat& noise1, const Mat& noise2) {
  const int d1 = pair.d1();
  const int d2 = pair.d2();
  if (noise1.rows() != d1 || noise2.rows() != d2) throw DimensionMismatch("smooth_pair: noise dimensions");
  Mat n = Mat::Zero(d1 + d2, d1 + d2);
  n.topLeftCorner(d1, d1) = noise1;
  n.bottomRightCorner(d2, d2) = noise2;
  return JointPair::joint_law(smooth(joint_distribution(pair), n), d1);
}

}  // namespace bernstab
