#pragma once

#include <Eigen/Dense>

namespace conjlab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Operator 2-norm (largest singular value). All certificate checks use
/// this norm; the vector norm is the Euclidean one throughout.
inline double opnorm(const Mat& m) {
  if (m.size() == 0) return 0.0;
  if (m.rows() == 1 && m.cols() == 1) return std::abs(m(0, 0));
  return m.jacobiSvd().singularValues()(0);
}

inline Vec vec1(double x) {
  Vec v(1);
  v(0) = x;
  return v;
}

}  // namespace conjlab
