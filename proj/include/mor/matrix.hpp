#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>

namespace mor {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;

struct DimensionMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NonFiniteMatrix : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

inline void require_finite(const Mat& m, const std::string& what) {
  if (!m.allFinite()) throw NonFiniteMatrix(what + " contains NaN or Inf");
}

inline void require_dims(bool ok, const std::string& msg) {
  if (!ok) throw DimensionMismatch(msg);
}

inline Mat symmetrize(const Mat& m) { return 0.5 * (m + m.transpose()); }

inline double min_eig_sym(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

inline double max_eig_sym(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

// Frobenius-relative residual scale used by the equation solvers.
inline double rel_residual(const Mat& residual, const Mat& rhs) {
  return residual.norm() / std::max(1.0, rhs.norm());
}

}  // namespace mor
