#pragma once

// Dense numerical kernels: Lyapunov/Sylvester (Bartels-Stewart on the
// complex Schur form), matrix exponential, spectra, and a game-type
// algebraic Riccati solver (Hamiltonian invariant subspace + Newton
// refinement).

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include <complex>
#include <stdexcept>
#include <vector>

#include "mor/matrix.hpp"

namespace mor {

struct SingularPencil : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SpectraOverlap : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NonConvergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ImaginaryAxisEigenvalues : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NoStabilizingSolution : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SpectrumReport {
  std::vector<std::complex<double>> eigenvalues;
  double max_real_part = 0.0;

  static constexpr double tol_hurwitz = 1e-10;
  bool hurwitz() const { return max_real_part < -tol_hurwitz; }
};

inline SpectrumReport spectrum(const Mat& a) {
  require_dims(a.rows() == a.cols(), "spectrum: matrix must be square");
  require_finite(a, "spectrum: A");
  Eigen::EigenSolver<Mat> es(a, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success)
    throw NonConvergence("spectrum: QR iteration did not converge");
  SpectrumReport rep;
  rep.eigenvalues.reserve(a.rows());
  rep.max_real_part = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    rep.eigenvalues.push_back(es.eigenvalues()(i));
    rep.max_real_part = std::max(rep.max_real_part, es.eigenvalues()(i).real());
  }
  if (a.rows() == 0) rep.max_real_part = -std::numeric_limits<double>::infinity();
  return rep;
}

// Solves A P + P A^T + W = 0 for symmetric W.
// Bartels-Stewart on the complex Schur form of A; the triangular system is
// solved column by column.
inline Mat solve_lyapunov(const Mat& a, const Mat& w) {
  const Eigen::Index n = a.rows();
  require_dims(a.cols() == n, "solve_lyapunov: A must be square");
  require_dims(w.rows() == n && w.cols() == n, "solve_lyapunov: W must match A");
  require_finite(a, "solve_lyapunov: A");
  require_finite(w, "solve_lyapunov: W");
  if (n == 0) return Mat(0, 0);

  Eigen::ComplexSchur<Mat> schur(a);
  if (schur.info() != Eigen::Success)
    throw NonConvergence("solve_lyapunov: Schur decomposition failed");
  const CMat u = schur.matrixU();
  const CMat t = schur.matrixT();

  // Solvability: no lambda_i + conj(lambda_j) near zero.
  const double anorm = std::max(1.0, a.norm());
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (std::abs(t(i, i) + std::conj(t(j, j))) < 1e-12 * anorm)
        throw SingularPencil("solve_lyapunov: eigenvalue pair sums to zero");

  // T Y + Y T^H = -U^H W U, solved for columns j = n-1 .. 0.
  CMat rhs = -(u.adjoint() * w * u);
  CMat y = CMat::Zero(n, n);
  CMat shifted(n, n);
  for (Eigen::Index j = n - 1; j >= 0; --j) {
    CVec b = rhs.col(j);
    for (Eigen::Index k = j + 1; k < n; ++k) b -= std::conj(t(j, k)) * y.col(k);
    shifted = t;
    shifted.diagonal().array() += std::conj(t(j, j));
    y.col(j) = shifted.triangularView<Eigen::Upper>().solve(b);
  }
  return symmetrize((u * y * u.adjoint()).real());
}

// Solves A T - T S = -W (so A T + W = T S, the moment-matching convention).
inline Mat solve_sylvester(const Mat& a, const Mat& s, const Mat& w) {
  const Eigen::Index n = a.rows(), r = s.rows();
  require_dims(a.cols() == n, "solve_sylvester: A must be square");
  require_dims(s.cols() == r, "solve_sylvester: S must be square");
  require_dims(w.rows() == n && w.cols() == r, "solve_sylvester: W must be n x r");
  require_finite(a, "solve_sylvester: A");
  require_finite(s, "solve_sylvester: S");
  require_finite(w, "solve_sylvester: W");
  if (n == 0 || r == 0) return Mat(n, r);

  Eigen::ComplexSchur<Mat> sa(a), ss(s);
  if (sa.info() != Eigen::Success || ss.info() != Eigen::Success)
    throw NonConvergence("solve_sylvester: Schur decomposition failed");
  const CMat ua = sa.matrixU(), ta = sa.matrixT();
  const CMat us = ss.matrixU(), ts = ss.matrixT();

  const double scale = std::max(1.0, std::max(a.norm(), s.norm()));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < r; ++j)
      if (std::abs(ta(i, i) - ts(j, j)) < 1e-12 * scale)
        throw SpectraOverlap("solve_sylvester: spec(A) and spec(S) overlap");

  // TA Y - Y TS = -UA^H W US, columns j = 0 .. r-1.
  CMat rhs = -(ua.adjoint() * w * us);
  CMat y = CMat::Zero(n, r);
  CMat shifted(n, n);
  for (Eigen::Index j = 0; j < r; ++j) {
    CVec b = rhs.col(j);
    for (Eigen::Index k = 0; k < j; ++k) b += ts(k, j) * y.col(k);
    shifted = ta;
    shifted.diagonal().array() -= ts(j, j);
    y.col(j) = shifted.triangularView<Eigen::Upper>().solve(b);
  }
  return (ua * y * us.adjoint()).real();
}

inline Mat matrix_exponential(const Mat& a, double t) {
  require_dims(a.rows() == a.cols(), "matrix_exponential: A must be square");
  require_finite(a, "matrix_exponential: A");
  if (!std::isfinite(t)) throw std::invalid_argument("matrix_exponential: t must be finite");
  if (t == 0.0) return Mat::Identity(a.rows(), a.cols());
  return Mat((t * a).exp());
}

namespace detail {

// One Newton step for R(P) = A'P + PA + Q0 + P M P = 0:
// solve (A + M P)' D + D (A + M P) + R(P) = 0 and return P + D.
inline Mat riccati_newton_step(const Mat& a, const Mat& m, const Mat& q0, const Mat& p) {
  Mat acl = a + m * p;
  Mat res = a.transpose() * p + p * a + q0 + p * m * p;
  Mat d = solve_lyapunov(acl.transpose(), symmetrize(res));
  return symmetrize(p + d);
}

inline double riccati_residual(const Mat& a, const Mat& m, const Mat& q0, const Mat& p) {
  Mat res = a.transpose() * p + p * a + q0 + p * m * p;
  return rel_residual(res, q0 + Mat::Identity(a.rows(), a.cols()));
}

}  // namespace detail

// Stabilizing solution of A'P + PA + Q0 + P M P = 0 with sign-indefinite M,
// via the stable invariant subspace of the Hamiltonian [[A, M], [-Q0, -A']],
// refined by Newton iterations. spec(A + M P) is strictly in the open left
// half plane on return.
inline Mat solve_riccati_hamiltonian(const Mat& a, const Mat& m, const Mat& q0,
                                     double residual_tol = 1e-9) {
  const Eigen::Index n = a.rows();
  require_dims(a.cols() == n && m.rows() == n && m.cols() == n && q0.rows() == n &&
                   q0.cols() == n,
               "solve_riccati_hamiltonian: dimension mismatch");

  if (m.norm() < 1e-14 * std::max(1.0, a.norm())) {
    // Degenerate quadratic term: plain Lyapunov equation A'P + PA + Q0 = 0.
    return solve_lyapunov(a.transpose(), symmetrize(q0));
  }

  Mat ham(2 * n, 2 * n);
  ham << a, m, -q0, -a.transpose();

  Eigen::ComplexEigenSolver<Mat> es(ham);
  if (es.info() != Eigen::Success)
    throw NonConvergence("solve_riccati_hamiltonian: eigensolver failed");

  const double axis_tol = 1e-9 * std::max(1.0, ham.norm());
  CMat basis(2 * n, n);
  Eigen::Index count = 0;
  for (Eigen::Index i = 0; i < 2 * n; ++i) {
    const double re = es.eigenvalues()(i).real();
    if (std::abs(re) < axis_tol)
      throw ImaginaryAxisEigenvalues(
          "solve_riccati_hamiltonian: Hamiltonian eigenvalue on the imaginary axis");
    if (re < 0) {
      if (count == n)
        throw NoStabilizingSolution("solve_riccati_hamiltonian: too many stable eigenvalues");
      basis.col(count++) = es.eigenvectors().col(i);
    }
  }
  if (count != n)
    throw NoStabilizingSolution(
        "solve_riccati_hamiltonian: stable subspace has wrong dimension");

  CMat u1 = basis.topRows(n), u2 = basis.bottomRows(n);
  Eigen::FullPivLU<CMat> lu(u1);
  if (!lu.isInvertible())
    throw NoStabilizingSolution("solve_riccati_hamiltonian: singular subspace basis");
  Mat p = symmetrize((u2 * lu.inverse()).real());

  // Newton refinement from the subspace solution.
  double res = detail::riccati_residual(a, m, q0, p);
  for (int it = 0; it < 30 && res > residual_tol; ++it) {
    Mat pn = detail::riccati_newton_step(a, m, q0, p);
    double rn = detail::riccati_residual(a, m, q0, pn);
    if (!std::isfinite(rn) || rn > res) break;
    p = pn;
    res = rn;
  }
  if (!spectrum(a + m * p).hurwitz())
    throw NoStabilizingSolution("solve_riccati_hamiltonian: closed loop not Hurwitz");
  return p;
}

// Game-type ARE
//   0 = A'P + PA + Cz' Rz Cz + P Bq Q^{-1} Bq' P - P Bd Rd^{-1} Bd' P
// with the stabilizing solution, i.e. spec(A - Bd Rd^{-1} Bd' P + Bq Q^{-1} Bq' P)
// in the open left half plane.
inline Mat solve_game_riccati(const Mat& a, const Mat& bq, const Mat& bd, const Mat& cz,
                              const Mat& q, const Mat& rd, const Mat& rz) {
  const Eigen::Index n = a.rows();
  require_dims(a.cols() == n, "solve_game_riccati: A must be square");
  require_dims(bq.rows() == n || bq.size() == 0, "solve_game_riccati: Bq rows");
  require_dims(bd.rows() == n || bd.size() == 0, "solve_game_riccati: Bd rows");
  require_dims(cz.cols() == n || cz.size() == 0, "solve_game_riccati: Cz cols");

  Mat m = Mat::Zero(n, n);
  if (bq.cols() > 0) m += bq * q.ldlt().solve(bq.transpose());
  if (bd.cols() > 0) m -= bd * rd.ldlt().solve(bd.transpose());
  Mat q0 = Mat::Zero(n, n);
  if (cz.rows() > 0) q0 = cz.transpose() * rz * cz;

  Mat p = solve_riccati_hamiltonian(a, m, symmetrize(q0), 1e-9);

  if (min_eig_sym(p) < -1e-8 * std::max(1.0, p.norm()))
    throw NoStabilizingSolution("solve_game_riccati: solution not positive semidefinite");
  if (detail::riccati_residual(a, m, q0, p) > 1e-7)
    throw NonConvergence("solve_game_riccati: residual above tolerance");
  return p;
}

}  // namespace mor
