#pragma once

// Riccati-based cross-validation of similarity certificates: an LQ algebraic
// Riccati equation whose stabilizing solution lower-bounds the game-type
// Riccati solution, a zero-sum game ARE equivalent to the similarity LMI,
// storage matrices for trajectories with nonzero initial state, and a
// dissipation-inequality check along simulated trajectories.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "mor/similarity.hpp"

namespace mor {

struct ImaginaryAxisZeros : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// Input-channel weight Q(gamma, delta, mu) over w = col(u1, u2, d1).
inline Mat weight_q(const CompositeSystem& comp, const WeightPair& w) {
  const Eigen::Index m = comp.m, q1 = comp.q1;
  Mat q = Mat::Zero(comp.w_dim(), comp.w_dim());
  q.topLeftCorner(m, m) = (w.gamma + w.delta) * Mat::Identity(m, m);
  q.block(0, m, m, m) = -w.gamma * Mat::Identity(m, m);
  q.block(m, 0, m, m) = -w.gamma * Mat::Identity(m, m);
  q.block(m, m, m, m) = (w.gamma + w.delta) * Mat::Identity(m, m);
  if (q1 > 0) q.bottomRightCorner(q1, q1) = w.mu * Mat::Identity(q1, q1);
  return q;
}

// Output-channel weight R over z = col(y1 - y2, d2) in the supply rate
// w'Qw - z'Rz: the stored eta multiplies ||d2||^2 directly. (The feasibility
// LMI carries this block inverted through its Schur complement, which is why
// its matching entry there is 1/eta.)
inline Mat weight_r(const CompositeSystem& comp, const WeightPair& w) {
  Mat r = Mat::Identity(comp.z_dim(), comp.z_dim());
  if (comp.q2 > 0)
    r.bottomRightCorner(comp.q2, comp.q2) *= w.eta;
  return r;
}

// Invariant zeros of the driving-input channel (A, B, C, D): since D = [0; I]
// has full column rank and D'RC = 0, lambda is a zero exactly when it is an
// eigenvalue of A whose eigenvector lies in ker C. Throws when such a zero
// sits on the imaginary axis.
inline void require_no_imaginary_axis_zeros(const CompositeSystem& comp,
                                            double tol = 1e-8) {
  Eigen::EigenSolver<Mat> es(comp.A);
  if (es.info() != Eigen::Success)
    throw NonConvergence("require_no_imaginary_axis_zeros: eigensolver failed");
  const double cscale = std::max(1.0, comp.C.norm());
  for (Eigen::Index i = 0; i < comp.A.rows(); ++i) {
    if (std::abs(es.eigenvalues()(i).real()) > tol) continue;
    CVec v = es.eigenvectors().col(i);
    if ((comp.C.cast<std::complex<double>>() * v).norm() <= tol * cscale * v.norm())
      throw ImaginaryAxisZeros(
          "composite driving-input channel has an invariant zero at Re = " +
          std::to_string(es.eigenvalues()(i).real()) + ", Im = " +
          std::to_string(es.eigenvalues()(i).imag()));
  }
}

namespace detail {

// Stabilizing solution H of A'H + HA - HB rd^{-1} B'H + C'Rz C = 0 with
// spec(A - B rd^{-1} B' H) in the open left half plane.
inline Mat lq_riccati(const Mat& a, const Mat& b, const Mat& c, const Mat& rd,
                      const Mat& rz) {
  Mat h = solve_game_riccati(a, Mat(a.rows(), 0), b, c, Mat(0, 0), rd, rz);
  Mat acl = a;
  if (b.cols() > 0) acl -= b * rd.ldlt().solve(b.transpose() * h);
  if (!spectrum(acl).hurwitz())
    throw NoStabilizingSolution("lq_riccati: closed loop is not Hurwitz");
  return h;
}

}  // namespace detail

// LQ Riccati certificate for the w = 0 channel of the composite.
inline Mat lq_riccati_certificate(const CompositeSystem& comp, const WeightPair& w) {
  require_no_imaginary_axis_zeros(comp);
  Mat rz = weight_r(comp, w);
  Mat rd(comp.q2, comp.q2);
  if (comp.q2 > 0) rd = w.eta * Mat::Identity(comp.q2, comp.q2);  // D'RD with D = [0; I]
  return detail::lq_riccati(comp.A, comp.B, comp.C, rd, rz);
}

struct RiccatiCertificate {
  Mat P;                   // game ARE solution
  Mat H;                   // LQ ARE solution (lower bound)
  Mat F;                   // -(D'RD)^{-1} B'P
  Mat K;                   // end-point penalty P + margin * I
  SpectrumReport closed_loop_spectrum;  // spec(A - B(D'RD)^{-1}B'P + EQ^{-1}E'P)
  double are_residual_rel = 0.0;
  double min_eig_p_minus_h = 0.0;
};

inline RiccatiCertificate game_riccati_certificate(const CompositeSystem& comp,
                                                   const WeightPair& w) {
  require_no_imaginary_axis_zeros(comp);
  Mat qw = weight_q(comp, w);
  Mat rz = weight_r(comp, w);
  Mat rd = w.eta * Mat::Identity(comp.q2, comp.q2);  // D'RD with D = [0; I]

  RiccatiCertificate cert;
  cert.P = solve_game_riccati(comp.A, comp.E, comp.B, comp.C, qw, rd, rz);

  Mat ctc = comp.C.transpose() * rz * comp.C;
  Mat gain_q = comp.E * qw.ldlt().solve(comp.E.transpose() * cert.P);
  Mat gain_d = comp.B * rd.ldlt().solve(comp.B.transpose() * cert.P);
  Mat residual = comp.A.transpose() * cert.P + cert.P * comp.A + ctc +
                 cert.P * gain_q - cert.P * gain_d;
  cert.are_residual_rel =
      residual.norm() /
      std::max(1.0, ctc.norm() + (cert.P * comp.A).norm() + (cert.P * gain_q).norm() +
                        (cert.P * gain_d).norm());
  if (cert.are_residual_rel > 1e-7)
    throw NoStabilizingSolution("game_riccati_certificate: ARE residual " +
                                std::to_string(cert.are_residual_rel));

  cert.closed_loop_spectrum = spectrum(Mat(comp.A - gain_d + gain_q));
  if (!(cert.closed_loop_spectrum.max_real_part < -1e-8))
    throw NoStabilizingSolution(
        "game_riccati_certificate: closed-loop spectrum not in the open left "
        "half plane");

  cert.F = -rd.ldlt().solve(comp.B.transpose() * cert.P);

  cert.H = lq_riccati_certificate(comp, w);
  Eigen::SelfAdjointEigenSolver<Mat> es(
      Mat(0.5 * (cert.P - cert.H + (cert.P - cert.H).transpose())));
  cert.min_eig_p_minus_h = es.eigenvalues().minCoeff();
  if (cert.min_eig_p_minus_h < -1e-8 * std::max(1.0, cert.P.norm()))
    throw NoStabilizingSolution(
        "game_riccati_certificate: game solution does not dominate the LQ "
        "solution");

  cert.K = cert.P + 1e-6 * (1.0 + cert.P.norm()) * Mat::Identity(comp.n(), comp.n());
  return cert;
}

// Dissipation-inequality audit: integrates x' = (A + BF) x + E w from x0 and
// reports the worst violation of
//   V(x(t)) <= V(x(0)) + int_0^t [ w'Qw - z'Rz ] ds,   V(x) = x' P x,
// over the sample grid. Reports, never throws, on violation.
struct DissipationReport {
  double worst_violation = 0.0;  // max over t of V(t) - V(0) - integral
  double integral_scale = 0.0;   // max over t of |integral| (for tolerances)
  Eigen::Index samples = 0;
};

inline DissipationReport dissipativity_check(const CompositeSystem& comp, const Mat& F,
                                             const Mat& P, const WeightPair& w,
                                             const Signal& wsig, const Vec& x0,
                                             double horizon, double dt) {
  require_dims(F.rows() == comp.q2 && F.cols() == comp.n(),
               "dissipativity_check: F dimensions");
  require_dims(wsig.dim() == comp.w_dim(), "dissipativity_check: w dimension");
  Mat qw = weight_q(comp, w);
  Mat rz = weight_r(comp, w);
  Mat acl = comp.A + comp.B * F;
  Mat cz = comp.C + comp.D * F;

  // The supply rate is integrated as an extra Runge-Kutta state so the
  // quadrature error matches the O(dt^4) state integration error; a sampled
  // trapezoid rule would cap the audit's resolution near dt^2.
  auto rate_at = [&](double t, const Vec& x) {
    const Vec wv = wsig(t);
    const Vec z = cz * x;
    return wv.dot(qw * wv) - z.dot(rz * z);
  };
  const auto steps = Eigen::Index(std::llround(horizon / dt));

  DissipationReport rep;
  rep.samples = steps + 1;
  const double v0 = x0.dot(P * x0);
  Vec x = x0;
  double integral = 0.0, t = 0.0;
  for (Eigen::Index s = 0;; ++s) {
    rep.integral_scale = std::max(rep.integral_scale, std::abs(integral));
    rep.worst_violation = std::max(rep.worst_violation, x.dot(P * x) - v0 - integral);
    if (s == steps) break;
    const Vec k1 = acl * x + comp.E * wsig(t);
    const double r1 = rate_at(t, x);
    const Vec x2 = x + 0.5 * dt * k1;
    const Vec k2 = acl * x2 + comp.E * wsig(t + 0.5 * dt);
    const double r2 = rate_at(t + 0.5 * dt, x2);
    const Vec x3 = x + 0.5 * dt * k2;
    const Vec k3 = acl * x3 + comp.E * wsig(t + 0.5 * dt);
    const double r3 = rate_at(t + 0.5 * dt, x3);
    const Vec x4 = x + dt * k3;
    const Vec k4 = acl * x4 + comp.E * wsig(t + dt);
    const double r4 = rate_at(t + dt, x4);
    x += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    integral += (dt / 6.0) * (r1 + 2.0 * r2 + 2.0 * r3 + r4);
    t = double(s + 1) * dt;
    if (!x.allFinite()) {
      // A diverging audited loop is the strongest possible violation.
      rep.worst_violation = std::numeric_limits<double>::infinity();
      return rep;
    }
  }
  return rep;
}

}  // namespace mor
