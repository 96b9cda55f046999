#pragma once

// Closed-loop guarantees: when a stabilizing controller designed for a
// certified reduced model closes the loop on the full model, the full-model
// output norm admits an explicit bound built from the plant pair's
// similarity constants and an output-gain profile of the controller. This
// header profiles controllers, evaluates the bound coefficients, and
// validates the bound by joint closed-loop co-simulation.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

#include "mor/similarity.hpp"

namespace mor {

struct UnstableController : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Smallest l1 (then smallest k1) such that ||y||^2 <= l1 ||u||^2 + k1 ||d||^2
// for a single stable system, via the bounded-real-style LMI
//   [A'P + PA + C'C,  PB,     PE  ]
//   [B'P,            -l1 I,   0   ]  < 0,   P > 0.
//   [E'P,             0,     -k1 I]
inline GainConstants single_system_gains(const StateSpace& sys,
                                         const LmiOptions& lmi_opts = {}) {
  if (!is_stable(sys))
    throw UnstableController("single_system_gains: system is not stable");
  const Eigen::Index n = sys.n(), m = sys.m(), q = sys.q();
  Mat ctc = sys.C.transpose() * sys.C;
  Mat e_stack(n, m + q);
  e_stack << sys.B, sys.E;

  auto solve_stage = [&](std::optional<double> fixed_l) -> std::pair<double, double> {
    LmiProblem prob;
    int hp = prob.add_symmetric("P", n);
    int hl = fixed_l ? -1 : prob.add_scalar("l1", true);
    int hk = q > 0 ? prob.add_scalar("k1", true) : -1;
    AffineMatrix p = prob.ref(hp);
    AffineMatrix big(n + m + q, n + m + q);
    AffineMatrix half = Mat(sys.A.transpose()) * p;
    big.set_block(0, 0, half + half.transpose() + AffineMatrix::constant(ctc));
    AffineMatrix pe = p * e_stack;
    big.set_block(0, n, pe);
    big.set_block(n, 0, pe.transpose());
    LinExpr l = fixed_l ? LinExpr(*fixed_l) : prob.scalar(hl);
    big.set_block(n, n, expr_times(LinExpr(0.0) - l, Mat::Identity(m, m)));
    if (q > 0)
      big.set_block(n + m, n + m,
                    expr_times(LinExpr(0.0) - prob.scalar(hk), Mat::Identity(q, q)));
    prob.add_constraint(big);
    prob.add_constraint(Mat(-Mat::Identity(n, n)) * p);
    if (!fixed_l)
      prob.set_objective(prob.scalar(hl));
    else if (hk >= 0)
      prob.set_objective(prob.scalar(hk));
    auto sol = solve_lmi(prob, lmi_opts);
    if (!sol.feasible())
      throw NumericalFailure("single_system_gains: gain LMI not certified");
    return {fixed_l ? *fixed_l : prob.scalar(hl).eval(sol.x),
            hk >= 0 ? prob.scalar(hk).eval(sol.x) : lmi_opts.scalar_floor};
  };

  auto [l1, k1] = solve_stage(std::nullopt);
  GainConstants g;
  if (q > 0) {
    g.l = l1 * (1.0 + 1e-2) + 1e-7;  // refix above the optimum for interior
    g.k = solve_stage(g.l).second;
  } else {
    g.l = l1;
    g.k = k1;
  }
  return g;
}

// Output-gain and self-similarity profile of a stable controller.
struct ControllerProfile {
  StateSpace controller;
  double l1 = 0.0, k1 = 0.0;        // ||y_K||^2 <= l1 ||u_K||^2 + k1 ||d_K||^2
  double gamma_K = 0.0, delta_K = 0.0;
  Mat Qhat;                          // 2x2 scalar-block representative
  double lambda_max_Qhat = 0.0;
  double l = 0.0;                    // l1 + lambda_max(Qhat)
  // Second-pair similarity constants taken from the controller's
  // self-similarity certificate.
  double gamma2 = 0.0, delta2 = 0.0, epsilon2 = 0.0, mu2 = 0.0, eta2 = 0.0;
  SimilarityCertificate self_cert;
};

inline ControllerProfile profile_controller(const StateSpace& K, double delta_K,
                                            const SimilarityOptions& opts = {}) {
  if (!is_stable(K)) throw UnstableController("profile_controller: controller unstable");
  ControllerProfile prof;
  prof.controller = K;
  auto gains = single_system_gains(K, opts.lmi);
  prof.l1 = gains.l;
  prof.k1 = gains.k;
  prof.delta_K = delta_K;
  auto [gk, cert] = self_similarity_gamma(K, delta_K, opts);
  prof.gamma_K = gk;
  prof.self_cert = cert;
  prof.gamma2 = cert.weights.gamma;
  prof.delta2 = cert.weights.delta;
  prof.epsilon2 = cert.epsilon;
  prof.mu2 = cert.weights.mu;
  prof.eta2 = cert.weights.eta;

  const double a = 2.0 * (prof.gamma_K + delta_K + prof.l1);
  prof.Qhat = Mat(2, 2);
  prof.Qhat << a, -2.0 * prof.gamma_K, -2.0 * prof.gamma_K, a;
  prof.lambda_max_Qhat = a + 2.0 * prof.gamma_K;
  prof.l = prof.l1 + prof.lambda_max_Qhat;
  return prof;
}

// Signal L2 norms (not squared) entering the closed-loop bound; e1/e2 are the
// external references of the plant and controller summing junctions.
struct ClosedLoopNorms {
  double e1_diff = 0.0, e2_diff = 0.0;   // ||e1 - e1'||, ||e2 - e2'||
  double e1_stack = 0.0, e2_stack = 0.0; // ||col(e1, e1')||, ||col(e2, e2')||
  double y1_rom = 0.0;                   // ||y1'|| (reduced closed loop output)
  double d1 = 0.0, d1_rom = 0.0;         // ||d1||, ||d1'||
  double d2 = 0.0, d2_rom = 0.0;         // controller-channel disturbances
};

struct ClosedLoopBound {
  bool applicable = true;
  std::string violated_hypothesis;
  double eps_tilde = 0.0;
  double denom = 0.0;        // 1 - eps_tilde^2 gamma1 gamma2
  double sqrt_shrink = 0.0;  // sqrt((2 et g1 (d2-e2) + 2 l (d1-e1)) / denom)
  double lhs_coefficient = 0.0;  // 1 - sqrt_shrink, multiplies ||y1||
  double coef_e1_diff = 0.0, coef_e2_diff = 0.0;
  double coef_e1_stack = 0.0, coef_e2_stack = 0.0;
  double coef_y1_rom = 0.0;  // 1 + sqrt_shrink
  double coef_d1 = 0.0, coef_d1_rom = 0.0;
  double coef_d2_sq = 0.0, coef_d2_rom_sq = 0.0;  // inside the combined root
  double k = 0.0;            // k1 + 2(mu1 + k1)
  double rhs = 0.0;          // evaluated RHS given scenario norms
  double y1_bound = 0.0;     // rhs / lhs_coefficient
};

// Core evaluation from raw constants; pair 1 is the plant FOM/ROM pair, pair
// 2 the controller against itself.
inline ClosedLoopBound closed_loop_bound_from_constants(
    double g1, double d1, double e1, double mu1, double eta1, double g2, double d2,
    double e2, double mu2, double eta2, double gamma_K, double l, double k1,
    double nu, const ClosedLoopNorms& norms = {}) {
  if (!(nu > 0.0))
    throw std::invalid_argument("closed_loop_bound: nu must be positive");
  ClosedLoopBound b;
  b.eps_tilde = 1.0 + nu;
  b.k = k1 + 2.0 * (mu1 + k1);
  b.denom = 1.0 - b.eps_tilde * b.eps_tilde * g1 * g2;
  if (1.0 - b.eps_tilde * g1 * gamma_K <= 0.0) {
    b.applicable = false;
    b.violated_hypothesis = "1 - (1+nu) * gamma1 * gammaK = " +
                            std::to_string(1.0 - b.eps_tilde * g1 * gamma_K) +
                            " <= 0";
    return b;
  }
  if (b.denom <= 0.0) {
    b.applicable = false;
    b.violated_hypothesis =
        "1 - (1+nu)^2 * gamma1 * gamma2 = " + std::to_string(b.denom) + " <= 0";
    return b;
  }
  const double shrink_sq =
      (2.0 * b.eps_tilde * g1 * (d2 - e2) + 2.0 * l * (d1 - e1)) / b.denom;
  b.sqrt_shrink = std::sqrt(std::max(0.0, shrink_sq));
  b.lhs_coefficient = 1.0 - b.sqrt_shrink;
  if (b.lhs_coefficient <= 0.0) {
    b.applicable = false;
    b.violated_hypothesis = "1 - sqrt((2(1+nu)gamma1(delta2-eps2) + "
                            "2l(delta1-eps1))/denominator) = " +
                            std::to_string(b.lhs_coefficient) + " <= 0";
    return b;
  }
  b.coef_e1_diff = std::sqrt(b.eps_tilde * g1 / (nu * b.denom));
  b.coef_e2_diff = std::sqrt(b.eps_tilde * g1 * g2 / (nu * b.denom));
  b.coef_e1_stack = std::sqrt(2.0 * (d1 - e1) / b.denom);
  b.coef_e2_stack = b.sqrt_shrink;
  b.coef_y1_rom = 1.0 + b.sqrt_shrink;
  b.coef_d1 = std::sqrt((mu1 - e1 + 2.0 * b.k * (d1 - e1)) / b.denom);
  b.coef_d1_rom = std::sqrt(eta1 / b.denom);
  b.coef_d2_sq = b.eps_tilde * g1 * (mu2 - e2) / b.denom;
  b.coef_d2_rom_sq = b.eps_tilde * g1 * eta2 / b.denom;

  b.rhs = b.coef_e1_diff * norms.e1_diff + b.coef_e2_diff * norms.e2_diff +
          b.coef_e1_stack * norms.e1_stack + b.coef_e2_stack * norms.e2_stack +
          b.coef_y1_rom * norms.y1_rom + b.coef_d1 * norms.d1 +
          b.coef_d1_rom * norms.d1_rom +
          std::sqrt(b.coef_d2_sq * norms.d2 * norms.d2 +
                    b.coef_d2_rom_sq * norms.d2_rom * norms.d2_rom);
  b.y1_bound = b.rhs / b.lhs_coefficient;
  return b;
}

inline ClosedLoopBound closed_loop_bound(const SimilarityCertificate& plant_cert,
                                         const ControllerProfile& prof, double nu,
                                         const ClosedLoopNorms& norms = {}) {
  const auto& w = plant_cert.weights;
  return closed_loop_bound_from_constants(
      w.gamma, w.delta, plant_cert.epsilon, w.mu, w.eta, prof.gamma2, prof.delta2,
      prof.epsilon2, prof.mu2, prof.eta2, prof.gamma_K, prof.l, prof.k1, nu, norms);
}

// Joint closed-loop comparison: the controller closes the loop on the FOM
// (plant input e1 - y_K, controller input e2 - y1) and, in parallel, an
// identical controller copy closes the loop on the ROM, with the ROM driven
// by its certificate's state-feedback disturbance d1' = F col(x1, x1').
struct ClosedLoopReport {
  double y1_norm = 0.0, y1_rom_norm = 0.0, err_norm = 0.0;
  ClosedLoopNorms norms;
  ClosedLoopBound bound;
  bool satisfied = false;  // y1_norm <= bound (when applicable)
};

inline ClosedLoopReport closed_loop_compare(const StateSpace& fom,
                                            const StateSpace& rom,
                                            const SimilarityCertificate& cert,
                                            const ControllerProfile& prof, double nu,
                                            const Signal& e1, const Signal& e1_rom,
                                            const Signal& e2, const Signal& e2_rom,
                                            const Signal& d1, double horizon,
                                            double dt) {
  const StateSpace& K = prof.controller;
  require_dims(K.m() == fom.p() && K.p() == fom.m(),
               "closed_loop_compare: controller I/O must match the plant");
  require_dims(rom.m() == fom.m() && rom.p() == fom.p(),
               "closed_loop_compare: plant pair port mismatch");
  require_dims(e1.dim() == fom.m() && e2.dim() == K.m() && d1.dim() == fom.q(),
               "closed_loop_compare: signal dimensions");
  const Eigen::Index n1 = fom.n(), nk = K.n(), n2 = rom.n();
  require_dims(cert.F.cols() == n1 + n2, "closed_loop_compare: certificate F");
  const Eigen::Index n = n1 + nk + n2 + nk;
  const Eigen::Index o1 = 0, ok = n1, o2 = n1 + nk, ok2 = n1 + nk + n2;

  Mat acl = Mat::Zero(n, n);
  acl.block(o1, o1, n1, n1) = fom.A;
  acl.block(o1, ok, n1, nk) = -fom.B * K.C;
  acl.block(ok, ok, nk, nk) = K.A;
  acl.block(ok, o1, nk, n1) = -K.B * fom.C;
  acl.block(o2, o2, n2, n2) = rom.A;
  acl.block(o2, ok2, n2, nk) = -rom.B * K.C;
  acl.block(ok2, ok2, nk, nk) = K.A;
  acl.block(ok2, o2, nk, n2) = -K.B * rom.C;
  if (rom.q() > 0) {
    acl.block(o2, o1, n2, n1) += rom.E * cert.F.leftCols(n1);
    acl.block(o2, o2, n2, n2) += rom.E * cert.F.rightCols(n2);
  }

  auto forcing = [&](double t) -> Vec {
    Vec f = Vec::Zero(n);
    f.segment(o1, n1) = fom.B * e1(t);
    f.segment(ok, nk) = K.B * e2(t);
    f.segment(o2, n2) = rom.B * e1_rom(t);
    f.segment(ok2, nk) = K.B * e2_rom(t);
    if (fom.q() > 0) f.segment(o1, n1) += fom.E * d1(t);
    return f;
  };

  Mat states = detail::integrate_rk4(acl, forcing, Vec::Zero(n), horizon, dt);
  const Eigen::Index npts = states.rows();

  Mat y1 = states.middleCols(o1, n1) * fom.C.transpose();
  Mat y1r = states.middleCols(o2, n2) * rom.C.transpose();
  Mat e1s(npts, e1.dim()), e1rs(npts, e1.dim()), e2s(npts, e2.dim()),
      e2rs(npts, e2.dim()), d1s(npts, fom.q());
  for (Eigen::Index s = 0; s < npts; ++s) {
    const double t = double(s) * dt;
    e1s.row(s) = e1(t).transpose();
    e1rs.row(s) = e1_rom(t).transpose();
    e2s.row(s) = e2(t).transpose();
    e2rs.row(s) = e2_rom(t).transpose();
    if (fom.q() > 0) d1s.row(s) = d1(t).transpose();
  }
  Mat joint(npts, n1 + n2);
  joint << states.middleCols(o1, n1), states.middleCols(o2, n2);
  Mat d1r = rom.q() > 0 ? Mat(joint * cert.F.transpose()) : Mat(npts, 0);

  auto stack = [](const Mat& a, const Mat& b) {
    Mat m(a.rows(), a.cols() + b.cols());
    m << a, b;
    return m;
  };
  ClosedLoopReport rep;
  rep.y1_norm = l2_norm_samples(y1, dt);
  rep.y1_rom_norm = l2_norm_samples(y1r, dt);
  rep.err_norm = l2_norm_samples(y1 - y1r, dt);
  rep.norms.e1_diff = l2_norm_samples(e1s - e1rs, dt);
  rep.norms.e2_diff = l2_norm_samples(e2s - e2rs, dt);
  rep.norms.e1_stack = l2_norm_samples(stack(e1s, e1rs), dt);
  rep.norms.e2_stack = l2_norm_samples(stack(e2s, e2rs), dt);
  rep.norms.y1_rom = rep.y1_rom_norm;
  rep.norms.d1 = l2_norm_samples(d1s, dt);
  rep.norms.d1_rom = l2_norm_samples(d1r, dt);
  rep.bound = closed_loop_bound(cert, prof, nu, rep.norms);
  rep.satisfied = rep.bound.applicable &&
                  rep.y1_norm <= rep.bound.y1_bound * (1.0 + 1e-9) + 1e-12;
  return rep;
}

}  // namespace mor
