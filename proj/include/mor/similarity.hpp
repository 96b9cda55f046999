#pragma once

// Output-similarity certification for pairs of LTI systems. The two systems
// are stacked into a composite whose error dynamics are certified by a single
// linear matrix inequality in (X, Pi, gamma, delta, mu, eta); the certificate
// carries the driving-input feedback F = Pi X^{-1} and a strictness margin
// epsilon extracted by bisection.
//
// Convention: the LMI's weight matrix R = diag(I, eta_lmi I) certifies
//   ||y1 - y2||^2 <= gamma ||u1-u2||^2 + delta ||col(u1,u2)||^2
//                    + mu ||d1||^2 - (1/eta_lmi) ||d2||^2,
// so the certificate stores eta := 1/eta_lmi, the coefficient that actually
// multiplies -||d2||^2 in the trajectory inequality.
//
// Certification runs in two stages: the weight optimization, then a
// conditioning polish that re-solves for (X, Pi) at fixed weights while
// maximizing the smallest eigenvalue of X and minimizing a bound rho with
// [[X, Pi'], [Pi, rho I]] >= 0. This keeps ||F|| <= sqrt(rho / sigma)
// moderate so the certified closed loop is integrable at reasonable steps.

#include <cmath>
#include <optional>
#include <string>

#include "mor/lmi.hpp"
#include "mor/lti.hpp"
#include "mor/matrix.hpp"
#include "mor/numkernels.hpp"

namespace mor {

struct NotStabilized : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct WeightPair {
  double gamma = 0, delta = 0, mu = 0, eta = 0;

  void validate() const {
    if (!(gamma > 0 && delta > 0 && mu > 0 && eta > 0))
      throw std::invalid_argument("WeightPair: all weights must be strictly positive");
  }
};

// Stacked error system
//   x' = A x + B d2 + E w,   z = C x + D d2,   w = col(u1, u2, d1)
// with A = blkdiag(A1, A2), B = [0; E2], E = [[B1, 0, E1], [0, B2, 0]],
// C = [[C1, -C2], [0, 0]], D = [0; I].
struct CompositeSystem {
  Mat A, B, E, C, D;
  StateSpace sys1, sys2;
  Eigen::Index n1 = 0, n2 = 0, m = 0, p = 0, q1 = 0, q2 = 0;

  Eigen::Index n() const { return n1 + n2; }
  Eigen::Index w_dim() const { return 2 * m + q1; }
  Eigen::Index z_dim() const { return p + q2; }
};

inline CompositeSystem build_composite(const StateSpace& sys1, const StateSpace& sys2) {
  require_dims(sys1.m() == sys2.m(), "build_composite: input dimensions differ");
  require_dims(sys1.p() == sys2.p(), "build_composite: output dimensions differ");

  CompositeSystem c;
  c.sys1 = sys1;
  c.sys2 = sys2;
  c.n1 = sys1.n();
  c.n2 = sys2.n();
  c.m = sys1.m();
  c.p = sys1.p();
  c.q1 = sys1.q();
  c.q2 = sys2.q();
  const Eigen::Index n = c.n();

  c.A = Mat::Zero(n, n);
  c.A.topLeftCorner(c.n1, c.n1) = sys1.A;
  c.A.bottomRightCorner(c.n2, c.n2) = sys2.A;

  c.B = Mat::Zero(n, c.q2);
  c.B.bottomRows(c.n2) = sys2.E;

  c.E = Mat::Zero(n, 2 * c.m + c.q1);
  c.E.topLeftCorner(c.n1, c.m) = sys1.B;
  c.E.block(c.n1, c.m, c.n2, c.m) = sys2.B;
  c.E.topRightCorner(c.n1, c.q1) = sys1.E;

  c.C = Mat::Zero(c.p + c.q2, n);
  c.C.topLeftCorner(c.p, c.n1) = sys1.C;
  c.C.block(0, c.n1, c.p, c.n2) = -sys2.C;

  c.D = Mat::Zero(c.p + c.q2, c.q2);
  c.D.bottomRows(c.q2) = Mat::Identity(c.q2, c.q2);
  return c;
}

struct SimilarityCertificate {
  WeightPair weights;  // eta in Definition-side convention (multiplies -||d2||^2)
  Mat X;               // symmetric positive definite
  Mat Pi;              // q2 x (n1+n2)
  Mat F;               // Pi X^{-1}
  double epsilon = 0.0;
  double lmi_margin = 0.0;  // most positive eigenvalue of the certified block
  std::string solver_config;
};

struct GainConstants {
  double l = 0.0;
  double k = 0.0;
};

struct SimilarityOptions {
  double x_floor = 1e-7;        // X >= x_floor * I
  double weight_relax = 1e-3;   // relative relaxation of fixed weights in the polish
  double sigma_cap = 1e6;       // cap on the conditioning slack
  LmiOptions lmi;
};

namespace detail {

// The certified block of the similarity inequality as an affine expression.
// gamma/delta/mu/eta_lmi may be variables or constants.
inline AffineMatrix affine_similarity_block(const CompositeSystem& comp,
                                            const AffineMatrix& x,
                                            const AffineMatrix* pi, const LinExpr& gamma,
                                            const LinExpr& delta, const LinExpr& mu,
                                            const LinExpr& eta_lmi) {
  const Eigen::Index n = comp.n(), m = comp.m, q1 = comp.q1, q2 = comp.q2;
  const Eigen::Index nw = comp.w_dim(), nz = comp.z_dim();
  AffineMatrix big(n + nw + nz, n + nw + nz);

  AffineMatrix half = comp.A * x;
  if (q2 > 0 && pi) half += comp.B * (*pi);
  big.set_block(0, 0, half + half.transpose());

  big.set_block(n, 0, AffineMatrix::constant(comp.E.transpose()));
  big.set_block(0, n, AffineMatrix::constant(comp.E));

  Mat im = Mat::Identity(m, m);
  AffineMatrix negdiag = expr_times(LinExpr(0.0) - gamma - delta, im);
  AffineMatrix posg = expr_times(gamma, im);
  big.set_block(n, n, negdiag);
  big.set_block(n + m, n + m, negdiag);
  big.set_block(n, n + m, posg);
  big.set_block(n + m, n, posg);
  if (q1 > 0)
    big.set_block(n + 2 * m, n + 2 * m,
                  expr_times(LinExpr(0.0) - mu, Mat::Identity(q1, q1)));

  AffineMatrix cz = comp.C * x;
  if (q2 > 0 && pi) cz += comp.D * (*pi);
  big.set_block(n + nw, 0, cz);
  big.set_block(0, n + nw, cz.transpose());

  big.set_block(n + nw, n + nw, AffineMatrix::constant(-Mat::Identity(comp.p, comp.p)));
  if (q2 > 0)
    big.set_block(n + nw + comp.p, n + nw + comp.p,
                  expr_times(LinExpr(0.0) - eta_lmi, Mat::Identity(q2, q2)));
  return big;
}

// Numerical evaluation of the certified block; w.eta is Definition-side, so
// the R block uses eta_lmi = 1 / w.eta. An epsilon > 0 perturbs the middle
// block exactly as replacing (delta, mu) by (delta - eps, mu - eps).
inline Mat similarity_block(const CompositeSystem& comp, const Mat& x, const Mat& pi,
                            const WeightPair& w, double epsilon = 0.0) {
  const Eigen::Index n = comp.n(), m = comp.m, q1 = comp.q1, q2 = comp.q2;
  const Eigen::Index nw = comp.w_dim(), nz = comp.z_dim();
  Mat big = Mat::Zero(n + nw + nz, n + nw + nz);
  Mat half = comp.A * x;
  if (q2 > 0) half += comp.B * pi;
  big.topLeftCorner(n, n) = half + half.transpose();
  big.block(n, 0, nw, n) = comp.E.transpose();
  big.block(0, n, n, nw) = comp.E;
  Mat q = Mat::Zero(nw, nw);
  q.topLeftCorner(m, m) = (w.gamma + w.delta) * Mat::Identity(m, m);
  q.block(m, m, m, m) = (w.gamma + w.delta) * Mat::Identity(m, m);
  q.block(0, m, m, m) = -w.gamma * Mat::Identity(m, m);
  q.block(m, 0, m, m) = -w.gamma * Mat::Identity(m, m);
  if (q1 > 0) q.bottomRightCorner(q1, q1) = w.mu * Mat::Identity(q1, q1);
  q -= epsilon * Mat::Identity(nw, nw);
  big.block(n, n, nw, nw) = -q;
  Mat cz = comp.C * x;
  if (q2 > 0) cz += comp.D * pi;
  big.block(n + nw, 0, nz, n) = cz;
  big.block(0, n + nw, n, nz) = cz.transpose();
  Mat r = Mat::Identity(nz, nz);
  if (q2 > 0) r.bottomRightCorner(q2, q2) *= 1.0 / w.eta;
  big.bottomRightCorner(nz, nz) = -r;
  return big;
}

// Largest epsilon in (0, min(delta, mu)] keeping the perturbed block negative
// definite; monotone bisection.
inline double extract_epsilon(const CompositeSystem& comp, const Mat& x, const Mat& pi,
                              const WeightPair& w, double lmi_margin) {
  double hi = std::min(w.delta, w.mu);
  double lo = 0.0;
  if (max_eig_sym(similarity_block(comp, x, pi, w, hi)) < 0.0) {
    lo = hi;
  } else {
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (max_eig_sym(similarity_block(comp, x, pi, w, mid)) < 0.0)
        lo = mid;
      else
        hi = mid;
    }
  }
  double eps = std::min(lo, std::abs(lmi_margin));
  eps = std::min(eps, std::min(w.delta, w.mu));
  return std::max(eps * (1.0 - 1e-9), std::numeric_limits<double>::min());
}

inline std::string solver_config_string(const LmiOptions& o) {
  return "barrier(mu=" + std::to_string(o.barrier_mu) +
         ",gap=" + std::to_string(o.gap_tol) + ",strict=" + std::to_string(o.strictness) + ")";
}

}  // namespace detail

// Assembled certification problem with variable handles. Objective modes:
//   MinimizeGammaPlusDelta : gamma, delta, mu, eta all free; minimize gamma+delta
//   FeasibilityAt          : gamma, delta fixed; minimize mu + eta_lmi
//   MinimizeGammaAtDelta   : delta fixed; minimize gamma
struct SimilarityLmi {
  enum class Mode { MinimizeGammaPlusDelta, FeasibilityAt, MinimizeGammaAtDelta };
  LmiProblem prob;
  Mode mode = Mode::MinimizeGammaPlusDelta;
  int hX = -1, hPi = -1, hGamma = -1, hDelta = -1, hMu = -1, hEta = -1;
  double fixed_gamma = 0.0, fixed_delta = 0.0;

  double gamma_of(const Vec& x) const {
    return hGamma >= 0 ? prob.scalar(hGamma).eval(x) : fixed_gamma;
  }
  double delta_of(const Vec& x) const {
    return hDelta >= 0 ? prob.scalar(hDelta).eval(x) : fixed_delta;
  }
  // Definition-side weights at a solution (eta inverted).
  WeightPair weights_of(const Vec& x) const {
    WeightPair w;
    w.gamma = gamma_of(x);
    w.delta = delta_of(x);
    w.mu = prob.scalar(hMu).eval(x);
    w.eta = 1.0 / prob.scalar(hEta).eval(x);
    return w;
  }
};

inline SimilarityLmi assemble_similarity_lmi(const CompositeSystem& comp,
                                             SimilarityLmi::Mode mode,
                                             WeightPair fixed = {},
                                             const SimilarityOptions& opts = {}) {
  SimilarityLmi s;
  s.mode = mode;
  const Eigen::Index n = comp.n(), q2 = comp.q2;

  s.hX = s.prob.add_symmetric("X", n);
  if (q2 > 0) s.hPi = s.prob.add_rectangular("Pi", q2, n);
  LinExpr gamma, delta;
  if (mode == SimilarityLmi::Mode::FeasibilityAt) {
    s.fixed_gamma = fixed.gamma;
    s.fixed_delta = fixed.delta;
    gamma = LinExpr(fixed.gamma);
    delta = LinExpr(fixed.delta);
  } else if (mode == SimilarityLmi::Mode::MinimizeGammaAtDelta) {
    s.hGamma = s.prob.add_scalar("gamma", true);
    s.fixed_delta = fixed.delta;
    gamma = s.prob.scalar(s.hGamma);
    delta = LinExpr(fixed.delta);
  } else {
    s.hGamma = s.prob.add_scalar("gamma", true);
    s.hDelta = s.prob.add_scalar("delta", true);
    gamma = s.prob.scalar(s.hGamma);
    delta = s.prob.scalar(s.hDelta);
  }
  s.hMu = s.prob.add_scalar("mu", true);
  s.hEta = s.prob.add_scalar("eta", true);

  AffineMatrix x = s.prob.ref(s.hX);
  std::optional<AffineMatrix> pi;
  if (q2 > 0) pi = s.prob.ref(s.hPi);
  AffineMatrix big = detail::affine_similarity_block(
      comp, x, pi ? &*pi : nullptr, gamma, delta, s.prob.scalar(s.hMu),
      s.prob.scalar(s.hEta));
  s.prob.add_constraint(big, "similarity");
  s.prob.add_constraint(Mat(-Mat::Identity(n, n)) * x +
                            AffineMatrix::constant(opts.x_floor * Mat::Identity(n, n)),
                        "X floor");

  if (mode == SimilarityLmi::Mode::MinimizeGammaPlusDelta)
    s.prob.set_objective(gamma + delta);
  else if (mode == SimilarityLmi::Mode::MinimizeGammaAtDelta)
    s.prob.set_objective(gamma);
  else
    s.prob.set_objective(s.prob.scalar(s.hMu) + s.prob.scalar(s.hEta));
  return s;
}

// Re-solves for (X, Pi) at fixed weights (Definition-side eta), optimizing
// conditioning, and assembles the certificate.
inline SimilarityCertificate certify_with_weights(const CompositeSystem& comp,
                                                  const WeightPair& weights,
                                                  const SimilarityOptions& opts = {}) {
  weights.validate();
  const Eigen::Index n = comp.n(), q2 = comp.q2;
  LmiProblem prob;
  int hx = prob.add_symmetric("X", n);
  int hpi = q2 > 0 ? prob.add_rectangular("Pi", q2, n) : -1;
  int hsigma = prob.add_scalar("sigma", true);
  int hrho = q2 > 0 ? prob.add_scalar("rho", true) : -1;
  // mu and eta stay variables capped by the given weights so their magnitude
  // never enters the constraint's constant term (and thus its strictness
  // margin); any solved value at or below the cap is a valid — possibly
  // stronger — certificate, reported verbatim.
  int hmu = prob.add_scalar("mu", true);
  int heta = prob.add_scalar("eta", true);
  {
    AffineMatrix mu_cap(1, 1), eta_cap(1, 1);
    mu_cap(0, 0) = prob.scalar(hmu) - LinExpr(weights.mu);
    eta_cap(0, 0) = prob.scalar(heta) - LinExpr(1.0 / weights.eta);
    prob.add_constraint(mu_cap);
    prob.add_constraint(eta_cap);
  }

  AffineMatrix x = prob.ref(hx);
  std::optional<AffineMatrix> pi;
  if (q2 > 0) pi = prob.ref(hpi);
  AffineMatrix big = detail::affine_similarity_block(
      comp, x, pi ? &*pi : nullptr, LinExpr(weights.gamma), LinExpr(weights.delta),
      prob.scalar(hmu), prob.scalar(heta));
  prob.add_constraint(big, "similarity");
  prob.add_constraint(Mat(-Mat::Identity(n, n)) * x +
                          AffineMatrix::constant(opts.x_floor * Mat::Identity(n, n)),
                      "X floor");
  // sigma I <= X, sigma <= cap
  prob.add_constraint(expr_times(prob.scalar(hsigma), Mat::Identity(n, n)) +
                      Mat(-Mat::Identity(n, n)) * x);
  AffineMatrix cap(1, 1);
  cap(0, 0) = prob.scalar(hsigma) - LinExpr(opts.sigma_cap);
  prob.add_constraint(cap);

  LinExpr objective = LinExpr(0.0) - prob.scalar(hsigma);
  if (q2 > 0) {
    // [[X, Pi'], [Pi, rho I]] >= 0 bounds Pi X^{-1} Pi' <= rho I
    AffineMatrix schur(n + q2, n + q2);
    schur.set_block(0, 0, Mat(-Mat::Identity(n, n)) * x);
    schur.set_block(0, n, Mat(-Mat::Identity(n, n)) * pi->transpose());
    schur.set_block(n, 0, Mat(-Mat::Identity(q2, q2)) * (*pi));
    schur.set_block(n, n,
                    expr_times(LinExpr(0.0) - prob.scalar(hrho), Mat::Identity(q2, q2)));
    prob.add_constraint(schur);
    objective += prob.scalar(hrho);
  }
  prob.set_objective(objective);

  auto sol = solve_lmi(prob, opts.lmi);
  if (!sol.feasible())
    throw NumericalFailure("certify_with_weights: polish stage not feasible");

  SimilarityCertificate cert;
  cert.weights = weights;
  cert.weights.mu = prob.scalar(hmu).eval(sol.x);
  cert.weights.eta = 1.0 / prob.scalar(heta).eval(sol.x);
  cert.X = symmetrize(prob.value(hx, sol.x));
  cert.Pi = q2 > 0 ? prob.value(hpi, sol.x) : Mat(0, n);
  cert.F = cert.Pi.size() > 0
               ? Mat(cert.X.ldlt().solve(cert.Pi.transpose()).transpose())
               : Mat(0, n);
  cert.lmi_margin =
      max_eig_sym(detail::similarity_block(comp, cert.X, cert.Pi, cert.weights));
  if (cert.lmi_margin >= 0.0)
    throw NumericalFailure("certify_with_weights: returned point violates the block");
  cert.epsilon =
      detail::extract_epsilon(comp, cert.X, cert.Pi, cert.weights, cert.lmi_margin);
  cert.solver_config = detail::solver_config_string(opts.lmi);
  return cert;
}

// Extraction without the polish stage (used when the solved problem's own
// variables are wanted verbatim).
inline SimilarityCertificate extract_certificate(const CompositeSystem& comp,
                                                 const SimilarityLmi& s,
                                                 const LmiSolution& sol,
                                                 const SimilarityOptions& opts = {}) {
  SimilarityCertificate cert;
  cert.weights = s.weights_of(sol.x);
  cert.X = symmetrize(s.prob.value(s.hX, sol.x));
  cert.Pi = s.hPi >= 0 ? s.prob.value(s.hPi, sol.x) : Mat(0, comp.n());
  cert.F = cert.Pi.size() > 0
               ? Mat(cert.X.ldlt().solve(cert.Pi.transpose()).transpose())
               : Mat(0, comp.n());
  cert.lmi_margin =
      max_eig_sym(detail::similarity_block(comp, cert.X, cert.Pi, cert.weights));
  cert.epsilon =
      detail::extract_epsilon(comp, cert.X, cert.Pi, cert.weights, cert.lmi_margin);
  cert.solver_config = detail::solver_config_string(opts.lmi);
  return cert;
}

namespace detail {

inline WeightPair relaxed(const WeightPair& w, double rel) {
  WeightPair r = w;
  // Relative relaxation plus an absolute bump: optimized weights may sit at
  // the solver floor where a purely relative nudge leaves no strict interior.
  r.mu = w.mu * (1.0 + rel) + 1e-6;
  r.eta = 1.0 / (1.0 / w.eta * (1.0 + rel) + 1e-6);  // eta_lmi = 1/eta relaxed up
  return r;
}

}  // namespace detail

inline std::optional<SimilarityCertificate> check_similarity(const StateSpace& sys1,
                                                             const StateSpace& sys2,
                                                             double gamma, double delta,
                                                             const SimilarityOptions& opts = {}) {
  if (!(gamma > 0 && delta > 0))
    throw std::invalid_argument("check_similarity: gamma and delta must be positive");
  CompositeSystem comp = build_composite(sys1, sys2);
  WeightPair fixed;
  fixed.gamma = gamma;
  fixed.delta = delta;
  auto s = assemble_similarity_lmi(comp, SimilarityLmi::Mode::FeasibilityAt, fixed, opts);
  auto sol = solve_lmi(s.prob, opts.lmi);
  if (sol.status == LmiSolution::Status::Infeasible) return std::nullopt;
  if (sol.status == LmiSolution::Status::Failure)
    throw NumericalFailure("check_similarity: solver stalled (not proven infeasible)");

  auto cert = certify_with_weights(
      comp, detail::relaxed(s.weights_of(sol.x), opts.weight_relax), opts);
  if (is_stable(sys1) && !spectrum(sys2.A).hurwitz())
    throw NumericalFailure(
        "check_similarity: certificate produced for an unstable second system");
  return cert;
}

// Minimal gamma at which the system certifies similarity with itself at the
// given delta.
inline std::pair<double, SimilarityCertificate> self_similarity_gamma(
    const StateSpace& sys, double delta, const SimilarityOptions& opts = {}) {
  if (!(delta > 0)) throw std::invalid_argument("self_similarity_gamma: delta must be positive");
  CompositeSystem comp = build_composite(sys, sys);
  WeightPair fixed;
  fixed.delta = delta;
  auto s = assemble_similarity_lmi(comp, SimilarityLmi::Mode::MinimizeGammaAtDelta, fixed, opts);
  auto sol = solve_lmi(s.prob, opts.lmi);
  if (!sol.feasible())
    throw NumericalFailure("self_similarity_gamma: certification failed");
  WeightPair w = detail::relaxed(s.weights_of(sol.x), opts.weight_relax);
  w.gamma = w.gamma * (1.0 + opts.weight_relax) + 1e-6;  // absolute bump: the
  // optimum may sit at the scalar floor with no strict interior left
  auto cert = certify_with_weights(comp, w, opts);
  return {cert.weights.gamma, cert};
}

// Smallest l (then smallest k at that l) such that along the closed loop
// x' = (A + B F) x + [E_u | E_d1] w, y = col(y1, y2):
//   ||y||^2 <= l ||col(u1, u2)||^2 + k ||d1||^2.
inline GainConstants compute_gain_constants(const SimilarityCertificate& cert,
                                            const CompositeSystem& comp,
                                            const LmiOptions& lmi_opts = {}) {
  const Eigen::Index n = comp.n(), m = comp.m, q1 = comp.q1;
  Mat acl = comp.A;
  if (comp.q2 > 0) acl += comp.B * cert.F;
  if (!spectrum(acl).hurwitz())
    throw NotStabilized("compute_gain_constants: A + BF is not Hurwitz");

  Mat cy = Mat::Zero(2 * comp.p, n);
  cy.topLeftCorner(comp.p, comp.n1) = comp.sys1.C;
  cy.bottomRightCorner(comp.p, comp.n2) = comp.sys2.C;
  Mat ctc = cy.transpose() * cy;

  auto solve_stage = [&](std::optional<double> fixed_l) -> std::pair<double, double> {
    LmiProblem prob;
    int hp = prob.add_symmetric("P", n);
    int hl = fixed_l ? -1 : prob.add_scalar("l", true);
    int hk = q1 > 0 ? prob.add_scalar("k", true) : -1;
    AffineMatrix p = prob.ref(hp);
    const Eigen::Index nb = 2 * m + q1;
    AffineMatrix big(n + nb, n + nb);
    AffineMatrix half = Mat(acl.transpose()) * p;
    big.set_block(0, 0, half + half.transpose() + AffineMatrix::constant(ctc));
    AffineMatrix pb = p * Mat(comp.E);
    big.set_block(0, n, pb);
    big.set_block(n, 0, pb.transpose());
    LinExpr l = fixed_l ? LinExpr(*fixed_l) : prob.scalar(hl);
    big.set_block(n, n, expr_times(LinExpr(0.0) - l, Mat::Identity(2 * m, 2 * m)));
    if (q1 > 0)
      big.set_block(n + 2 * m, n + 2 * m,
                    expr_times(LinExpr(0.0) - prob.scalar(hk), Mat::Identity(q1, q1)));
    prob.add_constraint(big);
    prob.add_constraint(Mat(-Mat::Identity(n, n)) * p);  // P > 0 (margin-strict)
    if (!fixed_l)
      prob.set_objective(prob.scalar(hl));
    else if (hk >= 0)
      prob.set_objective(prob.scalar(hk));
    auto sol = solve_lmi(prob, lmi_opts);
    if (!sol.feasible())
      throw NumericalFailure("compute_gain_constants: gain LMI not certified");
    return {fixed_l ? *fixed_l : prob.scalar(hl).eval(sol.x),
            hk >= 0 ? prob.scalar(hk).eval(sol.x) : lmi_opts.scalar_floor};
  };

  auto [l1, k1] = solve_stage(std::nullopt);
  GainConstants g;
  if (q1 > 0) {
    // Refix l slightly above its optimum so the k-stage has strict interior.
    g.l = l1 * (1.0 + 1e-2) + 1e-7;
    auto [l2, k2] = solve_stage(g.l);
    g.k = k2;
  } else {
    g.l = l1;
    g.k = k1;
  }
  return g;
}

struct BoundReport {
  double lhs = 0.0;        // ||y1 - y2||^2 over the horizon
  double rhs = 0.0;        // weighted input/disturbance budget
  double slack = 0.0;      // rhs - lhs
  double gamma_term = 0.0, delta_term = 0.0, mu_term = 0.0, eta_term = 0.0;
  double initial_state_term = 0.0;
  CoSimulation sim;
};

// Simulates the pair with the certified driving input d2 = F col(x1, x2) and
// evaluates both sides of the similarity inequality (all norms squared). An
// optional storage-metric K adds x0' K x0 to the budget.
inline BoundReport verify_similarity_on_trajectory(
    const SimilarityCertificate& cert, const StateSpace& sys1, const StateSpace& sys2,
    const Signal& u1, const Signal& u2, const Signal& d1, const Vec& x0, double horizon,
    double dt, const Mat* initial_state_metric = nullptr) {
  BoundReport rep;
  rep.sim = co_simulate_with_driving_input(sys1, sys2, cert.F, u1, u2, d1, x0, horizon, dt);
  const auto& cs = rep.sim;

  const double err = l2_norm_samples(cs.fom.outputs - cs.rom.outputs, dt);
  rep.lhs = err * err;

  Mat udiff = cs.fom.inputs - cs.rom.inputs;
  Mat ustack(cs.fom.inputs.rows(), cs.fom.inputs.cols() + cs.rom.inputs.cols());
  ustack << cs.fom.inputs, cs.rom.inputs;
  const double nud = l2_norm_samples(udiff, dt);
  const double nus = l2_norm_samples(ustack, dt);
  const double nd1 = l2_norm_samples(cs.fom.disturbances, dt);
  const double nd2 = l2_norm_samples(cs.rom.disturbances, dt);

  rep.gamma_term = cert.weights.gamma * nud * nud;
  rep.delta_term = (cert.weights.delta - cert.epsilon) * nus * nus;
  rep.mu_term = (cert.weights.mu - cert.epsilon) * nd1 * nd1;
  rep.eta_term = -cert.weights.eta * nd2 * nd2;
  if (initial_state_metric)
    rep.initial_state_term = x0.dot(*initial_state_metric * x0);
  rep.rhs = rep.gamma_term + rep.delta_term + rep.mu_term + rep.eta_term +
            rep.initial_state_term;
  rep.slack = rep.rhs - rep.lhs;
  return rep;
}

}  // namespace mor
