#pragma once

// Synthesis of reduced-order models: balanced truncation with its error
// bound, the moment-matching family, and three certified reduction programs:
//   reduce_p1  - free ROM matrices, bilinear problem solved by alternating
//                convex search (ACS);
//   reduce_pmm - moment-matching family, only the input map B2 is free;
//   reduce_pbt - fixed balanced-truncation ROM, a single convex solve.
// Every returned ROM carries a similarity certificate re-validated against
// the original (unscaled) full-order model.

#include <algorithm>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mor/similarity.hpp"

namespace mor {

struct UnstableInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct RankDeficientGramian : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NotObservablePair : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InitializationInfeasible : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NonMonotoneAbort : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SpectrumCollision : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Diagonal pre-balancing. LMIs are solved on coordinates x = D * x_hat chosen
// to equalize row/column norms of the system matrices (Osborne-style sweeps);
// certificates are congruence-mapped back to the original coordinates.
// ---------------------------------------------------------------------------
struct ScaledRealization {
  StateSpace sys;  // the rescaled system
  Vec d;           // x_original = d.asDiagonal() * x_scaled
};

inline ScaledRealization prebalance(const StateSpace& sys) {
  const Eigen::Index n = sys.n();
  Vec d = Vec::Ones(n);
  for (int sweep = 0; sweep < 20; ++sweep) {
    double change = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double col = 0.0, row = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) continue;
        const double aji = sys.A(j, i) * d(i) / d(j);
        const double aij = sys.A(i, j) * d(j) / d(i);
        col += aji * aji;
        row += aij * aij;
      }
      col += (sys.C.col(i) * d(i)).squaredNorm();
      row += (sys.B.row(i) / d(i)).squaredNorm();
      if (sys.q() > 0) row += (sys.E.row(i) / d(i)).squaredNorm();
      if (col > 0.0 && row > 0.0) {
        const double f = std::pow(row / col, 0.25);
        d(i) *= f;
        change = std::max(change, std::abs(std::log(f)));
      }
    }
    if (change < 1e-3) break;
  }
  ScaledRealization sr;
  sr.d = d;
  Mat dinv = d.cwiseInverse().asDiagonal();
  Mat dd = d.asDiagonal();
  sr.sys = StateSpace(dinv * sys.A * dd, dinv * sys.B, sys.C * dd,
                      sys.q() > 0 ? Mat(dinv * sys.E) : Mat(n, 0), sys.name);
  return sr;
}

// Maps a certificate obtained on the rescaled full-order coordinates back to
// the original ones (the reduced block is untouched). The congruence
// transformation preserves negativity of the certified block; the margin and
// epsilon are re-extracted on the original composite.
inline SimilarityCertificate map_certificate_to_original(
    const SimilarityCertificate& cert, const CompositeSystem& comp_original,
    const Vec& d) {
  const Eigen::Index n = cert.X.rows();
  Vec t = Vec::Ones(n);
  t.head(d.size()) = d;
  SimilarityCertificate c = cert;
  c.X = symmetrize(t.asDiagonal() * cert.X * t.asDiagonal());
  c.Pi = cert.Pi.size() > 0 ? Mat(cert.Pi * t.asDiagonal()) : cert.Pi;
  c.F = cert.F.size() > 0 ? Mat(cert.F * t.cwiseInverse().asDiagonal()) : cert.F;
  c.lmi_margin =
      max_eig_sym(detail::similarity_block(comp_original, c.X, c.Pi, c.weights));
  if (c.lmi_margin >= 0.0)
    throw NumericalFailure(
        "map_certificate_to_original: mapped certificate lost definiteness");
  c.epsilon =
      detail::extract_epsilon(comp_original, c.X, c.Pi, c.weights, c.lmi_margin);
  return c;
}

// ---------------------------------------------------------------------------
// Balanced truncation
// ---------------------------------------------------------------------------
struct BalancedTruncationResult {
  StateSpace rom;               // (W'AV, W'B, CV) with an empty disturbance map
  Vec hankel_singular_values;   // all n values, descending
  Mat W, V;                     // n x r oblique projection pair, W'V = I
  double error_bound = 0.0;     // 2 * sum of the truncated Hankel values
  Eigen::Index r = 0;           // achieved order (bumped down at a value cluster)
};

namespace detail {

// Symmetric PSD square-root factor g = f * f' via the spectral decomposition
// (robust to semidefinite Gramians, unlike a plain Cholesky).
inline Mat psd_factor(const Mat& g) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(g));
  if (es.info() != Eigen::Success)
    throw NonConvergence("psd_factor: eigendecomposition failed");
  Vec ev = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * ev.cwiseSqrt().asDiagonal();
}

}  // namespace detail

inline BalancedTruncationResult balanced_truncation(const StateSpace& sys,
                                                    Eigen::Index r) {
  if (!is_stable(sys))
    throw UnstableInput("balanced_truncation: the system must be stable");
  const Eigen::Index n = sys.n();
  require_dims(r >= 1 && r < n, "balanced_truncation: need 1 <= r < n");

  Mat gc = solve_lyapunov(sys.A, Mat(sys.B * sys.B.transpose()));
  Mat go = solve_lyapunov(Mat(sys.A.transpose()), Mat(sys.C.transpose() * sys.C));
  Mat lc = detail::psd_factor(gc);
  Mat lo = detail::psd_factor(go);

  Eigen::JacobiSVD<Mat> svd(Mat(lo.transpose() * lc),
                            Eigen::ComputeThinU | Eigen::ComputeThinV);
  Vec sv = svd.singularValues();
  const double scale = sv(0);
  if (!(scale > 0.0))
    throw RankDeficientGramian("balanced_truncation: all Hankel values vanish");

  // Never split a cluster of (near-)repeated Hankel values: move the cut down
  // to the nearest spectral gap.
  while (r >= 1 && sv(r - 1) - sv(r) <= 1e-9 * scale) --r;
  if (r < 1)
    throw RankDeficientGramian(
        "balanced_truncation: no spectral gap at or below the requested order");
  if (sv(r - 1) <= 1e-12 * scale)
    throw RankDeficientGramian(
        "balanced_truncation: retained Hankel values are numerically zero");

  Mat sinv_half = sv.head(r).cwiseSqrt().cwiseInverse().asDiagonal();
  BalancedTruncationResult bt;
  bt.W = lo * svd.matrixU().leftCols(r) * sinv_half;
  bt.V = lc * svd.matrixV().leftCols(r) * sinv_half;
  bt.rom = StateSpace(bt.W.transpose() * sys.A * bt.V, bt.W.transpose() * sys.B,
                      sys.C * bt.V, Mat(r, 0),
                      sys.name.empty() ? std::string{} : sys.name + "_bt");
  bt.hankel_singular_values = sv;
  bt.error_bound = 2.0 * sv.tail(n - r).sum();
  bt.r = r;
  if (!is_stable(bt.rom))
    throw NumericalFailure("balanced_truncation: truncated model is not stable");
  return bt;
}

// The order-n "truncation" that keeps the full model (projections = identity).
inline BalancedTruncationResult identity_truncation(const StateSpace& sys) {
  BalancedTruncationResult bt;
  const Eigen::Index n = sys.n();
  bt.rom = StateSpace(sys.A, sys.B, sys.C, Mat(n, 0), sys.name);
  bt.W = Mat::Identity(n, n);
  bt.V = Mat::Identity(n, n);
  bt.r = n;
  bt.error_bound = 0.0;
  if (is_stable(sys)) {
    Mat gc = solve_lyapunov(sys.A, Mat(sys.B * sys.B.transpose()));
    Mat go = solve_lyapunov(Mat(sys.A.transpose()), Mat(sys.C.transpose() * sys.C));
    Eigen::JacobiSVD<Mat> svd(
        Mat(detail::psd_factor(go).transpose() * detail::psd_factor(gc)));
    bt.hankel_singular_values = svd.singularValues();
  }
  return bt;
}

// Disturbance-free simulation of the model pair under a shared input; reports
// both sides of ||y - y_r||^2 <= error_bound * ||u||^2.
inline BoundReport bt_error_bound_check(const StateSpace& sys,
                                        const BalancedTruncationResult& bt,
                                        const Signal& u, double horizon,
                                        double dt = 1e-3) {
  BoundReport rep;
  rep.sim.fom = simulate(sys, u, Signal::zero(sys.q()), Vec::Zero(sys.n()), horizon, dt);
  rep.sim.rom = simulate(bt.rom, u, Signal::zero(bt.rom.q()), Vec::Zero(bt.rom.n()),
                         horizon, dt);
  const double err = l2_norm_samples(rep.sim.fom.outputs - rep.sim.rom.outputs, dt);
  const double nu = l2_norm_samples(rep.sim.fom.inputs, dt);
  rep.lhs = err * err;
  rep.rhs = bt.error_bound * nu * nu;
  rep.slack = rep.rhs - rep.lhs;
  return rep;
}

// ---------------------------------------------------------------------------
// Moment matching
// ---------------------------------------------------------------------------
// Family of reduced models interpolating the transfer function at spec(S):
// T solves AT + BL = TS, and every member is (S - B2*L, B2, C*T) with B2 free.
struct MomentMatchingFamily {
  Mat S;   // r x r, spectrum = interpolation points
  Mat L;   // m x r, observability partner of S
  Mat T;   // n x r Sylvester solution
  Mat Cr;  // C * T, the fixed output map

  Eigen::Index r() const { return S.rows(); }

  // Member of the family for a given input map (no disturbance channel).
  StateSpace instantiate(const Mat& b2) const {
    require_dims(b2.rows() == r() && b2.cols() == L.rows(),
                 "MomentMatchingFamily: B2 must be r x m");
    return StateSpace(S - b2 * L, b2, Cr, Mat(r(), 0));
  }
};

inline MomentMatchingFamily moment_matching_family(const StateSpace& sys, Mat S,
                                                   Mat L) {
  const Eigen::Index r = S.rows();
  require_dims(S.cols() == r, "moment_matching_family: S must be square");
  require_dims(L.cols() == r && L.rows() == sys.m(),
               "moment_matching_family: L must be m x r");

  // (L, S) observable: the stacked maps L, LS, ..., LS^{r-1} have rank r.
  Mat obs(L.rows() * r, r);
  Mat pw = L;
  for (Eigen::Index k = 0; k < r; ++k) {
    obs.middleRows(k * L.rows(), L.rows()) = pw;
    pw = pw * S;
  }
  Eigen::FullPivLU<Mat> lu(obs);
  lu.setThreshold(1e-10);
  if (lu.rank() < r)
    throw NotObservablePair("moment_matching_family: (L, S) is not observable");

  MomentMatchingFamily fam;
  fam.S = std::move(S);
  fam.L = std::move(L);
  fam.T = solve_sylvester(sys.A, fam.S, Mat(sys.B * fam.L));
  Mat res = sys.A * fam.T + sys.B * fam.L - fam.T * fam.S;
  if (rel_residual(res, fam.T) > 1e-9)
    throw NonConvergence("moment_matching_family: Sylvester residual too large");
  fam.Cr = sys.C * fam.T;
  return fam;
}

// ---------------------------------------------------------------------------
// Certified reduction programs
// ---------------------------------------------------------------------------
enum class ReductionMethod { P1, PMM, PBT };

struct ReductionResult {
  StateSpace rom;
  SimilarityCertificate certificate;  // validates against (original FOM, rom)
  ReductionMethod method = ReductionMethod::P1;
  double objective_value = 0.0;  // certified gamma + delta
  int iterations = 0;
  std::vector<double> history;  // objective after each convex step
  // For the balanced-truncation program: the two available disturbance-free
  // error coefficients (||y - y_r||^2 <= coef * ||u||^2) and their minimum.
  double bt_bound = std::numeric_limits<double>::infinity();
  double similarity_bound = std::numeric_limits<double>::infinity();
  double error_bound = std::numeric_limits<double>::infinity();
};

struct ReductionOptions {
  double stop_rel = 1e-4;   // relative objective improvement threshold
  int max_iterations = 50;  // ACS iteration cap
  bool prebalance = true;   // solve the LMIs on diagonally rescaled coordinates
  Mat E2;                   // ROM driving-input map; identity if empty
  SimilarityOptions sim;
};

namespace detail {

// Convex step of the alternating search: with (X, Pi) fixed, the certified
// block is affine in the free ROM matrices and the weights. When `family` is
// given only B2 is free (A2 = S - B2*L, C2 = family->Cr); otherwise A2, B2,
// C2 are all free. E2 is a fixed constant.
struct MatrixStepResult {
  Mat A2, B2, C2;
  WeightPair weights;
  double objective = 0.0;
  bool feasible = false;
};

inline MatrixStepResult acs_matrix_step(const StateSpace& fom, const Mat& e2,
                                        const Mat& x, const Mat& pi,
                                        const MomentMatchingFamily* family,
                                        const SimilarityOptions& opts) {
  const Eigen::Index n1 = fom.n(), r = e2.rows(), n = n1 + r;
  const Eigen::Index m = fom.m(), p = fom.p(), q1 = fom.q(), q2 = e2.cols();
  const Eigen::Index nw = 2 * m + q1, nz = p + q2;
  const Mat x_top = x.topRows(n1);
  const Mat x_bot = x.bottomRows(r);

  LmiProblem prob;
  const int hA2 = family ? -1 : prob.add_rectangular("A2", r, r);
  const int hB2 = prob.add_rectangular("B2", r, m);
  const int hC2 = family ? -1 : prob.add_rectangular("C2", p, r);
  const int hGamma = prob.add_scalar("gamma", true);
  const int hDelta = prob.add_scalar("delta", true);
  const int hMu = prob.add_scalar("mu", true);
  const int hEta = prob.add_scalar("eta", true);
  LinExpr gamma = prob.scalar(hGamma), delta = prob.scalar(hDelta);

  AffineMatrix big(n + nw + nz, n + nw + nz);

  // A*X + B*Pi block: the top rows and the driving-input part are constant.
  AffineMatrix half(n, n);
  half.set_block(0, 0, AffineMatrix::constant(Mat(fom.A * x_top)));
  if (family)
    half.set_block(n1, 0,
                   AffineMatrix::constant(Mat(family->S * x_bot)) +
                       prob.ref(hB2) * Mat(-family->L * x_bot));
  else
    half.set_block(n1, 0, prob.ref(hA2) * x_bot);
  Mat bpi = Mat::Zero(n, n);
  bpi.bottomRows(r) = e2 * pi;
  half += AffineMatrix::constant(bpi);
  big.set_block(0, 0, half + half.transpose());

  // E = [[B1, 0, E1], [0, B2, 0]] with B2 the only variable entry.
  AffineMatrix e(n, nw);
  Mat e_const = Mat::Zero(n, nw);
  e_const.topLeftCorner(n1, m) = fom.B;
  if (q1 > 0) e_const.topRightCorner(n1, q1) = fom.E;
  e += AffineMatrix::constant(e_const);
  e.set_block(n1, m, prob.ref(hB2));
  big.set_block(n, 0, e.transpose());
  big.set_block(0, n, e);

  // Middle weight block -Q(gamma, delta, mu).
  Mat im = Mat::Identity(m, m);
  AffineMatrix negdiag = expr_times(LinExpr(0.0) - gamma - delta, im);
  AffineMatrix posg = expr_times(gamma, im);
  big.set_block(n, n, negdiag);
  big.set_block(n + m, n + m, negdiag);
  big.set_block(n, n + m, posg);
  big.set_block(n + m, n, posg);
  if (q1 > 0)
    big.set_block(n + 2 * m, n + 2 * m,
                  expr_times(LinExpr(0.0) - prob.scalar(hMu), Mat::Identity(q1, q1)));

  // C*X + D*Pi block: rows are C1*x_top - C2*x_bot over Pi.
  AffineMatrix cz(nz, n);
  Mat cz_const = Mat::Zero(nz, n);
  cz_const.topRows(p) = fom.C * x_top;
  if (family) cz_const.topRows(p) -= family->Cr * x_bot;
  cz_const.bottomRows(q2) = pi;
  cz += AffineMatrix::constant(cz_const);
  if (!family) cz.set_block(0, 0, prob.ref(hC2) * Mat(-x_bot));
  big.set_block(n + nw, 0, cz);
  big.set_block(0, n + nw, cz.transpose());

  big.set_block(n + nw, n + nw, AffineMatrix::constant(-Mat::Identity(p, p)));
  big.set_block(n + nw + p, n + nw + p,
                expr_times(LinExpr(0.0) - prob.scalar(hEta), Mat::Identity(q2, q2)));

  prob.add_constraint(big, "similarity (matrix step)");
  prob.set_objective(gamma + delta);

  MatrixStepResult out;
  auto sol = solve_lmi(prob, opts.lmi);
  if (!sol.feasible()) return out;
  out.feasible = true;
  out.B2 = prob.value(hB2, sol.x);
  out.A2 = family ? Mat(family->S - out.B2 * family->L) : prob.value(hA2, sol.x);
  out.C2 = family ? family->Cr : prob.value(hC2, sol.x);
  out.weights.gamma = prob.scalar(hGamma).eval(sol.x);
  out.weights.delta = prob.scalar(hDelta).eval(sol.x);
  out.weights.mu = prob.scalar(hMu).eval(sol.x);
  out.weights.eta = 1.0 / prob.scalar(hEta).eval(sol.x);
  out.objective = out.weights.gamma + out.weights.delta;
  return out;
}

// Deterministic stabilizing B2 for the moment-matching family: the solution
// of the dual Riccati equation S P' + P' S' - P' L'L P' + I = 0 gives
// B2 = P' L' with S - B2 L Hurwitz ((L, S) observable).
inline Mat stabilizing_b2(const MomentMatchingFamily& fam) {
  const Eigen::Index r = fam.r();
  Mat p = solve_riccati_hamiltonian(Mat(fam.S.transpose()),
                                    Mat(-fam.L.transpose() * fam.L),
                                    Mat::Identity(r, r));
  return p * fam.L.transpose();
}

// Weights of a converged iterate, relaxed for the fresh fixed-weight
// certification. Optimized values may sit on the solver floor, which is at or
// below the strictness margin of the fixed-weight problem; the absolute bump
// must clear that margin or re-certification becomes infeasible.
inline double relax_up(double v) { return v * (1.0 + 1e-3) + 1e-4; }

// Shared ACS driver for reduce_p1 / reduce_pmm.
inline ReductionResult run_acs(const StateSpace& sys, StateSpace rom, const Mat& e2,
                               const MomentMatchingFamily* family,
                               const ReductionOptions& opts, ReductionMethod method) {
  ScaledRealization bal;
  if (opts.prebalance)
    bal = prebalance(sys);
  else {
    bal.sys = sys;
    bal.d = Vec::Ones(sys.n());
  }

  ReductionResult res;
  res.method = method;
  double prev = std::numeric_limits<double>::infinity();
  WeightPair best_w;
  bool have_iterate = false;

  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    CompositeSystem comp = build_composite(bal.sys, rom);
    auto s = assemble_similarity_lmi(comp, SimilarityLmi::Mode::MinimizeGammaPlusDelta,
                                     {}, opts.sim);
    auto sol = solve_lmi(s.prob, opts.sim.lmi);
    if (!sol.feasible()) {
      if (!have_iterate)
        throw InitializationInfeasible(
            "alternating search: no feasible start for the initial reduced model");
      break;  // keep the last certified iterate
    }
    WeightPair w = s.weights_of(sol.x);
    const double obj = w.gamma + w.delta;
    res.history.push_back(obj);
    res.iterations = iter + 1;
    if (obj > prev * (1.0 + 1e-4) + 1e-8)
      throw NonMonotoneAbort("alternating search: objective increased from " +
                             std::to_string(prev) + " to " + std::to_string(obj));
    best_w = w;
    have_iterate = true;
    const bool converged = prev - obj < opts.stop_rel * std::max(prev, 1e-12);
    prev = std::min(prev, obj);
    if (converged || iter + 1 >= opts.max_iterations) break;

    Mat x = symmetrize(s.prob.value(s.hX, sol.x));
    Mat pi = s.prob.value(s.hPi, sol.x);
    auto step = acs_matrix_step(bal.sys, e2, x, pi, family, opts.sim);
    if (!step.feasible) break;  // keep the current iterate
    res.history.push_back(step.objective);
    rom = StateSpace(step.A2, step.B2, step.C2, e2);
  }

  // Fresh certificate at the converged weights, then map to original
  // coordinates. check_similarity also enforces stability preservation.
  auto cert = check_similarity(bal.sys, rom, relax_up(best_w.gamma),
                               relax_up(best_w.delta), opts.sim);
  if (!cert)
    throw NumericalFailure(
        "alternating search: converged weights failed re-certification");
  CompositeSystem comp_orig = build_composite(sys, rom);
  res.rom = rom;
  res.certificate = map_certificate_to_original(*cert, comp_orig, bal.d);
  res.objective_value =
      res.certificate.weights.gamma + res.certificate.weights.delta;
  return res;
}

}  // namespace detail

// Free-ROM reduction: alternating convex search on the bilinear certification
// problem, initialized from balanced truncation when the model is stable.
inline ReductionResult reduce_p1(const StateSpace& sys, Eigen::Index r,
                                 const ReductionOptions& opts = {}) {
  require_dims(r >= 1 && r < sys.n(), "reduce_p1: need 1 <= r < n");
  StateSpace init;
  if (is_stable(sys)) {
    auto bt = balanced_truncation(sys, r);
    r = bt.r;  // the cut may have moved down to a Hankel gap
    Mat e2 = opts.E2.size() > 0 ? opts.E2 : Mat(Mat::Identity(r, r));
    init = StateSpace(bt.rom.A, bt.rom.B, bt.rom.C, e2);
    return detail::run_acs(sys, init, e2, nullptr, opts, ReductionMethod::P1);
  }
  // Deterministic stable initialization for unstable inputs.
  Mat a2 = Mat::Zero(r, r);
  for (Eigen::Index i = 0; i < r; ++i) a2(i, i) = -double(i + 1);
  Mat e2 = opts.E2.size() > 0 ? opts.E2 : Mat(Mat::Identity(r, r));
  init = StateSpace(a2, Mat::Ones(r, sys.m()), 0.1 * Mat::Ones(sys.p(), r), e2);
  return detail::run_acs(sys, init, e2, nullptr, opts, ReductionMethod::P1);
}

// Moment-matching reduction: only B2 is optimized; A2 = S - B2*L and C2 = C*T
// stay within the interpolation family. The returned model is checked against
// the spectral-disjointness requirement spec(S) and spec(A2).
inline ReductionResult reduce_pmm(const StateSpace& sys,
                                  const MomentMatchingFamily& family,
                                  const ReductionOptions& opts = {}) {
  const Eigen::Index r = family.r();
  require_dims(r < sys.n(), "reduce_pmm: family order must be below n");
  Mat e2 = opts.E2.size() > 0 ? opts.E2 : Mat(Mat::Identity(r, r));
  Mat b2 = detail::stabilizing_b2(family);
  StateSpace init(family.S - b2 * family.L, b2, family.Cr, e2);
  ReductionResult res =
      detail::run_acs(sys, init, e2, &family, opts, ReductionMethod::PMM);

  const auto spec_s = spectrum(family.S).eigenvalues;
  const auto spec_a2 = spectrum(res.rom.A).eigenvalues;
  const double tol = 1e-8 * (1.0 + family.S.norm() + res.rom.A.norm());
  for (const auto& si : spec_s)
    for (const auto& aj : spec_a2)
      if (std::abs(si - aj) < tol)
        throw SpectrumCollision(
            "reduce_pmm: spec(S) intersects the reduced spectrum");
  return res;
}

// Certification of a fixed balanced-truncation model: one convex solve for
// (X, Pi, weights); the driving-input map E2 defaults to the identity.
inline ReductionResult reduce_pbt(const StateSpace& sys,
                                  const BalancedTruncationResult& bt,
                                  const ReductionOptions& opts = {}) {
  const Eigen::Index r = bt.rom.n();
  Mat e2 = opts.E2.size() > 0 ? opts.E2 : Mat(Mat::Identity(r, r));
  StateSpace rom(bt.rom.A, bt.rom.B, bt.rom.C, e2, bt.rom.name);

  ScaledRealization bal;
  if (opts.prebalance)
    bal = prebalance(sys);
  else {
    bal.sys = sys;
    bal.d = Vec::Ones(sys.n());
  }

  CompositeSystem comp = build_composite(bal.sys, rom);
  auto s = assemble_similarity_lmi(comp, SimilarityLmi::Mode::MinimizeGammaPlusDelta,
                                   {}, opts.sim);
  auto sol = solve_lmi(s.prob, opts.sim.lmi);
  if (sol.status == LmiSolution::Status::Infeasible)
    throw NumericalFailure("reduce_pbt: certification problem is infeasible");
  if (!sol.feasible())
    throw NumericalFailure("reduce_pbt: solver failed (not proven infeasible)");
  WeightPair w = s.weights_of(sol.x);

  auto cert = check_similarity(bal.sys, rom, detail::relax_up(w.gamma),
                               detail::relax_up(w.delta), opts.sim);
  if (!cert)
    throw NumericalFailure("reduce_pbt: optimized weights failed re-certification");

  ReductionResult res;
  res.method = ReductionMethod::PBT;
  res.rom = rom;
  res.iterations = 1;
  res.certificate =
      map_certificate_to_original(*cert, build_composite(sys, rom), bal.d);
  res.objective_value =
      res.certificate.weights.gamma + res.certificate.weights.delta;
  res.history.push_back(res.objective_value);
  // Disturbance-free shared-input error coefficients: the truncation bound
  // 2*sum(truncated Hankel values) versus 2*delta from the similarity
  // inequality (gamma term vanishes when u1 = u2; the -eta term only helps).
  res.bt_bound = bt.error_bound;
  res.similarity_bound = 2.0 * res.certificate.weights.delta;
  res.error_bound = std::min(res.bt_bound, res.similarity_bound);
  return res;
}

}  // namespace mor
