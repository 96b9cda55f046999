#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "mor/lmi.hpp"
#include "mor/numkernels.hpp"

using namespace mor;

TEST_CASE("LinExpr arithmetic and compression") {
  LinExpr e = LinExpr::variable(0, 2.0) + LinExpr::variable(1, -1.0) + LinExpr(3.0);
  e += LinExpr::variable(0, -2.0);  // cancels
  Vec x(2);
  x << 10, 4;
  CHECK_THAT(e.eval(x), Catch::Matchers::WithinAbs(-1.0, 1e-15));
  CHECK(e.terms.size() == 1);
}

TEST_CASE("AffineMatrix products, blocks and evaluation") {
  LmiProblem prob;
  int hx = prob.add_symmetric("X", 2);
  AffineMatrix x = prob.ref(hx);
  Mat a(2, 2);
  a << 1, 2, 3, 4;
  AffineMatrix ax = a * x;          // A X
  AffineMatrix axa = ax + (ax).transpose();

  Vec v(prob.num_scalars());
  v << 1.0, 0.5, 2.0;  // X = [[1, .5], [.5, 2]]
  Mat xm(2, 2);
  xm << 1, 0.5, 0.5, 2;
  CHECK((x.eval(v) - xm).norm() < 1e-15);
  Mat expect = a * xm + (a * xm).transpose();
  CHECK((axa.eval(v) - expect).norm() < 1e-14);

  AffineMatrix big(3, 3);
  big.set_block(0, 0, AffineMatrix::constant(Mat::Identity(2, 2)));
  big.set_block(2, 2, expr_times(prob.scalar(prob.add_scalar("g", false)), Mat::Identity(1, 1)));
  Vec v2(prob.num_scalars());
  v2 << 1, 0.5, 2, -7;
  CHECK_THAT(big.eval(v2)(2, 2), Catch::Matchers::WithinAbs(-7.0, 1e-15));
  CHECK_THAT(big.eval(v2)(0, 0), Catch::Matchers::WithinAbs(1.0, 1e-15));
}

TEST_CASE("maximizing t below the smallest eigenvalue of A") {
  // max t s.t. t I <= A  ==>  t* = lambda_min(A).
  Mat q(3, 3);
  q << 2, 1, 0, 1, 3, 1, 0, 1, 4;  // SPD, lambda_min approx 1.3249
  const double lmin = min_eig_sym(q);

  LmiProblem prob;
  int ht = prob.add_scalar("t", false);
  AffineMatrix g = expr_times(prob.scalar(ht), Mat::Identity(3, 3)) + AffineMatrix::constant(-q);
  prob.add_constraint(g, "tI - A <= 0");
  prob.set_objective(LinExpr::variable(0, -1.0));  // maximize t

  auto sol = solve_lmi(prob);
  REQUIRE(sol.feasible());
  CHECK_THAT(sol.x(0), Catch::Matchers::WithinAbs(lmin, 1e-5));
  CHECK(sol.worst_margin <= 0.0);
}

TEST_CASE("Lyapunov feasibility for a stable system") {
  Mat a(3, 3);
  a << -1, 2, 0, -2, -1, 1, 0, 0, -3;
  LmiProblem prob;
  int hx = prob.add_symmetric("X", 3);
  AffineMatrix x = prob.ref(hx);
  AffineMatrix lyap = a.transpose() * x + x * a;
  prob.add_constraint(lyap, "A'X + XA < 0");
  AffineMatrix xpos = Mat(-Mat::Identity(3, 3)) * x +
                      AffineMatrix::constant(0.01 * Mat::Identity(3, 3));
  prob.add_constraint(xpos, "X >= 0.01 I");

  auto sol = solve_lmi(prob);
  REQUIRE(sol.feasible());
  Mat xm = prob.value(hx, sol.x);
  CHECK(min_eig_sym(xm) >= 0.01 - 1e-9);
  CHECK(max_eig_sym(a.transpose() * xm + xm * a) < 0.0);
}

TEST_CASE("infeasible systems are reported as infeasible") {
  // x >= 1 and 2x <= 0 cannot hold together.
  LmiProblem prob;
  int hx = prob.add_scalar("x", false);
  AffineMatrix c1(1, 1), c2(1, 1);
  c1(0, 0) = LinExpr(1.0) - prob.scalar(hx);   // 1 - x <= 0
  c2(0, 0) = 2.0 * prob.scalar(hx);            // 2x <= 0
  prob.add_constraint(c1);
  prob.add_constraint(c2);
  auto sol = solve_lmi(prob);
  CHECK(sol.status == LmiSolution::Status::Infeasible);
  CHECK(sol.worst_margin > 0.0);
}

TEST_CASE("unstable Lyapunov LMI is infeasible") {
  Mat a(2, 2);
  a << 0.5, 1, 0, 0.3;  // unstable
  LmiProblem prob;
  int hx = prob.add_symmetric("X", 2);
  AffineMatrix x = prob.ref(hx);
  prob.add_constraint(a.transpose() * x + x * a);
  prob.add_constraint(Mat(-Mat::Identity(2, 2)) * x +
                      AffineMatrix::constant(Mat::Identity(2, 2)));  // X >= I
  auto sol = solve_lmi(prob);
  CHECK(sol.status == LmiSolution::Status::Infeasible);
}

TEST_CASE("linear objective over scalar bounds") {
  // min 3x + y  s.t. x >= 2, y >= -1, x + y <= 10.
  LmiProblem prob;
  int hx = prob.add_scalar("x", false);
  int hy = prob.add_scalar("y", false);
  AffineMatrix c1(1, 1), c2(1, 1), c3(1, 1);
  c1(0, 0) = LinExpr(2.0) - prob.scalar(hx);
  c2(0, 0) = LinExpr(-1.0) - prob.scalar(hy);
  c3(0, 0) = prob.scalar(hx) + prob.scalar(hy) - LinExpr(10.0);
  prob.add_constraint(c1);
  prob.add_constraint(c2);
  prob.add_constraint(c3);
  prob.set_objective(3.0 * prob.scalar(hx) + prob.scalar(hy));
  auto sol = solve_lmi(prob);
  REQUIRE(sol.feasible());
  CHECK_THAT(sol.objective, Catch::Matchers::WithinAbs(5.0, 1e-5));
}

TEST_CASE("off-diagonal coupling: min gamma with [[-g, b],[b, -g]] <= 0") {
  const double b = 1.7;
  LmiProblem prob;
  int hg = prob.add_scalar("gamma", true);
  AffineMatrix g(2, 2);
  g(0, 0) = LinExpr(0.0) - prob.scalar(hg);
  g(1, 1) = LinExpr(0.0) - prob.scalar(hg);
  g(0, 1) = LinExpr(b);
  g(1, 0) = LinExpr(b);
  prob.add_constraint(g);
  prob.set_objective(prob.scalar(hg));
  auto sol = solve_lmi(prob);
  REQUIRE(sol.feasible());
  CHECK_THAT(sol.objective, Catch::Matchers::WithinAbs(b, 1e-5));
}

TEST_CASE("bounded-real style certificate recovers the scalar H-infinity norm") {
  // x' = -x + u, y = x: peak gain 1. min gamma s.t.
  // [[2 a p, p b, c], [p b, -gamma, 0], [c, 0, -gamma]] <= 0 with p > 0.
  const double a = -1.0, b = 1.0, c = 1.0;
  LmiProblem prob;
  int hp = prob.add_scalar("p", true);
  int hg = prob.add_scalar("gamma", true);
  AffineMatrix g(3, 3);
  g(0, 0) = 2.0 * a * prob.scalar(hp);
  g(0, 1) = b * prob.scalar(hp);
  g(1, 0) = b * prob.scalar(hp);
  g(0, 2) = LinExpr(c);
  g(2, 0) = LinExpr(c);
  g(1, 1) = LinExpr(0.0) - prob.scalar(hg);
  g(2, 2) = LinExpr(0.0) - prob.scalar(hg);
  prob.add_constraint(g);
  prob.set_objective(prob.scalar(hg));
  auto sol = solve_lmi(prob);
  REQUIRE(sol.feasible());
  CHECK_THAT(sol.objective, Catch::Matchers::WithinAbs(1.0, 2e-4));
}

TEST_CASE("minimizing the trace of X subject to X >= A") {
  Mat a(2, 2);
  a << 1, 2, 2, -1;  // indefinite; optimum is X = A with trace 0
  LmiProblem prob;
  int hx = prob.add_symmetric("X", 2);
  AffineMatrix g = AffineMatrix::constant(a) + Mat(-Mat::Identity(2, 2)) * prob.ref(hx);
  prob.add_constraint(g);
  LinExpr tr;
  // diagonal scalar indices of a 2x2 symmetric block: 0 and 2
  tr += LinExpr::variable(0);
  tr += LinExpr::variable(2);
  prob.set_objective(tr);
  auto sol = solve_lmi(prob);
  REQUIRE(sol.feasible());
  Mat xm = prob.value(hx, sol.x);
  CHECK_THAT(xm.trace(), Catch::Matchers::WithinAbs(a.trace(), 1e-4));
  CHECK(min_eig_sym(xm - a) > -1e-6);
}

TEST_CASE("solver is deterministic") {
  Mat a(2, 2);
  a << -1, 3, 0, -2;
  auto build = [&]() {
    LmiProblem prob;
    int hx = prob.add_symmetric("X", 2);
    AffineMatrix x = prob.ref(hx);
    prob.add_constraint(a.transpose() * x + x * a);
    prob.add_constraint(Mat(-Mat::Identity(2, 2)) * x +
                        AffineMatrix::constant(Mat::Identity(2, 2)));
    return prob;
  };
  auto prob1 = build();
  auto prob2 = build();
  auto s1 = solve_lmi(prob1);
  auto s2 = solve_lmi(prob2);
  REQUIRE(s1.feasible());
  REQUIRE(s2.feasible());
  CHECK((s1.x - s2.x).norm() == 0.0);
}

TEST_CASE("rectangular variables enter constraints") {
  // Find K (1x2) with (A + B K) stabilized via X = I:
  // (A + BK)' + (A + BK) < 0 for A = [[0, 1], [0, 0]], B = [0; 1].
  // A X + B Pi + (.)' < 0, X >= I gives a stabilizing K = Pi X^{-1}.
  Mat a(2, 2), b(2, 1);
  a << 0, 1, 0, 0;
  b << 0, 1;
  LmiProblem prob;
  int hx = prob.add_symmetric("X", 2);
  int hpi = prob.add_rectangular("Pi", 1, 2);
  AffineMatrix half = a * prob.ref(hx) + b * prob.ref(hpi);
  prob.add_constraint(half + half.transpose());
  prob.add_constraint(Mat(-Mat::Identity(2, 2)) * prob.ref(hx) +
                      AffineMatrix::constant(Mat::Identity(2, 2)));
  auto sol = solve_lmi(prob);
  REQUIRE(sol.feasible());
  Mat xm = prob.value(hx, sol.x);
  Mat k = prob.value(hpi, sol.x) * xm.inverse();
  CHECK(spectrum(a + b * k).hurwitz());
}
