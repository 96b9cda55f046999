#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "mor/closedloop.hpp"
#include "mor/reduction.hpp"

using namespace mor;

namespace {

Mat random_matrix(std::mt19937& rng, Eigen::Index r, Eigen::Index c, double s = 1.0) {
  std::normal_distribution<double> g(0.0, s);
  Mat m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = g(rng);
  return m;
}

StateSpace random_stable_system(std::mt19937& rng, Eigen::Index n, Eigen::Index m,
                                Eigen::Index p, Eigen::Index q, double io_scale = 1.0) {
  Mat a = random_matrix(rng, n, n);
  a -= (spectrum(a).max_real_part + 0.2 + 1.0) * Mat::Identity(n, n);
  return StateSpace(a, random_matrix(rng, n, m, io_scale),
                    random_matrix(rng, p, n, io_scale),
                    q > 0 ? random_matrix(rng, n, q) : Mat(n, 0));
}

// First-order SISO controller x' = a x + b u, y = c x with no disturbance.
StateSpace first_order_controller(double a, double b, double c) {
  Mat A(1, 1), B(1, 1), C(1, 1);
  A << a;
  B << b;
  C << c;
  return StateSpace(A, B, C, Mat(1, 0));
}

}  // namespace

TEST_CASE("closed-loop bound coefficients match independent arithmetic") {
  const double g1 = 0.1, d1 = 0.2, e1 = 0.1, mu1 = 0.3, eta1 = 0.4;
  const double g2 = 0.1, d2 = 0.2, e2 = 0.1, mu2 = 0.5, eta2 = 0.6;
  const double gammaK = 0.1, l = 0.5, k1 = 0.2, nu = 0.1;

  ClosedLoopNorms ones;
  ones.e1_diff = ones.e2_diff = ones.e1_stack = ones.e2_stack = 1.0;
  ones.y1_rom = ones.d1 = ones.d1_rom = ones.d2 = ones.d2_rom = 1.0;

  auto b = closed_loop_bound_from_constants(g1, d1, e1, mu1, eta1, g2, d2, e2, mu2,
                                            eta2, gammaK, l, k1, nu, ones);
  REQUIRE(b.applicable);

  const double denom = 1.0 - 1.21 * 0.01;  // 0.9879
  const double shrink = std::sqrt((2.0 * 1.1 * 0.1 * 0.1 + 2.0 * 0.5 * 0.1) / denom);
  const double k = 0.2 + 2.0 * (0.3 + 0.2);  // 1.2
  CHECK(b.k == Catch::Approx(k).epsilon(1e-12));
  CHECK(b.denom == Catch::Approx(denom).epsilon(1e-12));
  CHECK(b.sqrt_shrink == Catch::Approx(shrink).epsilon(1e-12));
  CHECK(b.lhs_coefficient == Catch::Approx(1.0 - shrink).epsilon(1e-12));
  CHECK(b.coef_e1_diff == Catch::Approx(std::sqrt(0.11 / (0.1 * denom))).epsilon(1e-12));
  CHECK(b.coef_e2_diff == Catch::Approx(std::sqrt(0.011 / (0.1 * denom))).epsilon(1e-12));
  CHECK(b.coef_e1_stack == Catch::Approx(std::sqrt(0.2 / denom)).epsilon(1e-12));
  CHECK(b.coef_e2_stack == Catch::Approx(shrink).epsilon(1e-12));
  CHECK(b.coef_y1_rom == Catch::Approx(1.0 + shrink).epsilon(1e-12));
  CHECK(b.coef_d1 ==
        Catch::Approx(std::sqrt((0.3 - 0.1 + 2.0 * 1.2 * 0.1) / denom)).epsilon(1e-12));
  CHECK(b.coef_d1_rom == Catch::Approx(std::sqrt(0.4 / denom)).epsilon(1e-12));
  CHECK(b.coef_d2_sq == Catch::Approx(1.1 * 0.1 * 0.4 / denom).epsilon(1e-12));
  CHECK(b.coef_d2_rom_sq == Catch::Approx(1.1 * 0.1 * 0.6 / denom).epsilon(1e-12));

  const double rhs = b.coef_e1_diff + b.coef_e2_diff + b.coef_e1_stack +
                     b.coef_e2_stack + b.coef_y1_rom + b.coef_d1 + b.coef_d1_rom +
                     std::sqrt(b.coef_d2_sq + b.coef_d2_rom_sq);
  CHECK(b.rhs == Catch::Approx(rhs).epsilon(1e-12));
  CHECK(b.y1_bound == Catch::Approx(rhs / (1.0 - shrink)).epsilon(1e-12));
}

TEST_CASE("near-perfect plant pair limit and hypothesis gating") {
  SECTION("gamma1 -> 0 limit") {
    auto b = closed_loop_bound_from_constants(1e-14, 0.2, 0.1, 0.3, 0.4, 0.1, 0.2,
                                              0.1, 0.5, 0.6, 0.1, 0.5, 0.2, 0.1);
    REQUIRE(b.applicable);
    CHECK(b.lhs_coefficient ==
          Catch::Approx(1.0 - std::sqrt(2.0 * 0.5 * 0.1)).margin(1e-6));
    CHECK(b.coef_e1_diff < 1e-6);
    CHECK(b.coef_e2_diff < 1e-6);
    CHECK(b.coef_d2_sq < 1e-12);
  }
  SECTION("controller-gain product hypothesis") {
    auto b = closed_loop_bound_from_constants(0.9, 0.2, 0.1, 0.3, 0.4, 0.9, 0.2, 0.1,
                                              0.5, 0.6, 2.0, 0.5, 0.2, 0.5);
    CHECK_FALSE(b.applicable);
    CHECK(b.violated_hypothesis.find("gammaK") != std::string::npos);
  }
  SECTION("denominator hypothesis") {
    auto b = closed_loop_bound_from_constants(0.9, 0.2, 0.1, 0.3, 0.4, 0.9, 0.2, 0.1,
                                              0.5, 0.6, 1e-3, 0.5, 0.2, 0.5);
    CHECK_FALSE(b.applicable);
    CHECK(b.violated_hypothesis.find("gamma2") != std::string::npos);
  }
  SECTION("square-root shrink hypothesis") {
    auto b = closed_loop_bound_from_constants(0.1, 2.0, 0.1, 0.3, 0.4, 0.1, 2.0, 0.1,
                                              0.5, 0.6, 0.1, 1.0, 0.2, 0.1);
    CHECK_FALSE(b.applicable);
    CHECK(b.violated_hypothesis.find("sqrt") != std::string::npos);
  }
}

TEST_CASE("bound coefficients grow with gamma1 on the applicability region") {
  double prev_e1 = 0.0, prev_lhs = 2.0;
  for (double g1 : {0.01, 0.05, 0.1, 0.2, 0.3}) {
    auto b = closed_loop_bound_from_constants(g1, 0.2, 0.1, 0.3, 0.4, 0.1, 0.2, 0.1,
                                              0.5, 0.6, 0.1, 0.5, 0.2, 0.1);
    REQUIRE(b.applicable);
    CHECK(b.coef_e1_diff >= prev_e1 - 1e-15);
    CHECK(b.lhs_coefficient <= prev_lhs + 1e-15);
    prev_e1 = b.coef_e1_diff;
    prev_lhs = b.lhs_coefficient;
  }
}

TEST_CASE("controller profiles: gains, self-similarity, and degenerate cases") {
  SECTION("near-memoryless unit-gain controller") {
    StateSpace K = first_order_controller(-100.0, 100.0, 1.0);
    auto prof = profile_controller(K, 0.05);
    CHECK(prof.l1 == Catch::Approx(1.0).margin(0.1));
    // With unit gain the worst case u2 = -u1 forces gamma >= gain^2 - delta/2,
    // so the self-similarity constant sits just below 1, not at the floor.
    CHECK(prof.gamma_K == Catch::Approx(1.0 - prof.delta_K / 2.0).margin(0.05));
    // A low-gain controller does reach a near-floor self-similarity constant.
    auto low = profile_controller(first_order_controller(-100.0, 100.0, 0.01), 0.05);
    CHECK(low.gamma_K < 1e-3);
    CHECK((prof.Qhat - prof.Qhat.transpose()).norm() == 0.0);
    CHECK(prof.lambda_max_Qhat ==
          Catch::Approx(2.0 * (prof.gamma_K + prof.delta_K + prof.l1) +
                        2.0 * prof.gamma_K)
              .epsilon(1e-12));
    CHECK(prof.l == Catch::Approx(prof.l1 + prof.lambda_max_Qhat).epsilon(1e-12));
    // Eigen oracle for the 2x2 representative.
    Eigen::SelfAdjointEigenSolver<Mat> es(prof.Qhat);
    CHECK(prof.lambda_max_Qhat ==
          Catch::Approx(es.eigenvalues().maxCoeff()).epsilon(1e-12));
  }
  SECTION("zero controller has gains at the solver floor") {
    StateSpace K = first_order_controller(-1.0, 1.0, 0.0);
    auto prof = profile_controller(K, 0.05);
    CHECK(prof.l1 < 1e-5);
  }
  SECTION("unstable controller is rejected") {
    CHECK_THROWS_AS(profile_controller(first_order_controller(0.5, 1.0, 1.0), 0.05),
                    UnstableController);
  }
  SECTION("doubling delta_K never increases gamma_K") {
    StateSpace K = first_order_controller(-2.0, 1.0, 0.8);
    double prev = std::numeric_limits<double>::infinity();
    for (double dk : {0.01, 0.02, 0.04}) {
      auto prof = profile_controller(K, dk);
      CHECK(prof.gamma_K <= prev * (1.0 + 1e-3) + 1e-9);
      prev = prof.gamma_K;
    }
  }
}

TEST_CASE("zero controller reduces the closed-loop comparison to the open-loop bound") {
  std::mt19937 rng(61);
  StateSpace fom = random_stable_system(rng, 4, 1, 1, 1, 0.5);
  auto res = reduce_pbt(fom, balanced_truncation(fom, 2));

  StateSpace K = first_order_controller(-1.0, 1.0, 0.0);
  auto prof = profile_controller(K, 0.05);

  Signal e1 = Signal::sinusoid(1, 1.0, 2.0);
  Signal e1r = Signal::sinusoid(1, 0.9, 2.0, 0.2);
  Signal d1 = Signal::gaussian_pulse(1, 0.8, 2.0, 0.5);
  const double horizon = 10.0, dt = 1e-3;

  auto rep = closed_loop_compare(fom, res.rom, res.certificate, prof, 0.5, e1, e1r,
                                 Signal::zero(1), Signal::zero(1), d1, horizon, dt);
  auto plain = verify_similarity_on_trajectory(res.certificate, fom, res.rom, e1, e1r,
                                               d1, Vec::Zero(fom.n() + res.rom.n()),
                                               horizon, dt);
  CHECK(rep.err_norm * rep.err_norm == Catch::Approx(plain.lhs).epsilon(1e-8));
  REQUIRE(rep.bound.applicable);
  CHECK(rep.satisfied);
}

TEST_CASE("certified closed loop satisfies the output bound") {
  std::mt19937 rng(67);
  StateSpace fom = random_stable_system(rng, 4, 1, 1, 1, 0.5);
  auto res = reduce_pbt(fom, balanced_truncation(fom, 2));
  StateSpace K = first_order_controller(-2.0, 0.3, 0.5);
  auto prof = profile_controller(K, 0.01);

  std::uniform_real_distribution<double> amp(0.5, 1.5), freq(0.5, 4.0);
  for (int trial = 0; trial < 5; ++trial) {
    Signal e1 = Signal::sinusoid(1, amp(rng), freq(rng));
    Signal e1r = trial % 2 == 0 ? e1 : e1.scaled(0.9);
    Signal e2 = Signal::sinusoid(1, 0.5 * amp(rng), freq(rng), 0.4);
    Signal d1 = Signal::gaussian_pulse(1, amp(rng), 3.0, 0.6);
    auto rep = closed_loop_compare(fom, res.rom, res.certificate, prof, 0.5, e1, e1r,
                                   e2, e2, d1, 12.0, 1e-3);
    REQUIRE(rep.bound.applicable);
    INFO("trial " << trial << ": |y1|=" << rep.y1_norm
                  << " bound=" << rep.bound.y1_bound);
    CHECK(rep.satisfied);
    CHECK(rep.y1_norm <= rep.bound.y1_bound * (1.0 + 1e-6));
  }
}

TEST_CASE("random plants with random low-gain controllers satisfy the bound when applicable") {
  std::mt19937 rng(71);
  std::uniform_real_distribution<double> pole(-3.0, -0.5), gain(0.05, 0.4);
  int applicable = 0;
  for (int trial = 0; trial < 8; ++trial) {
    StateSpace fom = random_stable_system(rng, Eigen::Index(3 + trial % 3), 1, 1, 1, 0.5);
    auto res = reduce_pbt(fom, balanced_truncation(fom, 2));
    StateSpace K = first_order_controller(pole(rng), gain(rng), gain(rng));
    auto prof = profile_controller(K, 0.02);

    Signal e1 = Signal::sinusoid(1, 1.0, 1.0 + 0.3 * trial);
    Signal e2 = Signal::sinusoid(1, 0.4, 2.0, 0.3);
    Signal d1 = Signal::sinusoid(1, 0.5, 1.7);
    auto rep = closed_loop_compare(fom, res.rom, res.certificate, prof, 0.5, e1,
                                   e1.scaled(0.95), e2, e2, d1, 10.0, 1e-3);
    if (!rep.bound.applicable) continue;
    ++applicable;
    CHECK(rep.satisfied);
  }
  // The low-gain construction should make most instances applicable.
  CHECK(applicable >= 5);
}
