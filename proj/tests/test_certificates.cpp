#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "mor/certificates.hpp"
#include "mor/reduction.hpp"

using namespace mor;

namespace {

Mat kron(const Mat& a, const Mat& b) {
  Mat k(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      k.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return k;
}

// Independent oracle: A P + P A' + W = 0 via Kronecker vectorization.
Mat lyapunov_oracle(const Mat& a, const Mat& w) {
  const Eigen::Index n = a.rows();
  Mat id = Mat::Identity(n, n);
  Mat coeff = kron(id, a) + kron(a, id);
  Vec wv = Eigen::Map<const Vec>(w.data(), w.size());
  Vec p = coeff.fullPivLu().solve(-wv);
  return Eigen::Map<const Mat>(p.data(), n, n);
}

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

}  // namespace

TEST_CASE("scalar and degenerate LQ Riccati certificates") {
  SECTION("scalar: -2H - H^2 + 1 = 0 with the stabilizing root") {
    Mat a(1, 1), b(1, 1), c(1, 1), r(1, 1);
    a << -1.0;
    b << 1.0;
    c << 1.0;
    r << 1.0;
    Mat h = mor::detail::lq_riccati(a, b, c, r, r);
    CHECK(h(0, 0) == Catch::Approx(std::sqrt(2.0) - 1.0).epsilon(1e-10));
  }
  SECTION("zero cost gives the zero solution") {
    std::mt19937 rng(5);
    StateSpace sys = random_stable_system(rng, 3, 1, 1, 0);
    Mat rd = Mat::Identity(1, 1);
    Mat h = mor::detail::lq_riccati(sys.A, sys.B, Mat::Zero(1, 3), rd, rd);
    CHECK(h.norm() < 1e-10);
  }
}

TEST_CASE("LQ Riccati solution matches a Newton-Kleinman oracle") {
  std::mt19937 rng(7);
  Mat a = random_matrix(rng, 4, 4);
  a -= (spectrum(a).max_real_part + 0.5 + 1.0) * Mat::Identity(4, 4);
  Mat b = random_matrix(rng, 4, 2);
  Mat c = random_matrix(rng, 2, 4);
  Mat rd = 0.7 * Mat::Identity(2, 2);
  Mat rz = 1.3 * Mat::Identity(2, 2);

  Mat h = mor::detail::lq_riccati(a, b, c, rd, rz);

  // Newton-Kleinman iteration from the open-loop (stable) initialization,
  // with each Lyapunov step solved by an independent Kronecker oracle.
  Mat hk = Mat::Zero(4, 4);
  for (int it = 0; it < 60; ++it) {
    Mat gain = rd.ldlt().solve(b.transpose() * hk);
    Mat acl = a - b * gain;
    Mat w = c.transpose() * rz * c + gain.transpose() * rd * gain;
    hk = lyapunov_oracle(acl.transpose(), w);
  }
  CHECK((h - hk).norm() <= 1e-8 * std::max(1.0, hk.norm()));
}

TEST_CASE("imaginary-axis zeros of the driving channel are rejected") {
  // Undamped oscillator with an all-zero output row: its +-i eigenvectors lie
  // in ker C, so the composite has invariant zeros on the imaginary axis.
  Mat a1(2, 2), b1(2, 1), c1(1, 2), e1(2, 1);
  a1 << 0.0, 1.0, -1.0, 0.0;
  b1 << 1.0, 0.0;
  c1 << 0.0, 0.0;
  e1 << 1.0, 0.0;
  StateSpace sys1(a1, b1, c1, e1);
  Mat a2(1, 1), b2(1, 1), c2(1, 1), e2(1, 1);
  a2 << -1.0;
  b2 << 1.0;
  c2 << 1.0;
  e2 << 1.0;
  StateSpace sys2(a2, b2, c2, e2);
  auto comp = build_composite(sys1, sys2);

  WeightPair w;
  w.gamma = w.delta = w.mu = w.eta = 1.0;
  CHECK_THROWS_AS(lq_riccati_certificate(comp, w), ImaginaryAxisZeros);
  CHECK_THROWS_AS(game_riccati_certificate(comp, w), ImaginaryAxisZeros);
}

TEST_CASE("game Riccati certificates cross-validate LMI certificates") {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 6; ++trial) {
    StateSpace fom = random_stable_system(rng, Eigen::Index(3 + trial % 2), 1, 1, 1, 0.6);
    auto res = reduce_pbt(fom, balanced_truncation(fom, 2));
    auto comp = build_composite(fom, res.rom);

    RiccatiCertificate rc;
    REQUIRE_NOTHROW(rc = game_riccati_certificate(comp, res.certificate.weights));
    INFO("trial " << trial << ": residual " << rc.are_residual_rel);
    CHECK(rc.are_residual_rel <= 1e-7);
    CHECK(rc.closed_loop_spectrum.max_real_part < -1e-8);
    CHECK(rc.min_eig_p_minus_h >= -1e-8 * std::max(1.0, rc.P.norm()));
    Eigen::SelfAdjointEigenSolver<Mat> ep(Mat(0.5 * (rc.P + rc.P.transpose())));
    CHECK(ep.eigenvalues().minCoeff() >= -1e-9 * std::max(1.0, rc.P.norm()));

    // Driving-input gains from both routes stabilize the composite.
    CHECK(spectrum(Mat(comp.A + comp.B * rc.F)).hurwitz());
    CHECK(spectrum(Mat(comp.A + comp.B * res.certificate.F)).hurwitz());
    // End-point penalty strictly dominates P.
    Eigen::SelfAdjointEigenSolver<Mat> ek(Mat(rc.K - rc.P));
    CHECK(ek.eigenvalues().minCoeff() > 0.0);
  }
}

TEST_CASE("zero exogenous channel reduces the game ARE to the LQ ARE") {
  std::mt19937 rng(13);
  // Zero B matrices empty the exogenous channel E = [[B1,0,E1],[0,B2,0]]
  // (no d1 channel), leaving only the LQ term.
  Mat a1 = random_matrix(rng, 3, 3);
  a1 -= (spectrum(a1).max_real_part + 1.2) * Mat::Identity(3, 3);
  StateSpace sys1(a1, Mat::Zero(3, 1), random_matrix(rng, 1, 3, 0.5), Mat(3, 0));
  Mat a2(1, 1);
  a2 << -1.5;
  StateSpace sys2(a2, Mat::Zero(1, 1), random_matrix(rng, 1, 1, 0.5),
                  Mat::Identity(1, 1));
  auto comp = build_composite(sys1, sys2);
  REQUIRE(comp.E.norm() == 0.0);

  WeightPair w;
  w.gamma = 0.5;
  w.delta = 0.5;
  w.mu = 1.0;
  w.eta = 1.0;
  auto rc = game_riccati_certificate(comp, w);
  CHECK((rc.P - rc.H).norm() <= 1e-8 * std::max(1.0, rc.H.norm()));
}

TEST_CASE("the similarity LMI is structurally infeasible for an unstable full model") {
  // The (1,1) block of the similarity LMI contains A1 X11 + X11 A1' with
  // X11 > 0, a Lyapunov certificate for A1; no certificate can exist when the
  // full model has a right-half-plane pole.
  Mat a1(2, 2), b1(2, 1), c1(1, 2), e1(2, 1);
  a1 << 0.5, 0.0, 0.0, -1.0;
  b1 << 1.0, 1.0;
  c1 << 1.0, 1.0;
  e1 << 1.0, 0.0;
  StateSpace fom(a1, b1, c1, e1);
  Mat a2(1, 1), b2(1, 1), c2(1, 1), e2(1, 1);
  a2 << 0.5;
  b2 << 1.0;
  c2 << 1.0;
  e2 << 1.0;
  StateSpace rom(a2, b2, c2, e2);

  auto cert = check_similarity(fom, rom, 1.0, 1.0);
  CHECK_FALSE(cert.has_value());
}

TEST_CASE("dissipation inequality holds along certified trajectories") {
  std::mt19937 rng(17);
  StateSpace fom = random_stable_system(rng, 3, 1, 1, 1, 0.6);
  auto res = reduce_pbt(fom, balanced_truncation(fom, 2));
  auto comp = build_composite(fom, res.rom);
  auto rc = game_riccati_certificate(comp, res.certificate.weights);
  // The synthesized eta is typically tiny, which makes the certified feedback
  // gain large and the audited loop stiff; pick the step from the loop's
  // magnitude so the explicit integrator stays stable and accurate.
  const double dt =
      std::min(1e-3, 1.0 / (comp.A + comp.B * rc.F).norm());

  SECTION("zero trajectory") {
    auto rep = dissipativity_check(comp, rc.F, rc.P, res.certificate.weights,
                                   Signal::zero(comp.w_dim()), Vec::Zero(comp.n()),
                                   5.0, dt);
    CHECK(rep.worst_violation <= 1e-12);
  }

  SECTION("random scenarios") {
    std::uniform_real_distribution<double> amp(0.2, 1.0), freq(0.5, 4.0);
    std::normal_distribution<double> gx(0.0, 0.5);
    double worst = 0.0, scale = 1.0;
    for (int k = 0; k < 10; ++k) {
      Vec x0(comp.n());
      for (Eigen::Index i = 0; i < x0.size(); ++i) x0(i) = gx(rng);
      auto rep = dissipativity_check(comp, rc.F, rc.P, res.certificate.weights,
                                     Signal::sinusoid(comp.w_dim(), amp(rng), freq(rng)),
                                     x0, 8.0, dt);
      worst = std::max(worst, rep.worst_violation);
      scale = std::max(scale, rep.integral_scale);
    }
    // The audit integrates the supply rate inside the Runge-Kutta step, so
    // its quadrature error is O(dt^4); at dt = 1e-3 the inequality should
    // hold to well below 1e-6 of the integral scale.
    CHECK(worst <= 1e-6 * scale);
  }

  SECTION("sign-flipped feedback is detected") {
    Mat bad = -rc.F;
    double worst = 0.0;
    for (int k = 0; k < 5; ++k) {
      auto rep = dissipativity_check(comp, bad, rc.P, res.certificate.weights,
                                     Signal::sinusoid(comp.w_dim(), 1.0, 1.0 + k),
                                     Vec::Ones(comp.n()), 5.0, 1e-3);
      worst = std::max(worst, rep.worst_violation);
    }
    CHECK(worst > 1e-3);
  }
}
