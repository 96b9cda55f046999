#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <random>

#include "mor/cases.hpp"
#include "mor/reduction.hpp"

using namespace mor;

TEST_CASE("double pendulum case data") {
  StateSpace sys = double_pendulum();
  REQUIRE(sys.n() == 6);
  REQUIRE(sys.m() == 1);
  REQUIRE(sys.p() == 1);
  REQUIRE(sys.q() == 1);
  CHECK(is_stable(sys));
  CHECK((sys.E - sys.C.transpose()).norm() == 0.0);

  // The published order-2 state matrix is Hurwitz.
  CHECK(spectrum(pendulum_published_a2()).hurwitz());

  ScenarioDocument sc = pendulum_scenario();
  CHECK(sc.u1(M_PI / 4.0)(0) == Catch::Approx(20.0));  // 20 sin(2t) peak
  CHECK(sc.d1(10.0)(0) ==
        Catch::Approx(30.0 / (0.2 * std::sqrt(2.0 * M_PI))));  // pulse peak
  CHECK(sc.d1(0.0)(0) < 1e-100);  // pulse is negligible far from its center
}

TEST_CASE("pendulum moment-matching family matches two moments at zero") {
  StateSpace sys = double_pendulum();
  auto family = moment_matching_family(sys, pendulum_mm_s(), pendulum_mm_l());

  REQUIRE(family.Cr.cols() == 2);

  // Every family member interpolates G(0) and G'(0) exactly, whatever its
  // input map; the published input maps are arbitrary valid members.
  const Mat a_inv_b = sys.A.fullPivLu().solve(sys.B);
  const double m0 = -(sys.C * a_inv_b)(0, 0);
  const double m1 = (sys.C * sys.A.fullPivLu().solve(a_inv_b))(0, 0);
  for (const Mat& b2 : {pendulum_mm_b2_plain(), pendulum_mm_b2_joint()}) {
    StateSpace rom = family.instantiate(b2);
    const Mat ar_inv_br = rom.A.fullPivLu().solve(rom.B);
    CHECK(-(rom.C * ar_inv_br)(0, 0) == Catch::Approx(m0).margin(1e-10));
    CHECK((rom.C * rom.A.fullPivLu().solve(ar_inv_br))(0, 0) ==
          Catch::Approx(m1).margin(1e-10));
  }
}

TEST_CASE("motivating two-mode model") {
  StateSpace sys = motivating_model();
  REQUIRE(sys.n() == 4);
  CHECK(is_stable(sys));
  CHECK((sys.C - sys.B.transpose()).norm() == 0.0);
  CHECK((sys.E - sys.B).norm() == 0.0);
}

TEST_CASE("published plain moment-matching model of the pendulum") {
  StateSpace sys = double_pendulum();
  StateSpace rom = pendulum_published_mm_rom();
  CHECK(is_stable(rom));
  // Published entries are rounded to 4 decimals; the DC gain is near the
  // pendulum's but visibly off (the model optimizes an H2 objective, not
  // interpolation in these coordinates).
  const double g0 = -(sys.C * sys.A.fullPivLu().solve(sys.B))(0, 0);
  const double g0r = -(rom.C * rom.A.fullPivLu().solve(rom.B))(0, 0);
  CHECK(g0r == Catch::Approx(g0).margin(0.05));
}

TEST_CASE("seeded spring-mass-damper chain") {
  StateSpace sys = smd_chain(10, 42);
  REQUIRE(sys.n() == 20);
  REQUIRE(sys.m() == 1);
  REQUIRE(sys.q() == 1);
  CHECK(is_stable(sys));

  // Deterministic in the seed, different across seeds.
  StateSpace again = smd_chain(10, 42);
  CHECK((sys.A - again.A).norm() == 0.0);
  StateSpace other = smd_chain(10, 43);
  CHECK((sys.A - other.A).norm() > 0.0);

  // Undamped chains are only marginally stable; every random draw here has
  // strictly positive damping with probability one.
  for (unsigned seed : {1u, 2u, 3u, 4u, 5u}) CHECK(is_stable(smd_chain(10, seed)));
}

TEST_CASE("lag controller realization") {
  StateSpace k = smd_controller();
  CHECK(is_stable(k));
  CHECK(k.q() == 0);
  // DC gain 0.99, matching (1e-5 s + 1)/(1e-3 s + 1) at s = 0 up to the
  // dropped 0.01 feedthrough.
  const double dc = -(k.C * k.A.fullPivLu().solve(k.B))(0, 0);
  CHECK(dc == Catch::Approx(0.99));
}

TEST_CASE("building model loader") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "mor_building_case";
  fs::remove_all(dir);
  CHECK_THROWS_AS(load_building_model(dir), MissingDataset);

  fs::create_directories(dir);
  std::mt19937 rng(3);
  std::normal_distribution<double> g;
  Mat a(3, 3), b(3, 1), c(1, 3);
  for (int i = 0; i < 9; ++i) a(i / 3, i % 3) = g(rng);
  a -= (spectrum(a).max_real_part + 1.0) * Mat::Identity(3, 3);
  for (int i = 0; i < 3; ++i) { b(i, 0) = g(rng); c(0, i) = g(rng); }
  save_matrix_market(dir / "building_A.mtx", a);
  save_matrix_market(dir / "building_B.mtx", b);
  save_matrix_market(dir / "building_C.mtx", c);
  StateSpace sys = load_building_model(dir);
  CHECK((sys.A - a).norm() == 0.0);
  CHECK((sys.E - b).norm() == 0.0);  // B doubles as the disturbance channel
  fs::remove_all(dir);
}
