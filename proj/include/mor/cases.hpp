#pragma once

// Built-in benchmark cases: a cart with a double pendulum (order 6), a
// four-state lightly damped two-mode model used to demonstrate robustness
// failures of plain reduction, a seeded spring-mass-damper chain, and a
// loader for an externally supplied building model. Published reference
// reduced models are included where available.

#include <filesystem>
#include <random>
#include <stdexcept>
#include <string>

#include "mor/io.hpp"
#include "mor/lti.hpp"

namespace mor {

struct MissingDataset : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Cart with double pendulum, order 6; disturbance enters through the output
// channel (E = C').

inline StateSpace double_pendulum() {
  Mat a(6, 6);
  a << 0, 1, 0, 0, 0, 0,                    //
      -1, -1, 98.0 / 5.0, 1, 0, 0,          //
      0, 0, 0, 1, 0, 0,                     //
      1, 1, -196.0 / 5.0, -2, 49.0 / 5.0, 1,  //
      0, 0, 0, 0, 0, 1,                     //
      0, 0, 98.0 / 5.0, 1, -98.0 / 5.0, -2;
  Mat b(6, 1);
  b << 0, 1, 0, -1, 0, 0;
  Mat c(1, 6);
  c << 1, 0, 0, 0, 0, 0;
  return StateSpace(a, b, c, c.transpose(), "double_pendulum");
}

// Standard scenario for the pendulum: sinusoidal inputs and a sharp Gaussian
// disturbance pulse at t = 10.
inline ScenarioDocument pendulum_scenario() {
  ScenarioDocument sc;
  sc.u1 = Signal::sinusoid(1, 20.0, 2.0);
  sc.u2 = Signal::sinusoid(1, 30.0, 2.0);
  sc.d1 = Signal::gaussian_pulse(1, 30.0, 10.0, 0.2);
  sc.horizon = 20.0;
  sc.dt = 1e-3;
  return sc;
}

// Published order-2 state matrix obtained for the pendulum by the joint
// synthesis program; used as a Hurwitz reference point.
inline Mat pendulum_published_a2() {
  Mat a(2, 2);
  a << -1.052, -0.5368, -0.5368, -0.357;
  return a;
}

// Observable pair (S, L) fixing two interpolation moments at zero for the
// pendulum's moment-matching family (members A2 = S - B2 L). The output map
// depends on the basis normalization of the Sylvester solution; published
// input maps below pair with C2 = [1, -1].
inline Mat pendulum_mm_s() {
  Mat s(2, 2);
  s << 0, 1, 0, 0;
  return s;
}
inline Mat pendulum_mm_l() {
  Mat l(1, 2);
  l << 1, 1;
  return l;
}

// Published B2 of the plain H2-optimal moment-matching model (no robustness
// synthesis) and of the jointly synthesized one.
inline Mat pendulum_mm_b2_plain() {
  Mat b(2, 1);
  b << 0.2505, 0.1500;
  return b;
}
inline Mat pendulum_mm_b2_joint() {
  Mat b(2, 1);
  b << 0.6747, 0.0807;
  return b;
}

// ---------------------------------------------------------------------------
// Four-state two-mode model demonstrating that plain reduction is not robust
// to disturbances; the disturbance shares the input channel.

inline StateSpace motivating_model() {
  Mat a(4, 4);
  a << 0, 1, 0, 0,      //
      -2, -0.5, 0.1, 0,  //
      0.1, 0, 0, 1,      //
      0, 0, -2, -0.1;
  Mat b(4, 1);
  b << 1, 0, 0, 0;
  return StateSpace(a, b, b.transpose(), b, "motivating");
}

inline ScenarioDocument motivating_scenario() {
  ScenarioDocument sc;
  sc.u1 = Signal::sinusoid(1, 20.0, 2.0);
  sc.u2 = Signal::sinusoid(1, 20.0, 2.0);
  sc.d1 = Signal::gaussian_pulse(1, 30.0, 10.0, 0.2);
  sc.horizon = 20.0;
  sc.dt = 1e-3;
  return sc;
}

// Published order-2 plain moment-matching model of the double pendulum (the
// second robustness-failure demonstration pairs this model with the
// pendulum, not with the four-state model above).
inline StateSpace pendulum_published_mm_rom() {
  Mat a(2, 2), b(2, 1), c(1, 2);
  a << -0.3354, 0.6486, -0.3250, -0.3060;
  b << 0.3467, 0.3160;
  c << 1.0049, -1.0832;
  return StateSpace(a, b, c, Mat::Identity(2, 2), "pendulum_mm_rom");
}

// ---------------------------------------------------------------------------
// Spring-mass-damper chain: N masses in series, the first anchored to a wall;
// masses in [1, 10], spring constants in [1, 1e5], viscous coefficients in
// [0, 1], drawn from a seeded generator. Input: force on the first mass.
// Disturbance: force on the last mass. Output: position of the last mass.

inline StateSpace smd_chain(int n_masses, unsigned seed) {
  if (n_masses < 2) throw std::invalid_argument("smd_chain: need at least 2 masses");
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> dm(1.0, 10.0), dk(1.0, 1e5), dc(0.0, 1.0);
  std::vector<double> m(n_masses), k(n_masses), c(n_masses);
  for (int i = 0; i < n_masses; ++i) {
    m[i] = dm(rng);
    k[i] = dk(rng);
    c[i] = dc(rng);
  }

  const int n = 2 * n_masses;  // states: (x_i, v_i) pairs
  Mat a = Mat::Zero(n, n);
  for (int i = 0; i < n_masses; ++i) {
    const int xi = 2 * i, vi = 2 * i + 1;
    a(xi, vi) = 1.0;
    // Spring/damper i couples mass i to mass i-1 (or the wall for i = 0).
    a(vi, xi) -= k[i] / m[i];
    a(vi, vi) -= c[i] / m[i];
    if (i > 0) {
      a(vi, xi - 2) += k[i] / m[i];
      a(vi, vi - 2) += c[i] / m[i];
    }
    // Spring/damper i+1 couples mass i to mass i+1.
    if (i + 1 < n_masses) {
      a(vi, xi) -= k[i + 1] / m[i];
      a(vi, vi) -= c[i + 1] / m[i];
      a(vi, xi + 2) += k[i + 1] / m[i];
      a(vi, vi + 2) += c[i + 1] / m[i];
    }
  }
  Mat b = Mat::Zero(n, 1);
  b(1, 0) = 1.0 / m[0];
  Mat e = Mat::Zero(n, 1);
  e(n - 1, 0) = 1.0 / m[n_masses - 1];
  Mat cm = Mat::Zero(1, n);
  cm(0, n - 2) = 1.0;
  return StateSpace(a, b, cm, e, "smd_" + std::to_string(n_masses));
}

inline ScenarioDocument smd_scenario() {
  ScenarioDocument sc;
  sc.u1 = Signal::sinusoid(1, 11.0, 2.0);
  sc.u2 = Signal::sinusoid(1, 11.1, 2.0);
  sc.d1 = Signal::gaussian_pulse(1, 15.0, 10.0, 0.2);
  sc.horizon = 20.0;
  sc.dt = 1e-3;
  return sc;
}

// First-order lag compensator (1e-5 s + 1) / (1e-3 s + 1) realized strictly
// proper: the 0.01 direct feedthrough is dropped, keeping the dominant pole
// and DC gain ( x' = -1000 x + u, y = 990 x, DC gain 0.99 ).
inline StateSpace smd_controller() {
  Mat a(1, 1), b(1, 1), c(1, 1);
  a << -1000.0;
  b << 1.0;
  c << 990.0;
  return StateSpace(a, b, c, Mat(1, 0), "lag_controller");
}

// ---------------------------------------------------------------------------
// Externally supplied building model: a directory holding building_A.mtx,
// building_B.mtx, building_C.mtx in matrix-exchange format (and optionally
// building_E.mtx; B is reused as the disturbance channel when absent).

inline StateSpace load_building_model(const std::filesystem::path& dir) {
  const auto a_path = dir / "building_A.mtx";
  if (!std::filesystem::exists(a_path))
    throw MissingDataset("building model data not found at " + a_path.string() +
                         "; supply the dataset directory");
  Mat a = load_matrix_market(a_path);
  Mat b = load_matrix_market(dir / "building_B.mtx");
  Mat c = load_matrix_market(dir / "building_C.mtx");
  Mat e = std::filesystem::exists(dir / "building_E.mtx")
              ? load_matrix_market(dir / "building_E.mtx")
              : b;
  return StateSpace(a, b, c, e, "building");
}

}  // namespace mor
