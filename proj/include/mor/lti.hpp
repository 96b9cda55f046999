#pragma once

// LTI system representation, signal generators, fixed-step RK4 simulation
// (including disturbance-feedback co-simulation) and L2-norm quadrature.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <utility>

#include "mor/matrix.hpp"
#include "mor/numkernels.hpp"

namespace mor {

struct NonFiniteState : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SingularResolvent : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// x' = A x + B u + E d,  y = C x. E may be n x 0 (no disturbance channel).
struct StateSpace {
  Mat A, B, C, E;
  Vec x0;  // initial state, defaults to zero
  std::string name;

  StateSpace() = default;
  StateSpace(Mat a, Mat b, Mat c, Mat e, std::string nm = {})
      : A(std::move(a)), B(std::move(b)), C(std::move(c)), E(std::move(e)), name(std::move(nm)) {
    if (E.size() == 0) E = Mat(A.rows(), 0);
    validate();
    x0 = Vec::Zero(A.rows());
  }

  Eigen::Index n() const { return A.rows(); }
  Eigen::Index m() const { return B.cols(); }
  Eigen::Index p() const { return C.rows(); }
  Eigen::Index q() const { return E.cols(); }

  void validate() const {
    require_dims(A.rows() == A.cols(), "StateSpace: A must be square");
    require_dims(B.rows() == A.rows(), "StateSpace: B rows must match A");
    require_dims(C.cols() == A.rows(), "StateSpace: C cols must match A");
    require_dims(E.rows() == A.rows(), "StateSpace: E rows must match A");
    require_finite(A, "StateSpace: A");
    require_finite(B, "StateSpace: B");
    require_finite(C, "StateSpace: C");
    if (E.size() > 0) require_finite(E, "StateSpace: E");
  }
};

inline bool is_stable(const StateSpace& sys) { return spectrum(sys.A).hurwitz(); }

// Vector-valued function of time. Generator kinds broadcast a scalar law to
// every component; sampled signals interpolate linearly on a uniform grid.
class Signal {
 public:
  enum class Kind { Zero, Sinusoid, GaussianPulse, Sampled };

  static Signal zero(Eigen::Index dim) {
    Signal s;
    s.kind_ = Kind::Zero;
    s.dim_ = dim;
    return s;
  }

  static Signal sinusoid(Eigen::Index dim, double amplitude, double omega, double phase = 0.0) {
    Signal s;
    s.kind_ = Kind::Sinusoid;
    s.dim_ = dim;
    s.a_ = amplitude;
    s.b_ = omega;
    s.c_ = phase;
    return s;
  }

  // amplitude/(width*sqrt(2*pi)) * exp(-(t-center)^2 / (2 width^2))
  static Signal gaussian_pulse(Eigen::Index dim, double amplitude, double center, double width) {
    Signal s;
    s.kind_ = Kind::GaussianPulse;
    s.dim_ = dim;
    s.a_ = amplitude;
    s.b_ = center;
    s.c_ = width;
    return s;
  }

  static Signal sampled(double t0, double dt, Mat values) {
    if (dt <= 0) throw std::invalid_argument("Signal::sampled: dt must be positive");
    require_finite(values, "Signal::sampled values");
    Signal s;
    s.kind_ = Kind::Sampled;
    s.dim_ = values.cols();
    s.t0_ = t0;
    s.dt_ = dt;
    s.values_ = std::move(values);
    return s;
  }

  Kind kind() const { return kind_; }
  Eigen::Index dim() const { return dim_; }
  double sample_dt() const { return dt_; }
  double sample_t0() const { return t0_; }
  const Mat& samples() const { return values_; }
  double amplitude() const { return a_; }
  double omega() const { return b_; }  // sinusoid frequency
  double phase() const { return c_; }  // sinusoid phase
  double center() const { return b_; }  // pulse center
  double width() const { return c_; }   // pulse width

  Vec operator()(double t) const {
    switch (kind_) {
      case Kind::Zero:
        return Vec::Zero(dim_);
      case Kind::Sinusoid:
        return Vec::Constant(dim_, a_ * std::sin(b_ * t + c_));
      case Kind::GaussianPulse: {
        const double g = a_ / (c_ * std::sqrt(2.0 * M_PI)) *
                         std::exp(-(t - b_) * (t - b_) / (2.0 * c_ * c_));
        return Vec::Constant(dim_, g);
      }
      case Kind::Sampled: {
        const Eigen::Index rows = values_.rows();
        double s = (t - t0_) / dt_;
        if (s <= 0) return values_.row(0).transpose();
        if (s >= double(rows - 1)) return values_.row(rows - 1).transpose();
        const Eigen::Index k = Eigen::Index(s);
        const double f = s - double(k);
        return ((1.0 - f) * values_.row(k) + f * values_.row(k + 1)).transpose();
      }
    }
    return Vec::Zero(dim_);
  }

  Signal scaled(double alpha) const {
    Signal s = *this;
    if (s.kind_ == Kind::Sampled)
      s.values_ *= alpha;
    else
      s.a_ *= alpha;
    return s;
  }

 private:
  Kind kind_ = Kind::Zero;
  Eigen::Index dim_ = 0;
  double a_ = 0, b_ = 0, c_ = 0;  // generator parameters
  double t0_ = 0, dt_ = 0;
  Mat values_;
};

struct Trajectory {
  Vec times;
  Mat states;   // one row per sample
  Mat outputs;  // y = C x per sample
  Mat inputs;   // applied u per sample
  Mat disturbances;

  Eigen::Index steps() const { return times.size(); }
};

// Composite trapezoidal rule for || s ||_{L2[0,horizon]}.
inline double l2_norm(const Signal& sig, double horizon) {
  if (horizon <= 0) throw std::invalid_argument("l2_norm: horizon must be positive");
  Eigen::Index npts;
  double dt;
  if (sig.kind() == Signal::Kind::Sampled && sig.sample_dt() > 0) {
    dt = sig.sample_dt();
    npts = Eigen::Index(std::floor(horizon / dt + 0.5)) + 1;
  } else {
    npts = 10001;
    dt = horizon / double(npts - 1);
  }
  double acc = 0;
  for (Eigen::Index k = 0; k < npts; ++k) {
    const double t = std::min(double(k) * dt, horizon);
    const double v = sig(t).squaredNorm();
    acc += (k == 0 || k == npts - 1) ? 0.5 * v : v;
  }
  return std::sqrt(acc * dt);
}

inline double l2_norm_samples(const Mat& rows, double dt) {
  if (rows.rows() < 2) return 0.0;
  double acc = 0.5 * (rows.row(0).squaredNorm() + rows.row(rows.rows() - 1).squaredNorm());
  for (Eigen::Index k = 1; k + 1 < rows.rows(); ++k) acc += rows.row(k).squaredNorm();
  return std::sqrt(acc * dt);
}

namespace detail {

// Fixed-step classical RK4 for x' = A x + f(t), recording states.
template <typename Forcing>
Mat integrate_rk4(const Mat& a, const Forcing& f, const Vec& x0, double horizon, double dt) {
  if (dt <= 0 || horizon < dt)
    throw std::invalid_argument("simulate: need dt > 0 and horizon >= dt");
  const Eigen::Index nsteps = Eigen::Index(std::floor(horizon / dt + 0.5));
  const Eigen::Index n = x0.size();
  Mat states(nsteps + 1, n);
  Vec x = x0;
  states.row(0) = x.transpose();
  Vec k1(n), k2(n), k3(n), k4(n);
  for (Eigen::Index i = 0; i < nsteps; ++i) {
    const double t = double(i) * dt;
    k1 = a * x + f(t);
    k2 = a * (x + 0.5 * dt * k1) + f(t + 0.5 * dt);
    k3 = a * (x + 0.5 * dt * k2) + f(t + 0.5 * dt);
    k4 = a * (x + dt * k3) + f(t + dt);
    x += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (x.cwiseAbs().maxCoeff() > 1e12)
      throw NonFiniteState("simulate: state blow-up at t = " + std::to_string(t + dt));
    states.row(i + 1) = x.transpose();
  }
  return states;
}

}  // namespace detail

inline Trajectory simulate(const StateSpace& sys, const Signal& u, const Signal& d,
                           const Vec& x0, double horizon, double dt) {
  require_dims(u.dim() == sys.m(), "simulate: input dimension mismatch");
  require_dims(d.dim() == sys.q(), "simulate: disturbance dimension mismatch");
  require_dims(x0.size() == sys.n(), "simulate: x0 dimension mismatch");

  const bool has_d = sys.q() > 0;
  auto forcing = [&](double t) -> Vec {
    Vec f = sys.B * u(t);
    if (has_d) f += sys.E * d(t);
    return f;
  };
  Trajectory traj;
  traj.states = detail::integrate_rk4(sys.A, forcing, x0, horizon, dt);
  const Eigen::Index npts = traj.states.rows();
  traj.times = Vec::LinSpaced(npts, 0.0, double(npts - 1) * dt);
  traj.outputs = traj.states * sys.C.transpose();
  traj.inputs.resize(npts, sys.m());
  traj.disturbances.resize(npts, sys.q());
  for (Eigen::Index k = 0; k < npts; ++k) {
    traj.inputs.row(k) = u(traj.times(k)).transpose();
    if (has_d) traj.disturbances.row(k) = d(traj.times(k)).transpose();
  }
  return traj;
}

struct CoSimulation {
  Trajectory fom;
  Trajectory rom;
  Signal d2;  // realized driving input d2(t) = F x(t), sampled on the grid
};

// Integrates the coupled pair with the reduced system driven through its
// disturbance channel by d2 = F col(x1, x2).
inline CoSimulation co_simulate_with_driving_input(const StateSpace& fom, const StateSpace& rom,
                                                   const Mat& F, const Signal& u1,
                                                   const Signal& u2, const Signal& d1,
                                                   const Vec& x0, double horizon, double dt) {
  const Eigen::Index n1 = fom.n(), n2 = rom.n();
  require_dims(F.cols() == n1 + n2, "co_simulate: F columns must equal n1 + n2");
  require_dims(F.rows() == rom.q(), "co_simulate: F rows must equal rom disturbance dim");
  require_dims(u1.dim() == fom.m() && u2.dim() == rom.m(), "co_simulate: input dims");
  require_dims(d1.dim() == fom.q(), "co_simulate: d1 dim");
  require_dims(x0.size() == n1 + n2, "co_simulate: x0 dim");

  Mat acl = Mat::Zero(n1 + n2, n1 + n2);
  acl.topLeftCorner(n1, n1) = fom.A;
  acl.bottomRightCorner(n2, n2) = rom.A;
  if (rom.q() > 0) acl.bottomRows(n2) += rom.E * F;

  const bool has_d1 = fom.q() > 0;
  auto forcing = [&](double t) -> Vec {
    Vec f(n1 + n2);
    f.head(n1) = fom.B * u1(t);
    if (has_d1) f.head(n1) += fom.E * d1(t);
    f.tail(n2) = rom.B * u2(t);
    return f;
  };

  Mat states = detail::integrate_rk4(acl, forcing, x0, horizon, dt);
  const Eigen::Index npts = states.rows();
  Vec times = Vec::LinSpaced(npts, 0.0, double(npts - 1) * dt);

  CoSimulation cs;
  cs.fom.times = times;
  cs.fom.states = states.leftCols(n1);
  cs.fom.outputs = cs.fom.states * fom.C.transpose();
  cs.rom.times = times;
  cs.rom.states = states.rightCols(n2);
  cs.rom.outputs = cs.rom.states * rom.C.transpose();

  cs.fom.inputs.resize(npts, fom.m());
  cs.rom.inputs.resize(npts, rom.m());
  cs.fom.disturbances.resize(npts, fom.q());
  for (Eigen::Index k = 0; k < npts; ++k) {
    cs.fom.inputs.row(k) = u1(times(k)).transpose();
    cs.rom.inputs.row(k) = u2(times(k)).transpose();
    if (has_d1) cs.fom.disturbances.row(k) = d1(times(k)).transpose();
  }
  Mat d2vals = states * F.transpose();
  cs.rom.disturbances = d2vals;
  cs.d2 = Signal::sampled(0.0, dt, std::move(d2vals));
  return cs;
}

inline CMat transfer_function_eval(const StateSpace& sys, std::complex<double> s) {
  CMat resolvent = -sys.A.cast<std::complex<double>>();
  resolvent.diagonal().array() += s;
  Eigen::FullPivLU<CMat> lu(resolvent);
  const auto spec = spectrum(sys.A);
  for (const auto& lam : spec.eigenvalues)
    if (std::abs(lam - s) < 1e-10)
      throw SingularResolvent("transfer_function_eval: s is (near) an eigenvalue of A");
  return sys.C.cast<std::complex<double>>() * lu.solve(sys.B.cast<std::complex<double>>());
}

// Tail bound ||C exp(At) x(T)|| for stable systems, used to report how much
// of the infinite-horizon L2 norm a finite-horizon run may be missing.
inline double l2_tail_estimate(const StateSpace& sys, const Vec& x_end) {
  if (!is_stable(sys)) return std::numeric_limits<double>::infinity();
  // integral_0^inf |C e^{At} x|^2 dt = x' O x with the observability Gramian O
  Mat o = solve_lyapunov(sys.A.transpose(), Mat(sys.C.transpose() * sys.C));
  const double v = x_end.dot(o * x_end);
  return std::sqrt(std::max(0.0, v));
}

}  // namespace mor
