#pragma once

// Interconnected systems: topology description, flattening of a subsystem
// network into one LTI system, joint co-simulation of a full-order network
// against its modular reduced network, and the modular error bounds for
// arbitrary, parallel, series, and feedback interconnection structures.
//
// Port convention: for subsystem i, the leading ext_in(i) input columns and
// ext_out(i) output rows are external; the remaining columns/rows are
// internal ports assigned to links in topology order. A link (from, to,
// sign, width) wires  w_to := sign * z_from  between the next free internal
// output block of `from` and the next free internal input block of `to`.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mor/similarity.hpp"

namespace mor {

struct IllPosedLoop : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct TopologyMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct HypothesisViolated : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class TopologyKind { Arbitrary, Parallel, Series, Feedback };

struct InterconnectLink {
  int from = 0, to = 0;
  double sign = 1.0;
  Eigen::Index width = 1;
};

struct PortSplit {
  Eigen::Index ext_in = 0, ext_out = 0;
};

struct InterconnectionTopology {
  TopologyKind kind = TopologyKind::Arbitrary;
  std::vector<PortSplit> ports;   // one entry per subsystem
  std::vector<InterconnectLink> links;

  int size() const { return int(ports.size()); }

  // Parallel juxtaposition: every subsystem keeps its own external ports.
  static InterconnectionTopology parallel(const std::vector<StateSpace>& systems) {
    InterconnectionTopology t;
    t.kind = TopologyKind::Parallel;
    for (const auto& s : systems) t.ports.push_back({s.m(), s.p()});
    return t;
  }

  // Chain: stage i's whole output feeds stage i+1's whole input; the chain
  // input is stage 0's, the chain output is the last stage's.
  static InterconnectionTopology series(const std::vector<StateSpace>& systems) {
    InterconnectionTopology t;
    t.kind = TopologyKind::Series;
    const int n = int(systems.size());
    for (int i = 0; i < n; ++i)
      t.ports.push_back({i == 0 ? systems[0].m() : 0,
                         i == n - 1 ? systems[n - 1].p() : 0});
    for (int i = 0; i + 1 < n; ++i)
      t.links.push_back({i, i + 1, 1.0, systems[std::size_t(i)].p()});
    return t;
  }

  // Negative feedback of two blocks: w1 = -z2 and w2 = +z1. Subsystems are
  // expected to expose the summing junction by duplicating ports (internal
  // input columns equal to the external ones, internal output rows equal to
  // the external ones) when e = u - y semantics are wanted.
  static InterconnectionTopology feedback(const StateSpace& s1, const StateSpace& s2,
                                          Eigen::Index ext_in1, Eigen::Index ext_out1,
                                          Eigen::Index ext_in2, Eigen::Index ext_out2) {
    InterconnectionTopology t;
    t.kind = TopologyKind::Feedback;
    t.ports.push_back({ext_in1, ext_out1});
    t.ports.push_back({ext_in2, ext_out2});
    t.links.push_back({1, 0, -1.0, s2.p() - ext_out2});
    t.links.push_back({0, 1, 1.0, s1.p() - ext_out1});
    return t;
  }
};

namespace detail {

// Per-subsystem offsets of each link's internal port block.
struct PortMap {
  // in_off[link_index] / out_off[link_index]: column/row offset within the
  // subsystem referenced by that link, or -1 if the link does not touch it.
  std::vector<Eigen::Index> in_off, out_off;
  Eigen::Index total_in = 0, total_out = 0;
};

inline std::vector<PortMap> build_port_maps(const InterconnectionTopology& t) {
  std::vector<PortMap> maps(std::size_t(t.size()));
  for (int i = 0; i < t.size(); ++i) {
    auto& m = maps[std::size_t(i)];
    m.in_off.assign(t.links.size(), -1);
    m.out_off.assign(t.links.size(), -1);
    Eigen::Index ioff = t.ports[std::size_t(i)].ext_in;
    Eigen::Index ooff = t.ports[std::size_t(i)].ext_out;
    for (std::size_t k = 0; k < t.links.size(); ++k) {
      if (t.links[k].to == i) {
        m.in_off[k] = ioff;
        ioff += t.links[k].width;
      }
      if (t.links[k].from == i) {
        m.out_off[k] = ooff;
        ooff += t.links[k].width;
      }
    }
    m.total_in = ioff;
    m.total_out = ooff;
  }
  return maps;
}

inline void validate_topology(const InterconnectionTopology& t,
                              const std::vector<StateSpace>& systems) {
  require_dims(systems.size() == std::size_t(t.size()),
               "interconnect: subsystem count does not match the topology");
  for (const auto& l : t.links)
    require_dims(l.from >= 0 && l.from < t.size() && l.to >= 0 && l.to < t.size() &&
                     l.width > 0,
                 "interconnect: link references an invalid subsystem");
  auto maps = build_port_maps(t);
  for (int i = 0; i < t.size(); ++i) {
    require_dims(systems[std::size_t(i)].m() == maps[std::size_t(i)].total_in,
                 "interconnect: input ports of subsystem " + std::to_string(i) +
                     " do not match the topology");
    require_dims(systems[std::size_t(i)].p() == maps[std::size_t(i)].total_out,
                 "interconnect: output ports of subsystem " + std::to_string(i) +
                     " do not match the topology");
  }
}

}  // namespace detail

// Flattens the network into one LTI system. External inputs/outputs and
// disturbances are stacked in subsystem order, except for the parallel kind,
// which keeps the classic shared-input/summed-output reading.
inline StateSpace compose(const InterconnectionTopology& t,
                          const std::vector<StateSpace>& systems) {
  detail::validate_topology(t, systems);
  const int N = t.size();
  auto maps = detail::build_port_maps(t);

  std::vector<Eigen::Index> xoff(std::size_t(N) + 1, 0);
  Eigen::Index m_ext = 0, p_ext = 0, q_tot = 0;
  for (int i = 0; i < N; ++i) {
    xoff[std::size_t(i) + 1] = xoff[std::size_t(i)] + systems[std::size_t(i)].n();
    m_ext += t.ports[std::size_t(i)].ext_in;
    p_ext += t.ports[std::size_t(i)].ext_out;
    q_tot += systems[std::size_t(i)].q();
  }
  const Eigen::Index n = xoff[std::size_t(N)];

  Mat a = Mat::Zero(n, n);
  Mat e = Mat::Zero(n, q_tot);
  Eigen::Index qo = 0;
  for (int i = 0; i < N; ++i) {
    const auto& s = systems[std::size_t(i)];
    a.block(xoff[std::size_t(i)], xoff[std::size_t(i)], s.n(), s.n()) = s.A;
    if (s.q() > 0) e.block(xoff[std::size_t(i)], qo, s.n(), s.q()) = s.E;
    qo += s.q();
  }
  for (std::size_t k = 0; k < t.links.size(); ++k) {
    const auto& l = t.links[k];
    const auto& sf = systems[std::size_t(l.from)];
    const auto& st = systems[std::size_t(l.to)];
    a.block(xoff[std::size_t(l.to)], xoff[std::size_t(l.from)], st.n(), sf.n()) +=
        l.sign * st.B.middleCols(maps[std::size_t(l.to)].in_off[k], l.width) *
        sf.C.middleRows(maps[std::size_t(l.from)].out_off[k], l.width);
  }

  Mat b, c;
  if (t.kind == TopologyKind::Parallel) {
    // Shared input, summed output.
    for (int i = 1; i < N; ++i)
      require_dims(t.ports[std::size_t(i)].ext_in == t.ports[0].ext_in &&
                       t.ports[std::size_t(i)].ext_out == t.ports[0].ext_out,
                   "compose: parallel subsystems must share port dimensions");
    b = Mat::Zero(n, t.ports[0].ext_in);
    c = Mat::Zero(t.ports[0].ext_out, n);
    for (int i = 0; i < N; ++i) {
      const auto& s = systems[std::size_t(i)];
      b.middleRows(xoff[std::size_t(i)], s.n()) = s.B.leftCols(t.ports[0].ext_in);
      c.middleCols(xoff[std::size_t(i)], s.n()) = s.C.topRows(t.ports[0].ext_out);
    }
  } else {
    b = Mat::Zero(n, m_ext);
    c = Mat::Zero(p_ext, n);
    Eigen::Index mo = 0, po = 0;
    for (int i = 0; i < N; ++i) {
      const auto& s = systems[std::size_t(i)];
      const auto& pt = t.ports[std::size_t(i)];
      if (pt.ext_in > 0)
        b.block(xoff[std::size_t(i)], mo, s.n(), pt.ext_in) = s.B.leftCols(pt.ext_in);
      if (pt.ext_out > 0)
        c.block(po, xoff[std::size_t(i)], pt.ext_out, s.n()) = s.C.topRows(pt.ext_out);
      mo += pt.ext_in;
      po += pt.ext_out;
    }
  }
  return StateSpace(a, b, c, e);
}

// One certified full-order/reduced-order subsystem pair.
struct CertifiedPair {
  StateSpace fom, rom;
  SimilarityCertificate cert;
  GainConstants gains;
};

struct ModularReduction {
  std::vector<CertifiedPair> pairs;
  InterconnectionTopology topology;
};

// External inputs per subsystem for both networks and the full-order
// disturbances; empty rom_inputs means "same as inputs".
struct NetworkScenario {
  std::vector<Signal> inputs;      // external u_i (dimension ext_in(i))
  std::vector<Signal> rom_inputs;  // external u_i' (optional)
  std::vector<Signal> disturbances;  // d_i (dimension fom.q())
  double horizon = 10.0;
  double dt = 1e-3;
};

// Signals recorded while integrating the joint (FOM network, ROM network)
// dynamics; one row per sample.
struct NetworkRun {
  double dt = 0.0;
  std::vector<Mat> y, y_rom;       // external outputs
  std::vector<Mat> z, z_rom;       // internal outputs (all ports stacked)
  std::vector<Mat> u, u_rom;       // external inputs as realized
  std::vector<Mat> d, d_rom;       // d_i and the certified d_i' = F_i x
};

inline NetworkRun co_simulate_networks(const ModularReduction& mr,
                                       const NetworkScenario& sc) {
  const auto& t = mr.topology;
  const int N = t.size();
  require_dims(int(mr.pairs.size()) == N, "co_simulate_networks: pair count");
  require_dims(int(sc.inputs.size()) == N && int(sc.disturbances.size()) == N,
               "co_simulate_networks: scenario signal count");
  std::vector<StateSpace> foms, roms;
  for (const auto& p : mr.pairs) {
    foms.push_back(p.fom);
    roms.push_back(p.rom);
  }
  detail::validate_topology(t, foms);
  detail::validate_topology(t, roms);
  auto maps = detail::build_port_maps(t);

  std::vector<Eigen::Index> xoff(std::size_t(N) + 1, 0), roff(std::size_t(N) + 1, 0);
  for (int i = 0; i < N; ++i) {
    xoff[std::size_t(i) + 1] = xoff[std::size_t(i)] + foms[std::size_t(i)].n();
    roff[std::size_t(i) + 1] = roff[std::size_t(i)] + roms[std::size_t(i)].n();
  }
  const Eigen::Index nf = xoff[std::size_t(N)], nr = roff[std::size_t(N)];
  const Eigen::Index n = nf + nr;

  Mat acl = Mat::Zero(n, n);
  for (int i = 0; i < N; ++i) {
    acl.block(xoff[std::size_t(i)], xoff[std::size_t(i)], foms[std::size_t(i)].n(),
              foms[std::size_t(i)].n()) = foms[std::size_t(i)].A;
    acl.block(nf + roff[std::size_t(i)], nf + roff[std::size_t(i)],
              roms[std::size_t(i)].n(), roms[std::size_t(i)].n()) =
        roms[std::size_t(i)].A;
  }
  for (std::size_t k = 0; k < t.links.size(); ++k) {
    const auto& l = t.links[k];
    const auto &ff = foms[std::size_t(l.from)], &ft = foms[std::size_t(l.to)];
    const auto &rf = roms[std::size_t(l.from)], &rt = roms[std::size_t(l.to)];
    acl.block(xoff[std::size_t(l.to)], xoff[std::size_t(l.from)], ft.n(), ff.n()) +=
        l.sign * ft.B.middleCols(maps[std::size_t(l.to)].in_off[k], l.width) *
        ff.C.middleRows(maps[std::size_t(l.from)].out_off[k], l.width);
    acl.block(nf + roff[std::size_t(l.to)], nf + roff[std::size_t(l.from)], rt.n(),
              rf.n()) +=
        l.sign * rt.B.middleCols(maps[std::size_t(l.to)].in_off[k], l.width) *
        rf.C.middleRows(maps[std::size_t(l.from)].out_off[k], l.width);
  }
  // Certified driving inputs d_i' = F_i col(x_i, x_i').
  for (int i = 0; i < N; ++i) {
    const auto& p = mr.pairs[std::size_t(i)];
    if (p.rom.q() == 0) continue;
    require_dims(p.cert.F.rows() == p.rom.q() &&
                     p.cert.F.cols() == p.fom.n() + p.rom.n(),
                 "co_simulate_networks: certificate F dimensions");
    acl.block(nf + roff[std::size_t(i)], xoff[std::size_t(i)], p.rom.n(), p.fom.n()) +=
        p.rom.E * p.cert.F.leftCols(p.fom.n());
    acl.block(nf + roff[std::size_t(i)], nf + roff[std::size_t(i)], p.rom.n(),
              p.rom.n()) += p.rom.E * p.cert.F.rightCols(p.rom.n());
  }

  const auto& u_rom_sigs = sc.rom_inputs.empty() ? sc.inputs : sc.rom_inputs;
  require_dims(int(u_rom_sigs.size()) == N, "co_simulate_networks: rom input count");
  auto forcing = [&](double time) -> Vec {
    Vec f = Vec::Zero(n);
    for (int i = 0; i < N; ++i) {
      const auto& pt = t.ports[std::size_t(i)];
      const auto& fs = foms[std::size_t(i)];
      const auto& rs = roms[std::size_t(i)];
      if (pt.ext_in > 0) {
        f.segment(xoff[std::size_t(i)], fs.n()) +=
            fs.B.leftCols(pt.ext_in) * sc.inputs[std::size_t(i)](time);
        f.segment(nf + roff[std::size_t(i)], rs.n()) +=
            rs.B.leftCols(pt.ext_in) * u_rom_sigs[std::size_t(i)](time);
      }
      if (fs.q() > 0)
        f.segment(xoff[std::size_t(i)], fs.n()) +=
            fs.E * sc.disturbances[std::size_t(i)](time);
    }
    return f;
  };

  Mat states = detail::integrate_rk4(acl, forcing, Vec::Zero(n), sc.horizon, sc.dt);
  const Eigen::Index npts = states.rows();

  NetworkRun run;
  run.dt = sc.dt;
  run.y.resize(std::size_t(N));
  run.y_rom.resize(std::size_t(N));
  run.z.resize(std::size_t(N));
  run.z_rom.resize(std::size_t(N));
  run.u.resize(std::size_t(N));
  run.u_rom.resize(std::size_t(N));
  run.d.resize(std::size_t(N));
  run.d_rom.resize(std::size_t(N));
  for (int i = 0; i < N; ++i) {
    const auto& pt = t.ports[std::size_t(i)];
    const auto& fs = foms[std::size_t(i)];
    const auto& rs = roms[std::size_t(i)];
    Mat xs = states.middleCols(xoff[std::size_t(i)], fs.n());
    Mat xr = states.middleCols(nf + roff[std::size_t(i)], rs.n());
    run.y[std::size_t(i)] = xs * fs.C.topRows(pt.ext_out).transpose();
    run.y_rom[std::size_t(i)] = xr * rs.C.topRows(pt.ext_out).transpose();
    run.z[std::size_t(i)] =
        xs * fs.C.bottomRows(fs.p() - pt.ext_out).transpose();
    run.z_rom[std::size_t(i)] =
        xr * rs.C.bottomRows(rs.p() - pt.ext_out).transpose();
    run.u[std::size_t(i)].resize(npts, pt.ext_in);
    run.u_rom[std::size_t(i)].resize(npts, pt.ext_in);
    run.d[std::size_t(i)].resize(npts, fs.q());
    for (Eigen::Index s = 0; s < npts; ++s) {
      const double time = double(s) * sc.dt;
      if (pt.ext_in > 0) {
        run.u[std::size_t(i)].row(s) = sc.inputs[std::size_t(i)](time).transpose();
        run.u_rom[std::size_t(i)].row(s) =
            u_rom_sigs[std::size_t(i)](time).transpose();
      }
      if (fs.q() > 0)
        run.d[std::size_t(i)].row(s) =
            sc.disturbances[std::size_t(i)](time).transpose();
    }
    const auto& p = mr.pairs[std::size_t(i)];
    if (p.rom.q() > 0) {
      Mat joint(npts, fs.n() + rs.n());
      joint << xs, xr;
      run.d_rom[std::size_t(i)] = joint * p.cert.F.transpose();
    } else {
      run.d_rom[std::size_t(i)] = Mat(npts, 0);
    }
  }
  return run;
}

struct InterconnectBoundReport {
  TopologyKind kind = TopologyKind::Arbitrary;
  double gamma_r = 0.0, delta_r = 0.0, delta_max = 0.0;
  double l_total = 0.0, eps_tilde = 0.0;
  bool applicable = true;
  std::string violated_hypothesis;
  double lhs = 0.0, rhs = 0.0, slack = 0.0;
  // Internal-output energy inequality (arbitrary structure):
  //   (1 - l) * sum ||z_ij||^2 + ||z_ij'||^2  <=  internal_energy_rhs
  double internal_energy_lhs = 0.0, internal_energy_rhs = 0.0;
};

namespace detail {

inline double sq_norm(const Mat& rows, double dt) {
  const double v = l2_norm_samples(rows, dt);
  return v * v;
}

inline Mat hstack(const Mat& a, const Mat& b) {
  Mat m(a.rows(), a.cols() + b.cols());
  m << a, b;
  return m;
}

}  // namespace detail

// Constants claimed for a series chain: gamma_r is the product of the stage
// gammas; delta_r sums each stage's delta scaled by downstream gammas and
// upstream output gains.
inline std::pair<double, double> series_constants(const std::vector<double>& gamma,
                                                  const std::vector<double>& delta,
                                                  const std::vector<double>& l) {
  const std::size_t n = gamma.size();
  require_dims(delta.size() == n && l.size() == n,
               "series_constants: mismatched lengths");
  double gr = 1.0, dr = 0.0;
  for (double g : gamma) gr *= g;
  for (std::size_t i = 0; i < n; ++i) {
    double term = delta[i];
    for (std::size_t j = i + 1; j < n; ++j) term *= gamma[j];
    for (std::size_t k = 0; k < i; ++k) term *= l[k];
    dr += term;
  }
  return {gr, dr};
}

// Constants claimed for a parallel juxtaposition.
inline std::pair<double, double> parallel_constants(const std::vector<double>& gamma,
                                                    const std::vector<double>& delta) {
  require_dims(!gamma.empty() && gamma.size() == delta.size(),
               "parallel_constants: mismatched lengths");
  return {*std::max_element(gamma.begin(), gamma.end()),
          *std::max_element(delta.begin(), delta.end())};
}

// Error bound for an arbitrary interconnection structure. Applicability
// requires l = sum l_i < 1 and gamma_i < 1 for every subsystem; when a
// hypothesis fails the report names it and carries no RHS.
inline InterconnectBoundReport modular_bound_arbitrary(const ModularReduction& mr,
                                                       const NetworkScenario& sc) {
  const int N = mr.topology.size();
  InterconnectBoundReport rep;
  rep.kind = TopologyKind::Arbitrary;
  double l = 0.0, dmax = 0.0;
  for (const auto& p : mr.pairs) {
    l += p.gains.l;
    dmax = std::max(dmax, p.cert.weights.delta);
  }
  rep.l_total = l;
  rep.delta_max = dmax;
  const bool coupled = !mr.topology.links.empty();
  if (coupled && l >= 1.0) {
    rep.applicable = false;
    rep.violated_hypothesis = "l = " + std::to_string(l) + " >= 1";
    return rep;
  }
  for (int i = 0; coupled && i < N; ++i)
    if (mr.pairs[std::size_t(i)].cert.weights.gamma >= 1.0) {
      rep.applicable = false;
      rep.violated_hypothesis =
          "gamma_" + std::to_string(i + 1) + " = " +
          std::to_string(mr.pairs[std::size_t(i)].cert.weights.gamma) + " >= 1";
      return rep;
    }

  NetworkRun run = co_simulate_networks(mr, sc);
  // Internal-signal amplification; absent links contribute nothing, so the
  // single-subsystem case reduces to the plain per-pair bound.
  const double corr = coupled ? dmax / (1.0 - l) : 0.0;
  double lhs = 0.0, rhs = 0.0, zi = 0.0, zrhs = 0.0;
  for (int i = 0; i < N; ++i) {
    const auto& p = mr.pairs[std::size_t(i)];
    const auto& w = p.cert.weights;
    const double eps = p.cert.epsilon;
    lhs += detail::sq_norm(run.y[std::size_t(i)] - run.y_rom[std::size_t(i)], run.dt);
    const double nd = detail::sq_norm(run.d[std::size_t(i)], run.dt);
    const double ndr = detail::sq_norm(run.d_rom[std::size_t(i)], run.dt);
    const double nud =
        detail::sq_norm(run.u[std::size_t(i)] - run.u_rom[std::size_t(i)], run.dt);
    const double nus = detail::sq_norm(
        detail::hstack(run.u[std::size_t(i)], run.u_rom[std::size_t(i)]), run.dt);
    rhs += (w.mu - eps + p.gains.k * corr) * nd - w.eta * ndr;
    rhs += w.gamma * nud + (w.delta - eps + p.gains.l * corr) * nus;
    zi += detail::sq_norm(run.z[std::size_t(i)], run.dt) +
          detail::sq_norm(run.z_rom[std::size_t(i)], run.dt);
    zrhs += p.gains.k * nd +
            p.gains.l * detail::sq_norm(run.u[std::size_t(i)], run.dt) +
            p.gains.l * detail::sq_norm(run.u_rom[std::size_t(i)], run.dt);
  }
  rep.lhs = lhs;
  rep.rhs = rhs;
  rep.slack = rhs - lhs;
  rep.internal_energy_lhs = (1.0 - l) * zi;
  rep.internal_energy_rhs = zrhs;
  return rep;
}

// Parallel juxtaposition: gamma_r and delta_r are the maxima over the
// subsystems; no smallness hypotheses are needed.
inline InterconnectBoundReport modular_bound_parallel(const ModularReduction& mr,
                                                      const NetworkScenario& sc) {
  if (mr.topology.kind != TopologyKind::Parallel)
    throw TopologyMismatch("modular_bound_parallel: topology is not parallel");
  InterconnectBoundReport rep;
  rep.kind = TopologyKind::Parallel;
  for (const auto& p : mr.pairs) {
    rep.gamma_r = std::max(rep.gamma_r, p.cert.weights.gamma);
    rep.delta_r = std::max(rep.delta_r, p.cert.weights.delta);
    rep.l_total += p.gains.l;
  }
  rep.delta_max = rep.delta_r;

  NetworkRun run = co_simulate_networks(mr, sc);
  double lhs = 0.0, rhs = 0.0;
  for (std::size_t i = 0; i < mr.pairs.size(); ++i) {
    const auto& w = mr.pairs[i].cert.weights;
    lhs += detail::sq_norm(run.y[i] - run.y_rom[i], run.dt);
    rhs += rep.gamma_r * detail::sq_norm(run.u[i] - run.u_rom[i], run.dt);
    rhs += rep.delta_r * detail::sq_norm(detail::hstack(run.u[i], run.u_rom[i]),
                                         run.dt);
    rhs += w.mu * detail::sq_norm(run.d[i], run.dt) -
           w.eta * detail::sq_norm(run.d_rom[i], run.dt);
  }
  rep.lhs = lhs;
  rep.rhs = rhs;
  rep.slack = rhs - lhs;
  return rep;
}

// Series chain: gamma_r is the product of subsystem gammas and delta_r the
// stated mixed product sum. The certified RHS for the simulated scenario is
// obtained by chaining the per-stage inequalities with measured inter-stage
// signals.
inline InterconnectBoundReport modular_bound_series(const ModularReduction& mr,
                                                    const NetworkScenario& sc) {
  if (mr.topology.kind != TopologyKind::Series)
    throw TopologyMismatch("modular_bound_series: topology is not series");
  const int N = mr.topology.size();
  InterconnectBoundReport rep;
  rep.kind = TopologyKind::Series;
  std::vector<double> gs, ds, ls;
  for (const auto& p : mr.pairs) {
    gs.push_back(p.cert.weights.gamma);
    ds.push_back(p.cert.weights.delta);
    ls.push_back(p.gains.l);
    rep.l_total += p.gains.l;
    rep.delta_max = std::max(rep.delta_max, p.cert.weights.delta);
  }
  std::tie(rep.gamma_r, rep.delta_r) = series_constants(gs, ds, ls);

  NetworkRun run = co_simulate_networks(mr, sc);
  // Chained certified bound: stage i's full input is the previous stage's
  // output (external input for stage 0), so
  //   ||y_i - y_i'||^2 <= gamma_i * B_{i-1} + delta_i ||[u_i; u_i']||^2
  //                       + mu_i ||d_i||^2 - eta_i ||d_i'||^2  =: B_i
  // with the stacked-input norms measured on the run.
  const Eigen::Index npts = run.y[0].rows();
  Mat uin = run.u[0], uin_r = run.u_rom[0];
  double bound = 0.0;
  for (int i = 0; i < N; ++i) {
    const auto& w = mr.pairs[std::size_t(i)].cert.weights;
    const double eps = mr.pairs[std::size_t(i)].cert.epsilon;
    const double nus = detail::sq_norm(detail::hstack(uin, uin_r), run.dt);
    const double nud = (i == 0) ? detail::sq_norm(uin - uin_r, run.dt) : bound;
    bound = w.gamma * nud + (w.delta - eps) * nus +
            (w.mu - eps) * detail::sq_norm(run.d[std::size_t(i)], run.dt) -
            w.eta * detail::sq_norm(run.d_rom[std::size_t(i)], run.dt);
    if (i + 1 < N) {
      // The next stage's inputs are this stage's full outputs.
      const auto& fs = mr.pairs[std::size_t(i)].fom;
      Mat youtf(npts, fs.p()), youtr(npts, fs.p());
      youtf << run.y[std::size_t(i)], run.z[std::size_t(i)];
      youtr << run.y_rom[std::size_t(i)], run.z_rom[std::size_t(i)];
      uin = youtf;
      uin_r = youtr;
    }
  }
  rep.lhs = detail::sq_norm(run.y[std::size_t(N - 1)] - run.y_rom[std::size_t(N - 1)],
                            run.dt);
  rep.rhs = bound;
  rep.slack = rep.rhs - rep.lhs;
  return rep;
}

// Feedback pair constants for a given margin parameter nu > 0. Throws when a
// smallness hypothesis fails, naming the violated product.
inline std::pair<double, double> feedback_constants(double g1, double g2, double d1,
                                                    double d2, double l1, double l2,
                                                    double nu) {
  if (!(nu > 0.0))
    throw std::invalid_argument("feedback_constants: nu must be positive");
  const double et = 1.0 + nu;
  const double gg = et * et * g1 * g2;
  const double ll = et * et * l1 * l2;
  if (gg >= 1.0)
    throw HypothesisViolated("feedback: (1+nu)^2 * gamma1 * gamma2 = " +
                             std::to_string(gg) + " >= 1");
  if (ll >= 1.0)
    throw HypothesisViolated("feedback: (1+nu)^2 * l1 * l2 = " + std::to_string(ll) +
                             " >= 1");
  const double gmax = std::max(g1, g2), dmax = std::max(d1, d2),
               lmax = std::max(l1, l2);
  const double gamma_r = (et * gmax + et * et * g1 * g2) / (nu * (1.0 - gg));
  const double delta_r =
      2.0 * et * dmax * lmax * (1.0 + et * gmax) / ((1.0 - gg) * (1.0 - ll)) +
      2.0 * dmax * (1.0 + et * gmax) * (nu + et * et * (1.0 - nu) * l1 * l2) /
          (nu * (1.0 - gg) * (1.0 - ll));
  return {gamma_r, delta_r};
}

// Smallest gamma_r + delta_r over a log grid of nu values; returns the
// minimizing nu (throws if no grid point satisfies the hypotheses).
inline double optimize_feedback_nu(double g1, double g2, double d1, double d2,
                                   double l1, double l2) {
  double best_nu = 0.0, best = std::numeric_limits<double>::infinity();
  for (int k = -60; k <= 30; ++k) {
    const double nu = std::pow(10.0, double(k) / 10.0);
    try {
      auto [gr, dr] = feedback_constants(g1, g2, d1, d2, l1, l2, nu);
      if (gr + dr < best) {
        best = gr + dr;
        best_nu = nu;
      }
    } catch (const HypothesisViolated&) {
      continue;
    }
  }
  if (!(best < std::numeric_limits<double>::infinity()))
    throw HypothesisViolated(
        "optimize_feedback_nu: no nu satisfies the smallness hypotheses");
  return best_nu;
}

// Negative feedback of two certified pairs. The claimed pair (gamma_r,
// delta_r) is validated on disturbance-free scenarios; the certified
// disturbance terms are not part of the feedback statement.
inline InterconnectBoundReport modular_bound_feedback(const ModularReduction& mr,
                                                      const NetworkScenario& sc,
                                                      double nu = 0.5) {
  if (mr.topology.kind != TopologyKind::Feedback || mr.topology.size() != 2)
    throw TopologyMismatch("modular_bound_feedback: topology is not a feedback pair");
  const auto& w1 = mr.pairs[0].cert.weights;
  const auto& w2 = mr.pairs[1].cert.weights;
  InterconnectBoundReport rep;
  rep.kind = TopologyKind::Feedback;
  rep.eps_tilde = 1.0 + nu;
  rep.l_total = mr.pairs[0].gains.l + mr.pairs[1].gains.l;
  rep.delta_max = std::max(w1.delta, w2.delta);
  std::tie(rep.gamma_r, rep.delta_r) =
      feedback_constants(w1.gamma, w2.gamma, w1.delta, w2.delta, mr.pairs[0].gains.l,
                         mr.pairs[1].gains.l, nu);

  for (const auto& dsig : sc.disturbances)
    require_dims(dsig.kind() == Signal::Kind::Zero,
                 "modular_bound_feedback: validation requires disturbance-free "
                 "scenarios");

  NetworkRun run = co_simulate_networks(mr, sc);
  double lhs = 0.0, nud = 0.0, nus = 0.0;
  for (std::size_t i = 0; i < 2; ++i) {
    lhs += detail::sq_norm(run.y[i] - run.y_rom[i], run.dt);
    nud += detail::sq_norm(run.u[i] - run.u_rom[i], run.dt);
    nus += detail::sq_norm(detail::hstack(run.u[i], run.u_rom[i]), run.dt);
  }
  rep.lhs = lhs;
  rep.rhs = rep.gamma_r * nud + rep.delta_r * nus;
  rep.slack = rep.rhs - rep.lhs;
  return rep;
}

}  // namespace mor
