#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "mor/interconnect.hpp"
#include "mor/io.hpp"

using namespace mor;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("mor_io_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { std::error_code ec; fs::remove_all(path, ec); }
};

Mat random_matrix(std::mt19937& rng, Eigen::Index r, Eigen::Index c) {
  std::normal_distribution<double> g;
  Mat m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = g(rng);
  return m;
}

StateSpace random_system(std::mt19937& rng, Eigen::Index n, Eigen::Index m,
                         Eigen::Index p, Eigen::Index q) {
  Mat a = random_matrix(rng, n, n);
  a -= (spectrum(a).max_real_part + 1.0) * Mat::Identity(n, n);
  return StateSpace(a, random_matrix(rng, n, m), random_matrix(rng, p, n),
                    q > 0 ? random_matrix(rng, n, q) : Mat(n, 0), "sys");
}

}  // namespace

TEST_CASE("matrix exchange files round-trip bit-exactly") {
  TempDir tmp;
  std::mt19937 rng(3);
  Mat m = random_matrix(rng, 5, 3);
  m(0, 0) = 1.0 / 3.0;  // non-terminating decimal
  m(1, 2) = 1e-300;
  save_matrix_market(tmp.path / "m.mtx", m);
  Mat back = load_matrix_market(tmp.path / "m.mtx");
  REQUIRE(back.rows() == 5);
  REQUIRE(back.cols() == 3);
  CHECK((back - m).norm() == 0.0);

  SECTION("coordinate format is accepted") {
    std::ofstream out(tmp.path / "c.mtx");
    out << "%%MatrixMarket matrix coordinate real general\n% comment\n3 4 2\n"
        << "1 2 2.5\n3 4 -1\n";
    out.close();
    Mat c = load_matrix_market(tmp.path / "c.mtx");
    REQUIRE(c.rows() == 3);
    CHECK(c(0, 1) == 2.5);
    CHECK(c(2, 3) == -1.0);
    CHECK(c.cwiseAbs().sum() == 3.5);
  }
  SECTION("bad headers are rejected") {
    std::ofstream(tmp.path / "bad.mtx") << "not a matrix\n1 1\n0\n";
    CHECK_THROWS_AS(load_matrix_market(tmp.path / "bad.mtx"), ParseError);
    std::ofstream(tmp.path / "cplx.mtx")
        << "%%MatrixMarket matrix array complex general\n1 1\n0 0\n";
    CHECK_THROWS_AS(load_matrix_market(tmp.path / "cplx.mtx"), ParseError);
  }
}

TEST_CASE("system documents round-trip") {
  TempDir tmp;
  std::mt19937 rng(5);
  StateSpace sys = random_system(rng, 4, 2, 1, 2);
  save_system(tmp.path / "sys.json", sys);
  StateSpace back = load_system(tmp.path / "sys.json");
  CHECK(back.name == "sys");
  CHECK((back.A - sys.A).norm() == 0.0);
  CHECK((back.B - sys.B).norm() == 0.0);
  CHECK((back.C - sys.C).norm() == 0.0);
  CHECK((back.E - sys.E).norm() == 0.0);

  SECTION("matrix file references resolve relative to the document") {
    save_matrix_market(tmp.path / "A.mtx", sys.A);
    json j = system_to_json(sys);
    j["A"] = {{"file", "A.mtx"}};
    detail::write_text(tmp.path / "ref.json", j.dump());
    StateSpace ref = load_system(tmp.path / "ref.json");
    CHECK((ref.A - sys.A).norm() == 0.0);
  }
  SECTION("declared dimensions are validated") {
    json j = system_to_json(sys);
    j["n"] = 17;
    detail::write_text(tmp.path / "bad.json", j.dump());
    CHECK_THROWS_AS(load_system(tmp.path / "bad.json"), ParseError);
  }
  SECTION("ragged matrices are rejected") {
    CHECK_THROWS_AS(matrix_from_json(json::parse("[[1,2],[3]]")), ParseError);
  }
}

TEST_CASE("signals and scenarios round-trip") {
  TempDir tmp;
  ScenarioDocument sc;
  sc.u1 = Signal::sinusoid(2, 20.0, 2.0, 0.25);
  sc.u2 = Signal::gaussian_pulse(1, 30.0, 10.0, 0.2);
  std::mt19937 rng(7);
  sc.d1 = Signal::sampled(0.5, 0.1, random_matrix(rng, 6, 2));
  sc.x0 = Vec::LinSpaced(3, -1.0, 1.0);
  sc.horizon = 12.5;
  sc.dt = 2e-3;
  save_scenario(tmp.path / "sc.json", sc);
  ScenarioDocument back = load_scenario(tmp.path / "sc.json");

  CHECK(back.horizon == sc.horizon);
  CHECK(back.dt == sc.dt);
  CHECK((back.x0 - sc.x0).norm() == 0.0);
  for (double t : {0.0, 0.31, 0.77, 5.0, 11.0}) {
    CHECK((back.u1(t) - sc.u1(t)).norm() == 0.0);
    CHECK((back.u2(t) - sc.u2(t)).norm() == 0.0);
    CHECK((back.d1(t) - sc.d1(t)).norm() == 0.0);
  }

  SECTION("unknown signal kinds are rejected") {
    CHECK_THROWS_AS(signal_from_json(json::parse(R"({"kind":"square","dim":1})")),
                    ParseError);
  }
}

TEST_CASE("certificate documents round-trip") {
  TempDir tmp;
  std::mt19937 rng(11);
  SimilarityCertificate cert;
  cert.weights = {0.25, 0.5, 2.0, 0.125};
  Mat x = random_matrix(rng, 4, 4);
  cert.X = (x * x.transpose() + Mat::Identity(4, 4)).eval();
  cert.Pi = random_matrix(rng, 1, 4);
  cert.F = cert.Pi * cert.X.inverse();
  cert.epsilon = 1e-3;
  cert.lmi_margin = -1e-5;
  cert.solver_config = "barrier(test)";
  save_certificate(tmp.path / "cert.json", cert);
  SimilarityCertificate back = load_certificate(tmp.path / "cert.json");
  CHECK(back.weights.gamma == cert.weights.gamma);
  CHECK(back.weights.eta == cert.weights.eta);
  CHECK((back.X - cert.X).norm() == 0.0);
  CHECK((back.Pi - cert.Pi).norm() == 0.0);
  CHECK((back.F - cert.F).norm() == 0.0);
  CHECK(back.epsilon == cert.epsilon);
  CHECK(back.solver_config == cert.solver_config);

  SECTION("non-positive weights are rejected") {
    json j = certificate_to_json(cert);
    j["weights"]["gamma"] = -1.0;
    detail::write_text(tmp.path / "bad.json", j.dump());
    CHECK_THROWS(load_certificate(tmp.path / "bad.json"));
  }
}

TEST_CASE("topology documents round-trip and compose identically") {
  TempDir tmp;
  std::mt19937 rng(13);
  // Each system: 1 external input + 1 linked input, 1 external output +
  // 1 linked output.
  std::vector<StateSpace> systems = {random_system(rng, 3, 2, 2, 1),
                                     random_system(rng, 2, 2, 2, 1)};
  TopologyDocument doc;
  doc.topology.kind = TopologyKind::Arbitrary;
  doc.topology.ports = {{1, 1}, {1, 1}};
  doc.topology.links = {{0, 1, -1.0, 1}, {1, 0, 1.0, 1}};
  doc.systems = systems;
  save_topology(tmp.path / "top.json", doc);
  TopologyDocument back = load_topology(tmp.path / "top.json");

  REQUIRE(back.systems.size() == 2);
  REQUIRE(back.topology.links.size() == 2);
  CHECK(back.topology.links[0].sign == -1.0);
  StateSpace c1 = compose(doc.topology, doc.systems);
  StateSpace c2 = compose(back.topology, back.systems);
  CHECK((c1.A - c2.A).norm() == 0.0);
  CHECK((c1.B - c2.B).norm() == 0.0);
  CHECK((c1.C - c2.C).norm() == 0.0);

  SECTION("subsystems may be file references") {
    save_system(tmp.path / "s0.json", systems[0]);
    save_system(tmp.path / "s1.json", systems[1]);
    json j = topology_to_json(doc.topology);
    j["systems"] = {"s0.json", "s1.json"};
    detail::write_text(tmp.path / "ref.json", j.dump());
    TopologyDocument ref = load_topology(tmp.path / "ref.json");
    CHECK((ref.systems[0].A - systems[0].A).norm() == 0.0);
    CHECK((ref.systems[1].B - systems[1].B).norm() == 0.0);
  }
  SECTION("count mismatch is rejected") {
    json j = topology_to_json(doc.topology);
    j["systems"] = {system_to_json(systems[0])};
    detail::write_text(tmp.path / "bad.json", j.dump());
    CHECK_THROWS_AS(load_topology(tmp.path / "bad.json"), ParseError);
  }
}

TEST_CASE("csv tables round-trip at full precision") {
  TempDir tmp;
  std::mt19937 rng(17);
  Mat rows = random_matrix(rng, 20, 4);
  rows(3, 2) = 1.0 / 7.0;
  save_csv(tmp.path / "t.csv", {"t", "y", "y_rom", "err"}, rows);
  CsvTable back = load_csv(tmp.path / "t.csv");
  REQUIRE(back.header == std::vector<std::string>({"t", "y", "y_rom", "err"}));
  CHECK((back.rows - rows).norm() == 0.0);

  SECTION("header width must match data") {
    CHECK_THROWS_AS(save_csv(tmp.path / "bad.csv", {"a", "b"}, rows), ParseError);
  }
}
