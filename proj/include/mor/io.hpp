#pragma once

// File formats: JSON documents for systems, scenarios, certificates, and
// interconnection topologies; Matrix Market exchange files for individual
// matrices; full-precision CSV for trajectories. Every format round-trips
// losslessly at double precision.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mor/interconnect.hpp"
#include "mor/lti.hpp"
#include "mor/similarity.hpp"

namespace mor {

using nlohmann::json;

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path.string());
  out << text;
}

inline json parse_json(const std::filesystem::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

// Full-precision decimal rendering; round-trips any finite double.
inline std::string full_precision(double v) {
  std::ostringstream ss;
  ss.imbue(std::locale::classic());
  ss.precision(17);
  ss << v;
  return ss.str();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Matrix Market (dense "array" and sparse "coordinate" real general).

inline Mat load_matrix_market(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::string header;
  if (!std::getline(in, header) || header.rfind("%%MatrixMarket", 0) != 0)
    throw ParseError(path.string() + ": missing MatrixMarket header");
  std::istringstream hs(header);
  std::string tag, object, format, field, symmetry;
  hs >> tag >> object >> format >> field >> symmetry;
  if (object != "matrix" || (format != "array" && format != "coordinate") ||
      field != "real" || symmetry != "general")
    throw ParseError(path.string() + ": unsupported MatrixMarket type '" + header + "'");

  std::string line;
  while (std::getline(in, line))
    if (!line.empty() && line[0] != '%') break;
  std::istringstream sz(line);
  Eigen::Index rows = 0, cols = 0;
  long long nnz = 0;
  sz >> rows >> cols;
  if (format == "coordinate") sz >> nnz;
  if (!sz || rows <= 0 || cols <= 0)
    throw ParseError(path.string() + ": bad size line '" + line + "'");

  Mat m = Mat::Zero(rows, cols);
  if (format == "array") {
    // Column-major stream of entries.
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i)
        if (!(in >> m(i, j)))
          throw ParseError(path.string() + ": truncated array data");
  } else {
    for (long long k = 0; k < nnz; ++k) {
      Eigen::Index i, j;
      double v;
      if (!(in >> i >> j >> v))
        throw ParseError(path.string() + ": truncated coordinate data");
      if (i < 1 || i > rows || j < 1 || j > cols)
        throw ParseError(path.string() + ": coordinate out of range");
      m(i - 1, j - 1) = v;
    }
  }
  return m;
}

inline void save_matrix_market(const std::filesystem::path& path, const Mat& m) {
  std::ostringstream ss;
  ss.imbue(std::locale::classic());
  ss << "%%MatrixMarket matrix array real general\n";
  ss << m.rows() << " " << m.cols() << "\n";
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      ss << detail::full_precision(m(i, j)) << "\n";
  detail::write_text(path, ss.str());
}

// ---------------------------------------------------------------------------
// Matrices inside JSON documents: row-major nested arrays, or a reference
// {"file": "name.mtx"} resolved relative to the document's directory.

inline json matrix_to_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

inline Mat matrix_from_json(const json& j, const std::filesystem::path& base_dir = {}) {
  if (j.is_object() && j.contains("file"))
    return load_matrix_market(base_dir / j.at("file").get<std::string>());
  if (!j.is_array()) throw ParseError("matrix: expected array of rows or file reference");
  const Eigen::Index rows = Eigen::Index(j.size());
  if (rows == 0) return Mat(0, 0);
  const Eigen::Index cols = Eigen::Index(j.at(0).size());
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = j.at(size_t(i));
    if (!row.is_array() || Eigen::Index(row.size()) != cols)
      throw ParseError("matrix: ragged rows");
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = row.at(size_t(c)).get<double>();
  }
  return m;
}

inline json vector_to_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline Vec vector_from_json(const json& j) {
  if (!j.is_array()) throw ParseError("vector: expected array");
  Vec v(Eigen::Index(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = j.at(size_t(i)).get<double>();
  return v;
}

// ---------------------------------------------------------------------------
// System documents.

inline json system_to_json(const StateSpace& sys) {
  json j;
  if (!sys.name.empty()) j["name"] = sys.name;
  j["n"] = sys.n();
  j["m"] = sys.m();
  j["p"] = sys.p();
  j["q"] = sys.q();
  j["A"] = matrix_to_json(sys.A);
  j["B"] = matrix_to_json(sys.B);
  j["C"] = matrix_to_json(sys.C);
  j["E"] = matrix_to_json(sys.E);
  return j;
}

inline StateSpace system_from_json(const json& j,
                                   const std::filesystem::path& base_dir = {}) {
  try {
    Mat a = matrix_from_json(j.at("A"), base_dir);
    Mat b = matrix_from_json(j.at("B"), base_dir);
    Mat c = matrix_from_json(j.at("C"), base_dir);
    Mat e = j.contains("E") ? matrix_from_json(j.at("E"), base_dir) : Mat(a.rows(), 0);
    if (e.size() == 0) e = Mat(a.rows(), 0);
    std::string name = j.value("name", std::string{});
    StateSpace sys(std::move(a), std::move(b), std::move(c), std::move(e), name);
    if (j.contains("n") && j.at("n").get<Eigen::Index>() != sys.n())
      throw ParseError("system: declared n disagrees with A");
    if (j.contains("m") && j.at("m").get<Eigen::Index>() != sys.m())
      throw ParseError("system: declared m disagrees with B");
    if (j.contains("p") && j.at("p").get<Eigen::Index>() != sys.p())
      throw ParseError("system: declared p disagrees with C");
    if (j.contains("q") && j.at("q").get<Eigen::Index>() != sys.q())
      throw ParseError("system: declared q disagrees with E");
    return sys;
  } catch (const json::exception& e) {
    throw ParseError(std::string("system: ") + e.what());
  }
}

inline StateSpace load_system(const std::filesystem::path& path) {
  return system_from_json(detail::parse_json(path), path.parent_path());
}

inline void save_system(const std::filesystem::path& path, const StateSpace& sys) {
  detail::write_text(path, system_to_json(sys).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Signals and scenarios.

inline json signal_to_json(const Signal& s) {
  json j;
  j["dim"] = s.dim();
  switch (s.kind()) {
    case Signal::Kind::Zero:
      j["kind"] = "zero";
      break;
    case Signal::Kind::Sinusoid:
      j["kind"] = "sinusoid";
      j["amplitude"] = s.amplitude();
      j["omega"] = s.omega();
      j["phase"] = s.phase();
      break;
    case Signal::Kind::GaussianPulse:
      j["kind"] = "gaussian_pulse";
      j["amplitude"] = s.amplitude();
      j["center"] = s.center();
      j["width"] = s.width();
      break;
    case Signal::Kind::Sampled:
      j["kind"] = "sampled";
      j["t0"] = s.sample_t0();
      j["dt"] = s.sample_dt();
      j["values"] = matrix_to_json(s.samples());
      break;
  }
  return j;
}

inline Signal signal_from_json(const json& j,
                               const std::filesystem::path& base_dir = {}) {
  try {
    const std::string kind = j.at("kind").get<std::string>();
    const Eigen::Index dim = j.value("dim", Eigen::Index(1));
    if (kind == "zero") return Signal::zero(dim);
    if (kind == "sinusoid")
      return Signal::sinusoid(dim, j.at("amplitude").get<double>(),
                              j.at("omega").get<double>(), j.value("phase", 0.0));
    if (kind == "gaussian_pulse")
      return Signal::gaussian_pulse(dim, j.at("amplitude").get<double>(),
                                    j.at("center").get<double>(),
                                    j.at("width").get<double>());
    if (kind == "sampled")
      return Signal::sampled(j.value("t0", 0.0), j.at("dt").get<double>(),
                             matrix_from_json(j.at("values"), base_dir));
    throw ParseError("signal: unknown kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw ParseError(std::string("signal: ") + e.what());
  }
}

// Simulation scenario: external input for each system, the disturbance on the
// full model, initial state, and the time grid.
struct ScenarioDocument {
  Signal u1 = Signal::zero(1);
  Signal u2 = Signal::zero(1);
  Signal d1 = Signal::zero(0);
  Vec x0;  // optional; empty means zero
  double horizon = 20.0;
  double dt = 1e-3;
};

inline json scenario_to_json(const ScenarioDocument& sc) {
  json j;
  j["u1"] = signal_to_json(sc.u1);
  j["u2"] = signal_to_json(sc.u2);
  j["d1"] = signal_to_json(sc.d1);
  if (sc.x0.size() > 0) j["x0"] = vector_to_json(sc.x0);
  j["horizon"] = sc.horizon;
  j["dt"] = sc.dt;
  return j;
}

inline ScenarioDocument scenario_from_json(const json& j,
                                           const std::filesystem::path& base_dir = {}) {
  try {
    ScenarioDocument sc;
    if (j.contains("u1")) sc.u1 = signal_from_json(j.at("u1"), base_dir);
    if (j.contains("u2")) sc.u2 = signal_from_json(j.at("u2"), base_dir);
    if (j.contains("d1")) sc.d1 = signal_from_json(j.at("d1"), base_dir);
    if (j.contains("x0")) sc.x0 = vector_from_json(j.at("x0"));
    sc.horizon = j.value("horizon", 20.0);
    sc.dt = j.value("dt", 1e-3);
    if (!(sc.horizon > 0) || !(sc.dt > 0))
      throw ParseError("scenario: horizon and dt must be positive");
    return sc;
  } catch (const json::exception& e) {
    throw ParseError(std::string("scenario: ") + e.what());
  }
}

inline ScenarioDocument load_scenario(const std::filesystem::path& path) {
  return scenario_from_json(detail::parse_json(path), path.parent_path());
}

inline void save_scenario(const std::filesystem::path& path, const ScenarioDocument& sc) {
  detail::write_text(path, scenario_to_json(sc).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Similarity certificates.

inline json certificate_to_json(const SimilarityCertificate& cert) {
  json j;
  j["weights"] = {{"gamma", cert.weights.gamma},
                  {"delta", cert.weights.delta},
                  {"mu", cert.weights.mu},
                  {"eta", cert.weights.eta}};
  j["X"] = matrix_to_json(cert.X);
  j["Pi"] = matrix_to_json(cert.Pi);
  j["F"] = matrix_to_json(cert.F);
  j["epsilon"] = cert.epsilon;
  j["lmi_margin"] = cert.lmi_margin;
  j["solver_config"] = cert.solver_config;
  return j;
}

inline SimilarityCertificate certificate_from_json(
    const json& j, const std::filesystem::path& base_dir = {}) {
  try {
    SimilarityCertificate cert;
    const json& w = j.at("weights");
    cert.weights.gamma = w.at("gamma").get<double>();
    cert.weights.delta = w.at("delta").get<double>();
    cert.weights.mu = w.at("mu").get<double>();
    cert.weights.eta = w.at("eta").get<double>();
    cert.weights.validate();
    cert.X = matrix_from_json(j.at("X"), base_dir);
    cert.Pi = matrix_from_json(j.at("Pi"), base_dir);
    cert.F = matrix_from_json(j.at("F"), base_dir);
    cert.epsilon = j.value("epsilon", 0.0);
    cert.lmi_margin = j.value("lmi_margin", 0.0);
    cert.solver_config = j.value("solver_config", std::string{});
    return cert;
  } catch (const json::exception& e) {
    throw ParseError(std::string("certificate: ") + e.what());
  }
}

inline SimilarityCertificate load_certificate(const std::filesystem::path& path) {
  return certificate_from_json(detail::parse_json(path), path.parent_path());
}

inline void save_certificate(const std::filesystem::path& path,
                             const SimilarityCertificate& cert) {
  detail::write_text(path, certificate_to_json(cert).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Interconnection topologies.

inline std::string topology_kind_name(TopologyKind k) {
  switch (k) {
    case TopologyKind::Arbitrary: return "arbitrary";
    case TopologyKind::Parallel: return "parallel";
    case TopologyKind::Series: return "series";
    case TopologyKind::Feedback: return "feedback";
  }
  return "arbitrary";
}

inline TopologyKind topology_kind_from_name(const std::string& s) {
  if (s == "arbitrary") return TopologyKind::Arbitrary;
  if (s == "parallel") return TopologyKind::Parallel;
  if (s == "series") return TopologyKind::Series;
  if (s == "feedback") return TopologyKind::Feedback;
  throw ParseError("topology: unknown kind '" + s + "'");
}

inline json topology_to_json(const InterconnectionTopology& t) {
  json j;
  j["kind"] = topology_kind_name(t.kind);
  json ports = json::array();
  for (const auto& p : t.ports)
    ports.push_back({{"ext_in", p.ext_in}, {"ext_out", p.ext_out}});
  j["ports"] = ports;
  json links = json::array();
  for (const auto& l : t.links)
    links.push_back(
        {{"from", l.from}, {"to", l.to}, {"sign", l.sign}, {"width", l.width}});
  j["links"] = links;
  return j;
}

inline InterconnectionTopology topology_from_json(const json& j) {
  try {
    InterconnectionTopology t;
    t.kind = topology_kind_from_name(j.at("kind").get<std::string>());
    for (const auto& p : j.at("ports"))
      t.ports.push_back({p.at("ext_in").get<Eigen::Index>(),
                         p.at("ext_out").get<Eigen::Index>()});
    if (j.contains("links"))
      for (const auto& l : j.at("links"))
        t.links.push_back({l.at("from").get<int>(), l.at("to").get<int>(),
                           l.value("sign", 1.0), l.at("width").get<Eigen::Index>()});
    return t;
  } catch (const json::exception& e) {
    throw ParseError(std::string("topology: ") + e.what());
  }
}

// A topology document bundles the wiring with the subsystem files or inline
// subsystem definitions it connects.
struct TopologyDocument {
  InterconnectionTopology topology;
  std::vector<StateSpace> systems;
};

inline json topology_document_to_json(const TopologyDocument& doc) {
  json j = topology_to_json(doc.topology);
  json systems = json::array();
  for (const auto& s : doc.systems) systems.push_back(system_to_json(s));
  j["systems"] = systems;
  return j;
}

inline TopologyDocument topology_document_from_json(
    const json& j, const std::filesystem::path& base_dir = {}) {
  TopologyDocument doc;
  doc.topology = topology_from_json(j);
  try {
    for (const auto& s : j.at("systems")) {
      if (s.is_string())
        doc.systems.push_back(load_system(base_dir / s.get<std::string>()));
      else
        doc.systems.push_back(system_from_json(s, base_dir));
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("topology: ") + e.what());
  }
  if (int(doc.systems.size()) != doc.topology.size())
    throw ParseError("topology: ports and systems counts differ");
  return doc;
}

inline TopologyDocument load_topology(const std::filesystem::path& path) {
  return topology_document_from_json(detail::parse_json(path), path.parent_path());
}

inline void save_topology(const std::filesystem::path& path, const TopologyDocument& doc) {
  detail::write_text(path, topology_document_to_json(doc).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Trajectory CSV: locale-independent, full double precision.

inline void save_csv(const std::filesystem::path& path,
                     const std::vector<std::string>& header, const Mat& rows) {
  if (Eigen::Index(header.size()) != rows.cols())
    throw ParseError("csv: header width disagrees with data");
  std::ostringstream ss;
  ss.imbue(std::locale::classic());
  for (size_t i = 0; i < header.size(); ++i)
    ss << (i ? "," : "") << header[i];
  ss << "\n";
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    for (Eigen::Index c = 0; c < rows.cols(); ++c)
      ss << (c ? "," : "") << detail::full_precision(rows(r, c));
    ss << "\n";
  }
  detail::write_text(path, ss.str());
}

struct CsvTable {
  std::vector<std::string> header;
  Mat rows;
};

inline CsvTable load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path.string() + ": empty csv");
  {
    std::istringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) table.header.push_back(cell);
  }
  std::vector<double> data;
  Eigen::Index nrows = 0;
  const Eigen::Index ncols = Eigen::Index(table.header.size());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    ls.imbue(std::locale::classic());
    std::string cell;
    Eigen::Index c = 0;
    while (std::getline(ls, cell, ',')) {
      data.push_back(std::stod(cell));
      ++c;
    }
    if (c != ncols) throw ParseError(path.string() + ": ragged csv row");
    ++nrows;
  }
  table.rows = Mat(nrows, ncols);
  for (Eigen::Index r = 0; r < nrows; ++r)
    for (Eigen::Index c = 0; c < ncols; ++c)
      table.rows(r, c) = data[size_t(r * ncols + c)];
  return table;
}

}  // namespace mor
