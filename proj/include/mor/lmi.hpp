#pragma once

// Block-structured linear matrix inequality problems and a dense log-det
// barrier interior-point solver. Problems are assembled as affine matrix
// expressions over declared symmetric/rectangular/scalar variables; each
// constraint block G(x) is required to satisfy G(x) + margin I <= 0 with
// margin = strictness * (1 + ||G(0)||_F).
//
// Phase 1 minimizes the uniform shift tau in G(x) - tau I < 0 until a
// strictly feasible point exists (or infeasibility is established); phase 2
// follows the central path of the linear objective.

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mor/matrix.hpp"

namespace mor {

struct NumericalFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Affine expressions

struct LinExpr {
  double constant = 0.0;
  std::vector<std::pair<int, double>> terms;  // (variable index, coefficient)

  LinExpr() = default;
  LinExpr(double c) : constant(c) {}
  static LinExpr variable(int idx, double coeff = 1.0) {
    LinExpr e;
    e.terms.emplace_back(idx, coeff);
    return e;
  }

  LinExpr& operator+=(const LinExpr& o) {
    constant += o.constant;
    terms.insert(terms.end(), o.terms.begin(), o.terms.end());
    compress();
    return *this;
  }
  LinExpr& operator-=(const LinExpr& o) {
    constant -= o.constant;
    for (auto& [i, v] : o.terms) terms.emplace_back(i, -v);
    compress();
    return *this;
  }
  LinExpr& operator*=(double a) {
    constant *= a;
    for (auto& t : terms) t.second *= a;
    return *this;
  }
  friend LinExpr operator+(LinExpr a, const LinExpr& b) { return a += b; }
  friend LinExpr operator-(LinExpr a, const LinExpr& b) { return a -= b; }
  friend LinExpr operator*(LinExpr a, double s) { return a *= s; }
  friend LinExpr operator*(double s, LinExpr a) { return a *= s; }

  double eval(const Vec& x) const {
    double v = constant;
    for (auto& [i, c] : terms) v += c * x(i);
    return v;
  }

  void compress() {
    if (terms.size() < 2) return;
    std::sort(terms.begin(), terms.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::size_t w = 0;
    for (std::size_t r = 0; r < terms.size(); ++r) {
      if (w > 0 && terms[w - 1].first == terms[r].first)
        terms[w - 1].second += terms[r].second;
      else
        terms[w++] = terms[r];
    }
    terms.resize(w);
    terms.erase(std::remove_if(terms.begin(), terms.end(),
                               [](const auto& t) { return t.second == 0.0; }),
                terms.end());
  }
};

class AffineMatrix {
 public:
  AffineMatrix() = default;
  AffineMatrix(Eigen::Index r, Eigen::Index c) : rows_(r), cols_(c), e_(r * c) {}

  static AffineMatrix constant(const Mat& m) {
    AffineMatrix a(m.rows(), m.cols());
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) a(i, j) = LinExpr(m(i, j));
    return a;
  }

  Eigen::Index rows() const { return rows_; }
  Eigen::Index cols() const { return cols_; }
  LinExpr& operator()(Eigen::Index i, Eigen::Index j) { return e_[i * cols_ + j]; }
  const LinExpr& operator()(Eigen::Index i, Eigen::Index j) const { return e_[i * cols_ + j]; }

  AffineMatrix transpose() const {
    AffineMatrix r(cols_, rows_);
    for (Eigen::Index i = 0; i < rows_; ++i)
      for (Eigen::Index j = 0; j < cols_; ++j) r(j, i) = (*this)(i, j);
    return r;
  }

  AffineMatrix& operator+=(const AffineMatrix& o) {
    require_dims(rows_ == o.rows_ && cols_ == o.cols_, "AffineMatrix: size mismatch in +=");
    for (std::size_t k = 0; k < e_.size(); ++k) e_[k] += o.e_[k];
    return *this;
  }
  friend AffineMatrix operator+(AffineMatrix a, const AffineMatrix& b) { return a += b; }

  friend AffineMatrix operator*(const Mat& m, const AffineMatrix& a) {
    require_dims(m.cols() == a.rows_, "AffineMatrix: size mismatch in const*affine");
    AffineMatrix r(m.rows(), a.cols_);
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < a.cols_; ++j) {
        LinExpr acc;
        for (Eigen::Index k = 0; k < m.cols(); ++k) {
          if (m(i, k) == 0.0) continue;
          acc += a(k, j) * m(i, k);
        }
        r(i, j) = std::move(acc);
      }
    return r;
  }
  friend AffineMatrix operator*(const AffineMatrix& a, const Mat& m) {
    require_dims(a.cols_ == m.rows(), "AffineMatrix: size mismatch in affine*const");
    AffineMatrix r(a.rows_, m.cols());
    for (Eigen::Index i = 0; i < a.rows_; ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        LinExpr acc;
        for (Eigen::Index k = 0; k < a.cols_; ++k) {
          if (m(k, j) == 0.0) continue;
          acc += a(i, k) * m(k, j);
        }
        r(i, j) = std::move(acc);
      }
    return r;
  }

  void set_block(Eigen::Index i0, Eigen::Index j0, const AffineMatrix& b) {
    require_dims(i0 + b.rows_ <= rows_ && j0 + b.cols_ <= cols_, "AffineMatrix: block overflow");
    for (Eigen::Index i = 0; i < b.rows_; ++i)
      for (Eigen::Index j = 0; j < b.cols_; ++j) (*this)(i0 + i, j0 + j) = b(i, j);
  }

  Mat eval(const Vec& x) const {
    Mat m(rows_, cols_);
    for (Eigen::Index i = 0; i < rows_; ++i)
      for (Eigen::Index j = 0; j < cols_; ++j) m(i, j) = (*this)(i, j).eval(x);
    return m;
  }

 private:
  Eigen::Index rows_ = 0, cols_ = 0;
  std::vector<LinExpr> e_;
};

// Scalar expression times identity / times constant matrix.
inline AffineMatrix expr_times(const LinExpr& e, const Mat& m) {
  AffineMatrix r(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (m(i, j) != 0.0) r(i, j) = e * m(i, j);
  return r;
}

// ---------------------------------------------------------------------------
// Problem container

struct LmiOptions {
  double strictness = 1e-7;     // margin factor: eps * (1 + ||G(0)||_F)
  double gap_tol = 1e-9;        // relative duality-measure target in phase 2
  double barrier_mu = 10.0;     // path-following multiplier
  int max_newton_per_stage = 60;
  int max_stages = 40;
  double scalar_floor = 1e-9;   // implicit lower bound for "positive" scalars
  bool trace = false;           // print per-stage progress to stderr
};

class LmiProblem {
 public:
  struct VarBlock {
    enum class Kind { Symmetric, Rectangular, Scalar } kind;
    std::string name;
    Eigen::Index rows = 0, cols = 0;
    int offset = 0, count = 0;
  };

  int num_scalars() const { return num_scalars_; }
  const std::vector<VarBlock>& variables() const { return vars_; }

  int add_symmetric(const std::string& name, Eigen::Index k) {
    VarBlock v{VarBlock::Kind::Symmetric, name, k, k, num_scalars_,
               int(k * (k + 1) / 2)};
    num_scalars_ += v.count;
    vars_.push_back(v);
    return int(vars_.size()) - 1;
  }
  int add_rectangular(const std::string& name, Eigen::Index r, Eigen::Index c) {
    VarBlock v{VarBlock::Kind::Rectangular, name, r, c, num_scalars_, int(r * c)};
    num_scalars_ += v.count;
    vars_.push_back(v);
    return int(vars_.size()) - 1;
  }
  // positive = true adds the implicit floor constraint  v >= scalar_floor.
  int add_scalar(const std::string& name, bool positive) {
    VarBlock v{VarBlock::Kind::Scalar, name, 1, 1, num_scalars_, 1};
    num_scalars_ += 1;
    vars_.push_back(v);
    if (positive) positive_scalars_.push_back(int(vars_.size()) - 1);
    return int(vars_.size()) - 1;
  }

  AffineMatrix ref(int handle) const {
    const VarBlock& v = vars_.at(handle);
    AffineMatrix a(v.rows, v.cols);
    if (v.kind == VarBlock::Kind::Symmetric) {
      int idx = v.offset;
      for (Eigen::Index i = 0; i < v.rows; ++i)
        for (Eigen::Index j = 0; j <= i; ++j) {
          a(i, j) = LinExpr::variable(idx);
          a(j, i) = LinExpr::variable(idx);
          ++idx;
        }
    } else {
      int idx = v.offset;
      for (Eigen::Index i = 0; i < v.rows; ++i)
        for (Eigen::Index j = 0; j < v.cols; ++j) a(i, j) = LinExpr::variable(idx++);
    }
    return a;
  }

  LinExpr scalar(int handle) const {
    const VarBlock& v = vars_.at(handle);
    require_dims(v.kind == VarBlock::Kind::Scalar, "LmiProblem: not a scalar variable");
    return LinExpr::variable(v.offset);
  }

  // Requires G(x) + margin I <= 0 (G must be symmetric by construction).
  void add_constraint(AffineMatrix g, const std::string& label = {}) {
    require_dims(g.rows() == g.cols(), "LmiProblem: constraint must be square");
    constraints_.push_back(std::move(g));
    labels_.push_back(label);
  }

  void set_objective(LinExpr obj) { objective_ = std::move(obj); }
  const LinExpr& objective() const { return objective_; }
  const std::vector<AffineMatrix>& constraints() const { return constraints_; }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::vector<int>& positive_scalars() const { return positive_scalars_; }

  Mat value(int handle, const Vec& x) const {
    return ref(handle).eval(x);
  }

 private:
  std::vector<VarBlock> vars_;
  std::vector<AffineMatrix> constraints_;
  std::vector<std::string> labels_;
  std::vector<int> positive_scalars_;
  LinExpr objective_;
  int num_scalars_ = 0;
};

struct LmiSolution {
  enum class Status { Feasible, Infeasible, Failure } status = Status::Failure;
  Vec x;
  double objective = std::numeric_limits<double>::quiet_NaN();
  double worst_margin = std::numeric_limits<double>::quiet_NaN();  // max eig over blocks
  int newton_steps = 0;
  std::string message;

  bool feasible() const { return status == Status::Feasible; }
};

// ---------------------------------------------------------------------------
// Solver

namespace lmidetail {

struct SparseCoeff {
  int var;  // scalar variable index
  std::vector<Eigen::Triplet<double>> entries;
};

struct Block {
  Eigen::Index size = 0;
  Mat c0;
  std::vector<SparseCoeff> coeffs;
  double margin = 0.0;

  Mat eval(const Vec& x, double tau_coeff, double tau) const {
    Mat g = c0;
    for (const auto& sc : coeffs) {
      const double xi = x(sc.var);
      if (xi == 0.0) continue;
      for (const auto& t : sc.entries) g(t.row(), t.col()) += xi * t.value();
    }
    if (tau_coeff != 0.0) g.diagonal().array() -= tau_coeff * tau;
    return g;
  }
};

inline Block compile_block(const AffineMatrix& g, double strictness) {
  Block b;
  b.size = g.rows();
  b.c0.setZero(b.size, b.size);
  std::map<int, std::map<std::pair<int, int>, double>> acc;
  for (Eigen::Index i = 0; i < b.size; ++i)
    for (Eigen::Index j = 0; j < b.size; ++j) {
      // symmetrized entry (i,j)
      const LinExpr& eij = g(i, j);
      b.c0(i, j) += 0.5 * eij.constant;
      b.c0(j, i) += 0.5 * eij.constant;
      for (auto& [var, coeff] : eij.terms) {
        acc[var][{int(i), int(j)}] += 0.5 * coeff;
        acc[var][{int(j), int(i)}] += 0.5 * coeff;
      }
    }
  b.margin = strictness * (1.0 + b.c0.norm());
  b.c0.diagonal().array() += b.margin;
  for (auto& [var, entries] : acc) {
    SparseCoeff sc;
    sc.var = var;
    for (auto& [rc, v] : entries)
      if (v != 0.0) sc.entries.emplace_back(rc.first, rc.second, v);
    if (!sc.entries.empty()) b.coeffs.push_back(std::move(sc));
  }
  return b;
}

struct BarrierState {
  std::vector<Mat> z;       // S^{-1} per block
  double phi = 0.0;         // sum of -log det S
  bool interior = false;
};

inline BarrierState factor(const std::vector<Block>& blocks, const Vec& x, double tau_coeff,
                           double tau) {
  BarrierState st;
  st.z.reserve(blocks.size());
  st.interior = true;
  for (const auto& b : blocks) {
    Mat s = -b.eval(x, tau_coeff, tau);  // S = tau*I - G when tau_coeff=1
    Eigen::LLT<Mat> llt(s);
    if (llt.info() != Eigen::Success) {
      st.interior = false;
      return st;
    }
    double logdet = 0.0;
    for (Eigen::Index i = 0; i < s.rows(); ++i) logdet += std::log(llt.matrixL()(i, i));
    st.phi -= 2.0 * logdet;
    st.z.push_back(llt.solve(Mat::Identity(s.rows(), s.rows())));
  }
  return st;
}

}  // namespace lmidetail

class LmiSolver {
 public:
  explicit LmiSolver(const LmiProblem& prob, LmiOptions opts = {})
      : prob_(prob), opts_(opts) {
    for (std::size_t j = 0; j < prob.constraints().size(); ++j)
      blocks_.push_back(lmidetail::compile_block(prob.constraints()[j], opts.strictness));
    // implicit positivity floors as 1x1 blocks: floor - v <= 0
    for (int h : prob.positive_scalars()) {
      lmidetail::Block b;
      b.size = 1;
      b.c0 = Mat::Constant(1, 1, opts.scalar_floor);
      lmidetail::SparseCoeff sc;
      sc.var = prob.variables()[h].offset;
      sc.entries.emplace_back(0, 0, -1.0);
      b.coeffs.push_back(sc);
      b.margin = 0.0;
      blocks_.push_back(std::move(b));
    }
    total_size_ = 0;
    for (auto& b : blocks_) total_size_ += b.size;
  }

  LmiSolution solve(std::optional<Vec> warm_start = std::nullopt) {
    const int n = prob_.num_scalars();
    Vec x = warm_start.value_or(Vec::Zero(n));
    if (x.size() != n) x = Vec::Zero(n);
    LmiSolution sol;

    // ---- Phase 1: minimize tau subject to G(x) - tau I < 0
    double tau = 0.0;
    for (const auto& b : blocks_) tau = std::max(tau, max_eig_sym(b.eval(x, 0.0, 0.0)));
    const double tau_target = -1e-4 * (1.0 + std::abs(tau));  // modest strict interior
    tau += 1.0;

    bool feasible_point = false;
    double t = 1.0;
    for (int stage = 0; stage < opts_.max_stages; ++stage) {
      if (!newton_stage(x, tau, /*phase1=*/true, t, LinExpr(), sol, tau_target)) {
        sol.status = LmiSolution::Status::Failure;
        sol.message = "phase 1 Newton failure";
        return sol;
      }
      if (opts_.trace)
        std::fprintf(stderr, "  [lmi] phase1 stage %d t=%.3e tau=%.6e steps=%d\n", stage, t,
                     tau, sol.newton_steps);
      if (tau < tau_target) {
        feasible_point = true;
        break;
      }
      if (double(total_size_ + 1) / t < std::max(1e-10, 1e-6 * std::abs(tau))) break;
      t *= opts_.barrier_mu;
    }
    if (!feasible_point) {
      // tau could not be driven negative: follow the path to optimality to
      // certify infeasibility of the shifted problem.
      while (double(total_size_ + 1) / t > 1e-10 && t < 1e14) {
        t *= opts_.barrier_mu;
        if (!newton_stage(x, tau, true, t, LinExpr(), sol, tau_target)) break;
        if (tau < tau_target) {
          feasible_point = true;
          break;
        }
      }
      // The shifted constraints already carry their strictness margins, so
      // any tau < 0 certifies a strictly feasible interior point.
      if (!feasible_point && tau < 0.0) feasible_point = true;
    }
    if (!feasible_point) {
      sol.status = LmiSolution::Status::Infeasible;
      sol.x = x;
      sol.worst_margin = tau;
      sol.message = "phase 1 optimum tau = " + std::to_string(tau);
      return sol;
    }

    // ---- Phase 2: minimize the linear objective from the interior point.
    const LinExpr& obj = prob_.objective();
    if (!obj.terms.empty()) {
      double t2 = 1.0;
      for (int stage = 0; stage < opts_.max_stages; ++stage) {
        if (!newton_stage(x, tau, /*phase1=*/false, t2, obj, sol)) {
          sol.status = LmiSolution::Status::Failure;
          sol.message = "phase 2 Newton failure";
          return sol;
        }
        if (opts_.trace)
          std::fprintf(stderr, "  [lmi] phase2 stage %d t=%.3e obj=%.6e steps=%d\n", stage,
                       t2, obj.eval(x), sol.newton_steps);
        const double gap = double(total_size_) / t2;
        if (gap < std::max(opts_.gap_tol, opts_.gap_tol * std::abs(obj.eval(x)))) break;
        t2 *= opts_.barrier_mu;
      }
    }

    sol.status = LmiSolution::Status::Feasible;
    sol.x = x;
    sol.objective = obj.eval(x);
    sol.worst_margin = worst_margin(x);
    return sol;
  }

  // Most positive eigenvalue across blocks of the *unshifted* constraints.
  double worst_margin(const Vec& x) const {
    double w = -std::numeric_limits<double>::infinity();
    for (const auto& b : blocks_) {
      Mat g = b.eval(x, 0.0, 0.0);
      g.diagonal().array() -= b.margin;  // report the raw G(x)
      w = std::max(w, max_eig_sym(g));
    }
    return w;
  }

 private:
  // One centering stage: Newton iterations on t*f(x[,tau]) + barrier.
  // In phase 1 the decision vector is (x, tau) and f = tau; the stage stops
  // early once tau crosses stop_tau (descending past it is wasted work).
  bool newton_stage(Vec& x, double& tau, bool phase1, double t, const LinExpr& obj,
                    LmiSolution& sol,
                    double stop_tau = -std::numeric_limits<double>::infinity()) {
    const int n = prob_.num_scalars();
    const int dim = n + (phase1 ? 1 : 0);
    const double tau_coeff = phase1 ? 1.0 : 0.0;

    for (int it = 0; it < opts_.max_newton_per_stage; ++it) {
      auto st = lmidetail::factor(blocks_, x, tau_coeff, tau);
      if (!st.interior) return false;

      Vec grad = Vec::Zero(dim);
      Mat hess = Mat::Zero(dim, dim);
      if (phase1)
        grad(n) += t;
      else
        for (auto& [i, c] : obj.terms) grad(i) += t * c;

      for (std::size_t jb = 0; jb < blocks_.size(); ++jb) {
        const auto& b = blocks_[jb];
        const Mat& z = st.z[jb];
        const int nv = int(b.coeffs.size());
        // M_i = Z F_i Z for every variable in the block (+ tau direction)
        std::vector<Mat> zfz(nv);
        Mat fz(b.size, b.size);
        for (int i = 0; i < nv; ++i) {
          fz.setZero();
          for (const auto& tr : b.coeffs[i].entries) fz.row(tr.row()) += tr.value() * z.row(tr.col());
          zfz[i] = z * fz;
          double g = 0.0;
          for (const auto& tr : b.coeffs[i].entries) g += tr.value() * z(tr.col(), tr.row());
          grad(b.coeffs[i].var) += g;
        }
        for (int i = 0; i < nv; ++i) {
          const int vi = b.coeffs[i].var;
          for (int k = 0; k <= i; ++k) {
            double h = 0.0;
            for (const auto& tr : b.coeffs[k].entries) h += tr.value() * zfz[i](tr.col(), tr.row());
            const int vk = b.coeffs[k].var;
            hess(vi, vk) += h;
            if (vi != vk) hess(vk, vi) += h;
            else if (i != k) hess(vi, vk) += h;  // distinct coeff lists on same var cannot occur
          }
        }
        if (phase1) {
          // d/dtau of S = I: grad -= tr(Z), hess rows/cols with tau
          grad(n) -= z.trace();
          const Mat z2 = z * z;
          hess(n, n) += z2.trace();
          for (int i = 0; i < nv; ++i) {
            double h = 0.0;
            for (const auto& tr : b.coeffs[i].entries) h += tr.value() * z2(tr.col(), tr.row());
            hess(b.coeffs[i].var, n) -= h;
            hess(n, b.coeffs[i].var) -= h;
          }
        }
      }

      // Relative per-entry regularization: a uniform shift scaled by the trace
      // wipes out descent directions whose curvature is many orders smaller.
      for (int i = 0; i < dim; ++i)
        hess(i, i) += 1e-12 * (1.0 + std::abs(hess(i, i)));
      Eigen::LDLT<Mat> ldlt(hess);
      if (ldlt.info() != Eigen::Success) return false;
      Vec step = -ldlt.solve(grad);
      const double decrement2 = -grad.dot(step);
      if (!std::isfinite(decrement2)) return false;
      ++sol.newton_steps;
      if (decrement2 * 0.5 < 1e-10) return true;

      // Backtracking line search on psi = t*f + phi.
      const double psi0 = t * (phase1 ? tau : obj.eval(x)) + st.phi;
      double alpha = 1.0;
      bool accepted = false;
      for (int ls = 0; ls < 60; ++ls) {
        Vec xn = x + alpha * step.head(n);
        const double taun = tau + (phase1 ? alpha * step(n) : 0.0);
        auto stn = lmidetail::factor(blocks_, xn, tau_coeff, taun);
        if (stn.interior) {
          const double psin = t * (phase1 ? taun : obj.eval(xn)) + stn.phi;
          if (psin <= psi0 - 0.25 * alpha * decrement2 + 1e-12 * std::abs(psi0)) {
            x = xn;
            tau = taun;
            accepted = true;
            break;
          }
        }
        alpha *= 0.5;
      }
      if (!accepted) return true;  // stalled: the stage is as centered as it gets
      if (phase1 && tau < stop_tau) return true;
    }
    return true;
  }

  const LmiProblem& prob_;
  LmiOptions opts_;
  std::vector<lmidetail::Block> blocks_;
  Eigen::Index total_size_ = 0;
};

inline LmiSolution solve_lmi(const LmiProblem& prob, LmiOptions opts = {},
                             std::optional<Vec> warm_start = std::nullopt) {
  LmiSolver solver(prob, opts);
  return solver.solve(std::move(warm_start));
}

}  // namespace mor
