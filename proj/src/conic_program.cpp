#include "apexcvx/conic_program.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <tuple>

namespace apexcvx {

LinExpr& LinExpr::operator+=(const LinExpr& o) {
  terms.insert(terms.end(), o.terms.begin(), o.terms.end());
  constant += o.constant;
  return *this;
}

LinExpr& LinExpr::operator-=(const LinExpr& o) {
  for (const auto& [i, v] : o.terms) terms.emplace_back(i, -v);
  constant -= o.constant;
  return *this;
}

LinExpr& LinExpr::operator*=(double s) {
  for (auto& t : terms) t.second *= s;
  constant *= s;
  return *this;
}

double LinExpr::eval(const Eigen::VectorXd& x) const {
  double v = constant;
  for (const auto& [i, coef] : terms) v += coef * x[i];
  return v;
}

LinExpr operator+(LinExpr a, const LinExpr& b) { return a += b; }
LinExpr operator-(LinExpr a, const LinExpr& b) { return a -= b; }
LinExpr operator*(double s, LinExpr a) { return a *= s; }
LinExpr operator*(LinExpr a, double s) { return a *= s; }

int ConeDims::total() const { return l + std::accumulate(q.begin(), q.end(), 0); }

void ConicProgram::validate() const {
  const auto n = static_cast<Eigen::Index>(num_vars);
  if (c.size() != n) throw ProgramError("objective length differs from variable count");
  if (A.cols() != n || G.cols() != n) throw ProgramError("constraint matrix width mismatch");
  if (A.rows() != b.size()) throw ProgramError("A and b row counts differ");
  if (G.rows() != h.size()) throw ProgramError("G and h row counts differ");
  if (cones.l < 0) throw ProgramError("negative orthant dimension");
  for (int qi : cones.q) {
    if (qi < 2) throw ProgramError("second-order cone needs a t row and at least one u row");
  }
  if (cones.total() != G.rows()) throw ProgramError("cone dimensions do not cover G");
  auto finite = [](const auto& v) { return v.allFinite(); };
  if (!finite(c) || !finite(b) || !finite(h) || !std::isfinite(c_offset)) {
    throw ProgramError("non-finite program data");
  }
  for (Eigen::Index k = 0; k < A.nonZeros(); ++k) {
    if (!std::isfinite(A.valuePtr()[k])) throw ProgramError("non-finite entry in A");
  }
  for (Eigen::Index k = 0; k < G.nonZeros(); ++k) {
    if (!std::isfinite(G.valuePtr()[k])) throw ProgramError("non-finite entry in G");
  }
}

double ConicProgram::equality_residual(const Eigen::VectorXd& x) const {
  if (A.rows() == 0) return 0.0;
  return (A * x - b).lpNorm<Eigen::Infinity>();
}

double ConicProgram::cone_violation(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd s = h - G * x;
  double worst = 0.0;
  for (int i = 0; i < cones.l; ++i) worst = std::max(worst, -s[i]);
  int off = cones.l;
  for (int qi : cones.q) {
    const double t = s[off];
    const double u = s.segment(off + 1, qi - 1).norm();
    worst = std::max(worst, u - t);
    off += qi;
  }
  return worst;
}

int ProgramBuilder::add_variable(const std::string& name) { return add_variables(1, name); }

int ProgramBuilder::add_variables(int count, const std::string& name) {
  const int first = num_vars_;
  num_vars_ += count;
  names_.resize(static_cast<std::size_t>(num_vars_), name);
  return first;
}

void ProgramBuilder::add_objective(const LinExpr& e) { objective_ += e; }

void ProgramBuilder::add_equality(const LinExpr& e, const std::string& tag) {
  eq_rows_.push_back(e);
  eq_tags_.push_back(tag);
}

void ProgramBuilder::add_nonneg(const LinExpr& e, const std::string& tag) {
  lin_rows_.push_back(e);
  lin_tags_.push_back(tag);
}

void ProgramBuilder::add_bounds(int index, double lo, double hi, const std::string& tag) {
  if (std::isfinite(lo)) add_nonneg(LinExpr({{index, 1.0}}, -lo), tag);
  if (std::isfinite(hi)) add_nonneg(LinExpr({{index, -1.0}}, hi), tag);
}

void ProgramBuilder::add_soc(const LinExpr& t, const std::vector<LinExpr>& u,
                             const std::string& tag) {
  if (u.empty()) throw ProgramError("second-order cone without u rows");
  std::vector<LinExpr> block;
  block.reserve(u.size() + 1);
  block.push_back(t);
  block.insert(block.end(), u.begin(), u.end());
  soc_blocks_.push_back(std::move(block));
  soc_tags_.push_back(tag);
}

void ProgramBuilder::add_rotated_soc(const LinExpr& x, const LinExpr& y,
                                     const std::vector<LinExpr>& u, const std::string& tag) {
  // 2xy >= |u|^2  <=>  x + y >= |(x - y, sqrt(2) u)|
  std::vector<LinExpr> rows;
  rows.reserve(u.size() + 1);
  rows.push_back(x - y);
  for (const auto& ui : u) rows.push_back(std::sqrt(2.0) * ui);
  add_soc(x + y, rows, tag);
}

ConicProgram ProgramBuilder::build() const {
  ConicProgram p;
  p.num_vars = num_vars_;
  const auto n = static_cast<Eigen::Index>(num_vars_);
  p.c = Eigen::VectorXd::Zero(n);
  for (const auto& [i, v] : objective_.terms) p.c[i] += v;
  p.c_offset = objective_.constant;

  auto check = [&](const LinExpr& e) {
    for (const auto& [i, v] : e.terms) {
      if (i < 0 || i >= num_vars_) throw ProgramError("variable index out of range");
      (void)v;
    }
  };

  std::vector<Triplet> trips;
  p.b.resize(static_cast<Eigen::Index>(eq_rows_.size()));
  for (std::size_t r = 0; r < eq_rows_.size(); ++r) {
    check(eq_rows_[r]);
    for (const auto& [i, v] : eq_rows_[r].terms) trips.emplace_back(static_cast<int>(r), i, v);
    p.b[static_cast<Eigen::Index>(r)] = -eq_rows_[r].constant;
  }
  p.A.resize(static_cast<Eigen::Index>(eq_rows_.size()), n);
  p.A.setFromTriplets(trips.begin(), trips.end());
  p.A.prune(0.0);
  p.eq_tags = eq_tags_;

  // s = expr = h - G x  =>  G = -coef, h = constant.
  trips.clear();
  std::vector<double> h;
  int row = 0;
  auto emit = [&](const LinExpr& e) {
    check(e);
    for (const auto& [i, v] : e.terms) trips.emplace_back(row, i, -v);
    h.push_back(e.constant);
    ++row;
  };
  for (const auto& e : lin_rows_) emit(e);
  p.cones.l = static_cast<int>(lin_rows_.size());
  for (const auto& block : soc_blocks_) {
    for (const auto& e : block) emit(e);
    p.cones.q.push_back(static_cast<int>(block.size()));
  }
  p.G.resize(row, n);
  p.G.setFromTriplets(trips.begin(), trips.end());
  p.G.prune(0.0);
  p.h = Eigen::Map<const Eigen::VectorXd>(h.data(), static_cast<Eigen::Index>(h.size()));
  p.cone_tags = lin_tags_;
  p.cone_tags.insert(p.cone_tags.end(), soc_tags_.begin(), soc_tags_.end());
  return p;
}

namespace {

void write_matrix(const SparseMatrix& M, const char* name, std::ostream& out) {
  std::vector<std::tuple<int, int, double>> entries;
  entries.reserve(static_cast<std::size_t>(M.nonZeros()));
  for (int col = 0; col < M.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(M, col); it; ++it) {
      entries.emplace_back(static_cast<int>(it.row()), col, it.value());
    }
  }
  std::sort(entries.begin(), entries.end());
  for (const auto& [r, c, v] : entries) out << name << ' ' << r << ' ' << c << ' ' << v << '\n';
}

}  // namespace

void write_program_text(const ConicProgram& p, std::ostream& out) {
  const auto old_precision = out.precision(17);
  out << "conic_program " << p.num_vars << ' ' << p.A.rows() << ' ' << p.cones.l << ' '
      << p.cones.q.size() << '\n';
  out << "soc";
  for (int q : p.cones.q) out << ' ' << q;
  out << '\n';
  for (Eigen::Index i = 0; i < p.c.size(); ++i) {
    if (p.c[i] != 0.0) out << "c " << i << ' ' << p.c[i] << '\n';
  }
  out << "c_offset " << p.c_offset << '\n';
  write_matrix(p.A, "A", out);
  for (Eigen::Index i = 0; i < p.b.size(); ++i) out << "b " << i << ' ' << p.b[i] << '\n';
  write_matrix(p.G, "G", out);
  for (Eigen::Index i = 0; i < p.h.size(); ++i) out << "h " << i << ' ' << p.h[i] << '\n';
  for (std::size_t i = 0; i < p.eq_tags.size(); ++i) {
    if (!p.eq_tags[i].empty()) out << "tag eq " << i << ' ' << p.eq_tags[i] << '\n';
  }
  for (std::size_t i = 0; i < p.cone_tags.size(); ++i) {
    if (p.cone_tags[i].empty()) continue;
    const bool lin = static_cast<int>(i) < p.cones.l;
    const auto idx = lin ? i : i - static_cast<std::size_t>(p.cones.l);
    out << "tag " << (lin ? "lin " : "soc ") << idx << ' ' << p.cone_tags[i] << '\n';
  }
  out.precision(old_precision);
}

}  // namespace apexcvx
