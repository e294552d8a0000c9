#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <cstddef>
#include <initializer_list>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace apexcvx {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
using Triplet = Eigen::Triplet<double, int>;

class ProgramError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Affine expression sum_k coef_k * x[index_k] + constant.
struct LinExpr {
  std::vector<std::pair<int, double>> terms;
  double constant = 0.0;

  LinExpr() = default;
  explicit LinExpr(double c) : constant(c) {}
  LinExpr(std::initializer_list<std::pair<int, double>> t, double c = 0.0)
      : terms(t), constant(c) {}

  static LinExpr var(int index, double coef = 1.0) { return LinExpr({{index, coef}}); }

  LinExpr& add(int index, double coef) {
    if (coef != 0.0) terms.emplace_back(index, coef);
    return *this;
  }
  LinExpr& operator+=(const LinExpr& o);
  LinExpr& operator-=(const LinExpr& o);
  LinExpr& operator*=(double s);
  LinExpr& operator+=(double c) {
    constant += c;
    return *this;
  }

  double eval(const Eigen::VectorXd& x) const;
};

LinExpr operator+(LinExpr a, const LinExpr& b);
LinExpr operator-(LinExpr a, const LinExpr& b);
LinExpr operator*(double s, LinExpr a);
LinExpr operator*(LinExpr a, double s);

// Cone K = R^l_+ x Q^{q_1} x ... x Q^{q_k}.
struct ConeDims {
  int l = 0;
  std::vector<int> q;

  int total() const;
  int degree() const { return l + static_cast<int>(q.size()); }
};

// minimize c'x + c_offset  s.t.  A x = b,  h - G x in K.
// Rows of G are ordered orthant first, then one contiguous block per
// second-order cone whose first row is the cone's "t" component.
struct ConicProgram {
  int num_vars = 0;
  Eigen::VectorXd c;
  double c_offset = 0.0;
  SparseMatrix A;
  Eigen::VectorXd b;
  SparseMatrix G;
  Eigen::VectorXd h;
  ConeDims cones;
  std::vector<std::string> eq_tags;    // one per row of A
  std::vector<std::string> cone_tags;  // one per orthant row, then one per SOC

  // Throws ProgramError on inconsistent dimensions or non-finite data.
  void validate() const;

  double objective(const Eigen::VectorXd& x) const { return c.dot(x) + c_offset; }
  // Worst equality violation and worst cone violation at x.
  double equality_residual(const Eigen::VectorXd& x) const;
  double cone_violation(const Eigen::VectorXd& x) const;
};

// Incremental construction of a ConicProgram. Orthant and SOC rows may be
// added in any order; build() emits them in the canonical layout.
class ProgramBuilder {
 public:
  int add_variable(const std::string& name = {});
  int add_variables(int count, const std::string& name = {});
  int num_vars() const { return num_vars_; }
  const std::string& var_name(int i) const { return names_[static_cast<std::size_t>(i)]; }

  void add_objective(const LinExpr& e);
  // e == 0
  void add_equality(const LinExpr& e, const std::string& tag = {});
  // e >= 0
  void add_nonneg(const LinExpr& e, const std::string& tag = {});
  // lo <= x[i] <= hi (infinite sides are skipped).
  void add_bounds(int index, double lo, double hi, const std::string& tag = {});
  // t >= ||u||_2
  void add_soc(const LinExpr& t, const std::vector<LinExpr>& u, const std::string& tag = {});
  // 2 x y >= ||u||^2 with x, y >= 0.
  void add_rotated_soc(const LinExpr& x, const LinExpr& y, const std::vector<LinExpr>& u,
                       const std::string& tag = {});

  ConicProgram build() const;

 private:
  int num_vars_ = 0;
  std::vector<std::string> names_;
  LinExpr objective_;
  std::vector<LinExpr> eq_rows_;
  std::vector<std::string> eq_tags_;
  std::vector<LinExpr> lin_rows_;
  std::vector<std::string> lin_tags_;
  std::vector<std::vector<LinExpr>> soc_blocks_;
  std::vector<std::string> soc_tags_;
};

// Plain-text sparse dump:
//   conic_program <num_vars> <eq_rows> <l> <num_soc>
//   soc <q_1> ... <q_k>
//   c <index> <value>          (nonzeros only), then "c_offset <value>"
//   A <row> <col> <value>      then "b <row> <value>"
//   G <row> <col> <value>      then "h <row> <value>"
//   tag eq|lin|soc <index> <text>
void write_program_text(const ConicProgram& program, std::ostream& out);

}  // namespace apexcvx
