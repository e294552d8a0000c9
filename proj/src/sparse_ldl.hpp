#pragma once

#include "apexcvx/conic_program.hpp"

#include <Eigen/Core>

#include <vector>

namespace apexcvx::detail {

// Up-looking sparse LDL' for a quasi-definite matrix with known pivot signs.
// Pivots whose sign is wrong or whose magnitude falls below `eps` are replaced
// by sign * delta (dynamic regularization). The fill-reducing ordering and
// the symbolic factorization are computed once per pattern.
class QuasiDefiniteLdl {
 public:
  // `lower` holds the lower triangle of the matrix; only its pattern is used
  // here. `signs[i]` is +1 or -1 for the expected sign of pivot i.
  void analyze(const SparseMatrix& lower, const std::vector<int>& signs);
  // Values are read from `lower`, which must have the analyzed pattern.
  void factorize(const SparseMatrix& lower, double eps, double delta);
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;

  int regularized_pivots() const { return regularized_; }

 private:
  int n_ = 0;
  std::vector<int> perm_;      // permuted index -> original index
  std::vector<int> up_p_, up_i_;  // permuted upper triangle, column compressed
  std::vector<int> up_src_;       // source slot in `lower` for each upper entry
  std::vector<double> up_x_;
  std::vector<int> parent_, lnz_, lp_, li_;
  std::vector<double> lx_, d_;
  std::vector<int> sign_;
  int regularized_ = 0;
  // Workspace.
  std::vector<double> y_;
  std::vector<int> flag_, pattern_;
};

}  // namespace apexcvx::detail
