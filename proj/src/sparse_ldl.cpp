#include "sparse_ldl.hpp"

#include <Eigen/OrderingMethods>

namespace apexcvx::detail {

void QuasiDefiniteLdl::analyze(const SparseMatrix& lower, const std::vector<int>& signs) {
  n_ = static_cast<int>(lower.rows());
  Eigen::AMDOrdering<int> amd;
  Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> pinv;
  amd(lower, pinv);
  perm_.assign(pinv.indices().data(), pinv.indices().data() + n_);
  std::vector<int> newidx(static_cast<std::size_t>(n_));
  for (int k = 0; k < n_; ++k) newidx[static_cast<std::size_t>(perm_[static_cast<std::size_t>(k)])] = k;

  sign_.resize(static_cast<std::size_t>(n_));
  for (int k = 0; k < n_; ++k) {
    sign_[static_cast<std::size_t>(k)] = signs[static_cast<std::size_t>(perm_[static_cast<std::size_t>(k)])];
  }

  // Permuted upper triangle in compressed columns.
  const auto nnz = static_cast<std::size_t>(lower.nonZeros());
  up_p_.assign(static_cast<std::size_t>(n_) + 1, 0);
  std::vector<int> row(nnz), col(nnz);
  for (int j = 0; j < lower.outerSize(); ++j) {
    for (int s = lower.outerIndexPtr()[j]; s < lower.outerIndexPtr()[j + 1]; ++s) {
      const int i = lower.innerIndexPtr()[s];
      const int ni = newidx[static_cast<std::size_t>(i)];
      const int nj = newidx[static_cast<std::size_t>(j)];
      row[static_cast<std::size_t>(s)] = std::min(ni, nj);
      col[static_cast<std::size_t>(s)] = std::max(ni, nj);
      ++up_p_[static_cast<std::size_t>(col[static_cast<std::size_t>(s)]) + 1];
    }
  }
  for (int k = 0; k < n_; ++k) up_p_[static_cast<std::size_t>(k) + 1] += up_p_[static_cast<std::size_t>(k)];
  up_i_.resize(nnz);
  up_src_.resize(nnz);
  up_x_.resize(nnz);
  std::vector<int> next(up_p_.begin(), up_p_.end() - 1);
  for (std::size_t s = 0; s < nnz; ++s) {
    const int dst = next[static_cast<std::size_t>(col[s])]++;
    up_i_[static_cast<std::size_t>(dst)] = row[s];
    up_src_[static_cast<std::size_t>(dst)] = static_cast<int>(s);
  }

  // Elimination tree and column counts of L.
  const auto N = static_cast<std::size_t>(n_);
  parent_.assign(N, -1);
  lnz_.assign(N, 0);
  flag_.assign(N, 0);
  for (int k = 0; k < n_; ++k) {
    flag_[static_cast<std::size_t>(k)] = k;
    for (int p = up_p_[static_cast<std::size_t>(k)]; p < up_p_[static_cast<std::size_t>(k) + 1]; ++p) {
      int i = up_i_[static_cast<std::size_t>(p)];
      if (i >= k) continue;
      for (; flag_[static_cast<std::size_t>(i)] != k; i = parent_[static_cast<std::size_t>(i)]) {
        if (parent_[static_cast<std::size_t>(i)] == -1) parent_[static_cast<std::size_t>(i)] = k;
        ++lnz_[static_cast<std::size_t>(i)];
        flag_[static_cast<std::size_t>(i)] = k;
      }
    }
  }
  lp_.assign(N + 1, 0);
  for (std::size_t k = 0; k < N; ++k) lp_[k + 1] = lp_[k] + lnz_[k];
  li_.resize(static_cast<std::size_t>(lp_[N]));
  lx_.resize(static_cast<std::size_t>(lp_[N]));
  d_.resize(N);
  y_.assign(N, 0.0);
  pattern_.resize(N);
}

void QuasiDefiniteLdl::factorize(const SparseMatrix& lower, double eps, double delta) {
  const double* vals = lower.valuePtr();
  for (std::size_t p = 0; p < up_x_.size(); ++p) up_x_[p] = vals[up_src_[p]];
  regularized_ = 0;
  const auto N = static_cast<std::size_t>(n_);
  for (std::size_t k = 0; k < N; ++k) {
    y_[k] = 0.0;
    int top = n_;
    flag_[k] = static_cast<int>(k);
    lnz_[k] = 0;
    for (int p = up_p_[k]; p < up_p_[k + 1]; ++p) {
      auto i = static_cast<std::size_t>(up_i_[static_cast<std::size_t>(p)]);
      y_[i] += up_x_[static_cast<std::size_t>(p)];
      int len = 0;
      for (; flag_[i] != static_cast<int>(k); i = static_cast<std::size_t>(parent_[i])) {
        pattern_[static_cast<std::size_t>(len++)] = static_cast<int>(i);
        flag_[i] = static_cast<int>(k);
      }
      while (len > 0) pattern_[static_cast<std::size_t>(--top)] = pattern_[static_cast<std::size_t>(--len)];
    }
    double dk = y_[k];
    y_[k] = 0.0;
    for (; top < n_; ++top) {
      const auto i = static_cast<std::size_t>(pattern_[static_cast<std::size_t>(top)]);
      const double yi = y_[i];
      y_[i] = 0.0;
      const int p2 = lp_[i] + lnz_[i];
      for (int p = lp_[i]; p < p2; ++p) {
        y_[static_cast<std::size_t>(li_[static_cast<std::size_t>(p)])] -= lx_[static_cast<std::size_t>(p)] * yi;
      }
      const double lki = yi / d_[i];
      dk -= lki * yi;
      li_[static_cast<std::size_t>(p2)] = static_cast<int>(k);
      lx_[static_cast<std::size_t>(p2)] = lki;
      ++lnz_[i];
    }
    if (sign_[k] * dk <= eps) {
      dk = sign_[k] * delta;
      ++regularized_;
    }
    d_[k] = dk;
  }
}

Eigen::VectorXd QuasiDefiniteLdl::solve(const Eigen::VectorXd& rhs) const {
  const auto N = static_cast<std::size_t>(n_);
  Eigen::VectorXd y(n_);
  for (std::size_t k = 0; k < N; ++k) y[static_cast<Eigen::Index>(k)] = rhs[perm_[k]];
  for (std::size_t j = 0; j < N; ++j) {
    const double yj = y[static_cast<Eigen::Index>(j)];
    for (int p = lp_[j]; p < lp_[j + 1]; ++p) y[li_[static_cast<std::size_t>(p)]] -= lx_[static_cast<std::size_t>(p)] * yj;
  }
  for (std::size_t j = 0; j < N; ++j) y[static_cast<Eigen::Index>(j)] /= d_[j];
  for (std::size_t j = N; j-- > 0;) {
    double yj = y[static_cast<Eigen::Index>(j)];
    for (int p = lp_[j]; p < lp_[j + 1]; ++p) yj -= lx_[static_cast<std::size_t>(p)] * y[li_[static_cast<std::size_t>(p)]];
    y[static_cast<Eigen::Index>(j)] = yj;
  }
  Eigen::VectorXd x(n_);
  for (std::size_t k = 0; k < N; ++k) x[perm_[k]] = y[static_cast<Eigen::Index>(k)];
  return x;
}

}  // namespace apexcvx::detail
