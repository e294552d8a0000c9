#pragma once

#include "apexcvx/conic_program.hpp"
#include "apexcvx/exec.hpp"

#include <Eigen/Core>

#include <vector>

namespace apexcvx::kernels {

// Offsets of every cone block in the stacked slack vector, in the packed
// scaling vector and in the KKT value slots of the scaling block.
struct ConeLayout {
  int l = 0;
  std::vector<int> q;
  std::vector<int> offset;    // first row of each SOC in s
  std::vector<int> kkt_slot;  // first KKT slot of each SOC
  int total = 0;
  int kkt_slots = 0;          // l + sum q(q+1)/2

  explicit ConeLayout(const ConeDims& dims);
  ConeLayout() = default;
  int num_soc() const { return static_cast<int>(q.size()); }
  int degree() const { return l + num_soc(); }
};

// Nesterov-Todd scaling W with W z = W^{-T} s = lambda.
// Orthant: W = diag(d) with d = sqrt(s / z).
// SOC: W = eta [w0 w1'; w1 I + w1 w1' / (1 + w0)] with w'Jw = 1.
struct NtScaling {
  Eigen::VectorXd d;       // orthant part
  Eigen::VectorXd wbar;    // SOC part, same offsets as s minus l
  Eigen::VectorXd eta;     // one per SOC
  Eigen::VectorXd lambda;  // full length
};

// Each operation exists as a plain serial loop and an OpenMP loop over cone
// blocks; the two give identical results.
namespace serial {
bool nt_scaling(const ConeLayout& k, const Eigen::VectorXd& s, const Eigen::VectorXd& z,
                NtScaling& w);
void apply_W(const ConeLayout& k, const NtScaling& w, const Eigen::VectorXd& x,
             Eigen::VectorXd& out);
void apply_Winv(const ConeLayout& k, const NtScaling& w, const Eigen::VectorXd& x,
                Eigen::VectorXd& out);
void jordan_product(const ConeLayout& k, const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                    Eigen::VectorXd& out);
void jordan_divide(const ConeLayout& k, const Eigen::VectorXd& lambda,
                   const Eigen::VectorXd& d, Eigen::VectorXd& out);
double max_step(const ConeLayout& k, const Eigen::VectorXd& x, const Eigen::VectorXd& dx);
double min_eigenvalue(const ConeLayout& k, const Eigen::VectorXd& x);
void fill_kkt_scaling(const ConeLayout& k, const NtScaling& w, double reg, double* values,
                      const std::vector<int>& slots);
}  // namespace serial

namespace omp {
bool nt_scaling(const ConeLayout& k, const Eigen::VectorXd& s, const Eigen::VectorXd& z,
                NtScaling& w);
void apply_W(const ConeLayout& k, const NtScaling& w, const Eigen::VectorXd& x,
             Eigen::VectorXd& out);
void apply_Winv(const ConeLayout& k, const NtScaling& w, const Eigen::VectorXd& x,
                Eigen::VectorXd& out);
void jordan_product(const ConeLayout& k, const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                    Eigen::VectorXd& out);
void jordan_divide(const ConeLayout& k, const Eigen::VectorXd& lambda,
                   const Eigen::VectorXd& d, Eigen::VectorXd& out);
double max_step(const ConeLayout& k, const Eigen::VectorXd& x, const Eigen::VectorXd& dx);
double min_eigenvalue(const ConeLayout& k, const Eigen::VectorXd& x);
void fill_kkt_scaling(const ConeLayout& k, const NtScaling& w, double reg, double* values,
                      const std::vector<int>& slots);
}  // namespace omp

// Dispatch on the execution policy.
struct Kernels {
  Exec exec = Exec::serial;

  bool nt_scaling(const ConeLayout& k, const Eigen::VectorXd& s, const Eigen::VectorXd& z,
                  NtScaling& w) const;
  void apply_W(const ConeLayout& k, const NtScaling& w, const Eigen::VectorXd& x,
               Eigen::VectorXd& out) const;
  void apply_Winv(const ConeLayout& k, const NtScaling& w, const Eigen::VectorXd& x,
                  Eigen::VectorXd& out) const;
  void jordan_product(const ConeLayout& k, const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                      Eigen::VectorXd& out) const;
  void jordan_divide(const ConeLayout& k, const Eigen::VectorXd& lambda,
                     const Eigen::VectorXd& d, Eigen::VectorXd& out) const;
  double max_step(const ConeLayout& k, const Eigen::VectorXd& x,
                  const Eigen::VectorXd& dx) const;
  double min_eigenvalue(const ConeLayout& k, const Eigen::VectorXd& x) const;
  void fill_kkt_scaling(const ConeLayout& k, const NtScaling& w, double reg, double* values,
                        const std::vector<int>& slots) const;
};

// Identity element e of the cone (1 on the orthant and on each SOC t row).
Eigen::VectorXd cone_identity(const ConeLayout& k);

}  // namespace apexcvx::kernels
