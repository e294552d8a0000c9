#pragma once

#include "apexcvx/conic_program.hpp"
#include "apexcvx/exec.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <string>

namespace apexcvx {

enum class SolveStatus : std::uint8_t {
  optimal,
  optimal_inaccurate,
  primal_infeasible,
  dual_infeasible,
  numerical_failure,
  iteration_limit,
};

std::string to_string(SolveStatus status);
bool is_success(SolveStatus status);

struct SolverSettings {
  double feastol = 1e-8;
  double abstol = 1e-8;
  double reltol = 1e-8;
  // Looser tolerances accepted as optimal_inaccurate when progress stalls.
  double feastol_inacc = 1e-5;
  double abstol_inacc = 5e-5;
  double reltol_inacc = 5e-5;
  int max_iters = 100;
  int equilibration_iters = 15;
  double static_reg = 1e-8;
  int refinement_steps = 3;
  Exec exec = Exec::parallel;
};

struct SolveResult {
  SolveStatus status = SolveStatus::numerical_failure;
  Eigen::VectorXd x;
  Eigen::VectorXd y;  // equality multipliers
  Eigen::VectorXd z;  // cone multipliers
  Eigen::VectorXd s;  // slacks h - G x
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double primal_residual = 0.0;  // max(|Ax - b|_inf, |Gx + s - h|_inf)
  double dual_residual = 0.0;    // |A'y + G'z + c|_inf
  double gap = 0.0;              // s'z
  int iterations = 0;
  double solve_seconds = 0.0;
};

// Primal-dual interior-point method on the homogeneous self-dual embedding
// with Nesterov-Todd scaling and Mehrotra correction.
SolveResult conic_solve(const ConicProgram& program, const SolverSettings& settings = {});

}  // namespace apexcvx
