#pragma once

#include "apexcvx/socp_solver.hpp"
#include "apexcvx/track.hpp"
#include "apexcvx/transcription.hpp"
#include "apexcvx/vehicle.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace apexcvx {

struct SCPConfig {
  double epsilon = 1e-2;  // lap-time convergence threshold [s]
  int max_iters = 15;
  std::optional<double> trust_radius;  // [m]
  // Radius used when a solver failure activates the trust region.
  double fallback_radius = 2.0;
  std::size_t samples = 0;     // reference intervals; 0 keeps the track grid
  double initial_speed = 30.0;  // constant-speed guess [m/s]
  double entry_speed = 30.0;    // open tracks
  std::optional<TrajectoryIterate> warm_start;
  // One extra solve after convergence, re-linearised at the final iterate.
  bool certify = true;
  SolverSettings solver;

  void validate() const;
};

enum class SCPStatus : std::uint8_t { converged, max_iters, solver_failure };
std::string to_string(SCPStatus status);

struct IterationRecord {
  int k = 0;
  double t_lap = 0.0;
  double t_lap_linearized = 0.0;
  SolveStatus solver_status = SolveStatus::numerical_failure;
  int solver_iterations = 0;
  double seconds = 0.0;
  double solve_seconds = 0.0;
  std::optional<double> trust_radius;
  double max_path_gap = 0.0;
  double max_lethargy_gap = 0.0;
  double max_energy_gap = 0.0;
  double max_load_gap = 0.0;
  double nonlinear_residual = 0.0;
  bool certificate = false;
};

struct SolveReport {
  SCPStatus status = SCPStatus::solver_failure;
  std::string mode = "min-time";
  std::vector<IterationRecord> history;
  TrajectoryIterate final_iterate;
  TrackRibbon track;  // the grid the iterate lives on
  RibbonDerivatives derivs;
  double total_seconds = 0.0;
  std::string message;
  int converged_at = 0;  // iteration at which |dt_lap| <= epsilon
  bool certified = false;
  double certificate_dt = 0.0;

  double t_lap() const { return final_iterate.t_lap; }
  int iterations() const { return static_cast<int>(history.size()); }
};

// Hook run on every subproblem before it is built.
using SubproblemExtension =
    std::function<void(Subproblem&, const TrajectoryIterate& prev)>;

// Iterates build -> solve -> extract until the exact lap time changes by at
// most epsilon. A solver failure halves the trust radius (switching it on if
// needed) and retries once before giving up. Cold starts compare from the
// second iteration on; warm starts compare the first solve with the warm
// start itself. With `certify`, the converged iterate is re-linearised and
// solved once more; that solve becomes the final iterate.
SolveReport solve_min_lap_time(const TrackRibbon& track, const VehicleParams& params,
                               const SCPConfig& config);

// Same loop with the lateral offset chain pinned to `n_fixed`, given on the
// collocation points of the resampled grid.
SolveReport solve_fixed_trajectory(const TrackRibbon& track, const VehicleParams& params,
                                   const SCPConfig& config, const PathState& n_fixed);

// General entry point used by the two above and by the energy module.
SolveReport run_scp(const TrackRibbon& track, const VehicleParams& params,
                    const SCPConfig& config, const std::optional<PathState>& fixed_line,
                    bool energy, const SubproblemExtension& extension);

// Resamples to `samples` intervals (when nonzero) and differentiates.
TrackRibbon prepare_grid(const TrackRibbon& track, std::size_t samples);

// Offset chain (n, n', n'') of a line given on track rows, restricted to the
// collocation points. Derivatives come from finite differences when absent.
PathState line_on_points(const TrackRibbon& grid, const std::vector<double>& n);

}  // namespace apexcvx
