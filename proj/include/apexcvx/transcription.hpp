#pragma once

#include "apexcvx/conic_program.hpp"
#include "apexcvx/track.hpp"
#include "apexcvx/vehicle.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace apexcvx {

// Per-point decision variables. Every collocation point (interval nodes and
// midpoints alike) carries the same block of kFieldCount variables:
//   n, n', n''          lateral offset chain
//   E                   kinetic energy
//   H                   dE/ds_ref
//   sigma               ds/ds_ref
//   lethargy            dt/ds
//   v                   speed
//   Fc                  centrifugal force
//   Fx_R, Fx_F          longitudinal tire forces
//   Fw_R, Fw_F          wheel (actuator) forces
//   Fzs_R, Fzs_F        effective loads of the friction ellipses
// Lateral and vertical tire forces and the load transfers are affine in
// (E, Fc, Fx_R + Fx_F) and are not variables.
enum Field : int {
  kN = 0,
  kDn,
  kDdn,
  kE,
  kH,
  kSigma,
  kLethargy,
  kV,
  kFc,
  kFxR,
  kFxF,
  kFwR,
  kFwF,
  kFzsR,
  kFzsF,
  kFieldCount
};

// Optional hybrid powertrain block appended after the point block:
//   per point: F_eng, F_mot, F_brk_R, F_brk_F
//   battery chain: one state per point, plus a terminal state on closed tracks
enum EnergyField : int { kEng = 0, kMot, kBrkR, kBrkF, kEnergyFieldCount };

// Variable index map. With samples = 2N intervals on the reference grid
// there are P = 2N points on a closed track (the last node wraps to the
// first) and P = 2N + 1 on an open one. The variable count is
//   num_vars = 15 P                         (base model)
//   num_vars = 15 P + 4 P + P + [closed]    (energy option)
// and variable (point i, field f) sits at 15 i + f.
struct Layout {
  int samples = 0;
  int intervals = 0;  // Hermite-Simpson intervals N
  int points = 0;     // P
  bool closed = true;
  bool energy = false;
  int energy_offset = -1;
  int battery_offset = -1;
  int battery_states = 0;
  int num_vars = 0;

  int var(int point, int field) const { return kFieldCount * point + field; }
  int energy_var(int point, int field) const {
    return energy_offset + kEnergyFieldCount * point + field;
  }
  int battery_var(int state) const { return battery_offset + state; }
  // Neighbouring point index with periodic wrap on closed tracks.
  int wrap(int point) const { return closed ? point % points : point; }
};

// samples must be >= 16; odd counts are rounded up to the next even one.
Layout layout_variables(std::size_t samples, bool closed, bool energy = false);

// Scaled units used inside the conic program.
struct Scales {
  double force = 1.0;     // m g [N]
  double energy = 1.0;    // E at the reference speed [J]
  double speed = 50.0;    // [m/s]
  double time = 1.0;      // objective normalisation [s]
};

struct Tightness {
  std::vector<double> path;       // (sigma - |xyz'|) / |xyz'|
  std::vector<double> lethargy;   // lethargy v - 1
  std::vector<double> energy;     // (E - m v^2 / 2) / E
  PerAxle<std::vector<double>> load;  // (bound - Fz*) / max(Fz, m g / 100)
  PerAxle<std::vector<bool>> grip_active;
  double max_path = 0.0;
  double max_lethargy = 0.0;
  double max_energy = 0.0;
  double max_load_active = 0.0;  // over points with an active friction ellipse
  int active_points = 0;
};

// One SCP iterate, stored per collocation point in SI units.
struct TrajectoryIterate {
  int k = 0;
  bool closed = true;
  double length = 0.0;  // S_ref
  std::vector<double> s_ref;
  PathState path;
  std::vector<double> E, dEds, dEdsref, lethargy, v, sigma, Fc;
  std::vector<double> kappa, theta, phi;
  PerAxle<std::vector<double>> Fx, Fy, Fz, Fz_star, dFz, Fw;
  // Energy option only.
  std::vector<double> F_eng, F_mot, battery;
  PerAxle<std::vector<double>> F_brk;
  double t_lap = 0.0;             // quadrature of lethargy * sigma
  double t_lap_linearized = 0.0;  // objective of the subproblem
  Tightness tightness;

  std::size_t size() const { return s_ref.size(); }
  OperatingPoint operating_point(std::size_t i) const;
};

struct TranscriptionOptions {
  std::optional<double> trust_radius;   // |n - n_prev| <= radius
  std::optional<PathState> fixed_line;  // pins n, n', n'' when set
  double entry_speed = 30.0;            // open tracks only [m/s]
  bool energy = false;                  // reserve the powertrain block
};

// Linearisation data frozen at the previous iterate.
struct Linearization {
  std::vector<double> theta, phi, kappa;
  std::vector<CurvatureGradient> grad;
  std::vector<Vec3> d1, d2;  // previous trajectory derivatives
  std::vector<double> n, E, dEds, sigma, lethargy;
};

// A subproblem under construction. Extensions (the energy module) append
// rows to `builder` before it is built.
struct Subproblem {
  Layout layout;
  Scales scales;
  Linearization lin;
  std::vector<double> weights;  // quadrature weights over points [m]
  ProgramBuilder builder;
};

// Centreline guess at constant speed, used as the first linearisation point.
TrajectoryIterate initial_guess(const TrackRibbon& track, const RibbonDerivatives& derivs,
                                const VehicleParams& params, const Layout& layout,
                                double speed);

Subproblem assemble_subproblem(const TrackRibbon& track, const RibbonDerivatives& derivs,
                               const VehicleParams& params, const TrajectoryIterate& prev,
                               const TranscriptionOptions& options);

ConicProgram build_subproblem(const TrackRibbon& track, const RibbonDerivatives& derivs,
                              const VehicleParams& params, const TrajectoryIterate& prev,
                              const TranscriptionOptions& options);

// Recovers the iterate from a solution vector, evaluates the exact lap time
// and the relaxation gaps.
TrajectoryIterate extract_iterate(const Eigen::VectorXd& x, const Subproblem& sub,
                                  const TrackRibbon& track, const RibbonDerivatives& derivs,
                                  const VehicleParams& params);

// Scaled variable vector of an iterate (inverse of extract_iterate).
Eigen::VectorXd pack_iterate(const TrajectoryIterate& it, const Subproblem& sub);

// Hermite-Simpson defects of one interval of length h for x' = f:
//   mid = x_m - (x_0 + x_1) / 2 - h (f_0 - f_1) / 8
//   end = x_1 - x_0 - h (f_0 + 4 f_m + f_1) / 6
struct HsDefect {
  double mid = 0.0;
  double end = 0.0;
};
HsDefect hermite_simpson_defect(double h, double x0, double f0, double xm, double fm, double x1,
                                double f1);

// Exact relaxation gaps of an iterate.
Tightness evaluate_tightness(const TrajectoryIterate& it, const TrackRibbon& track,
                             const RibbonDerivatives& derivs, const VehicleParams& params);

// Worst relative violation of the exact nonconvex relations (centrifugal
// force, slope, lethargy, energy transform) at an iterate.
struct NonlinearResiduals {
  double centrifugal = 0.0;
  double slope = 0.0;
  double lethargy = 0.0;
  double energy_transform = 0.0;
  double lap_time = 0.0;  // linearised against exact objective
  double max() const;
};
NonlinearResiduals nonlinear_residuals(const TrajectoryIterate& it, const TrackRibbon& track,
                                       const RibbonDerivatives& derivs,
                                       const VehicleParams& params);

}  // namespace apexcvx
