#pragma once

#include "apexcvx/exec.hpp"
#include "apexcvx/socp_solver.hpp"
#include "apexcvx/track.hpp"
#include "apexcvx/vehicle.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace apexcvx {

// Minimum-curvature racing line. Curvature is linearised about the
// reference line, so the problem is a single convex QP:
//   minimise sum_i kappa_lin(i)^2 + 1e-8 |n|^2
//   subject to n_min + w/2 <= n <= n_max - w/2
// with second-order central differences for n' and n'' (periodic on closed
// tracks). The result lives on the distinct samples of `track`; n' and n''
// are refreshed with fourth-order differences.
PathState min_curvature_line(const TrackRibbon& track, const RibbonDerivatives& derivs,
                             double w_veh, const SolverSettings& solver = {});

enum class Regime : std::uint8_t { grip, power, torque, braking, corner_apex };
std::string to_string(Regime regime);

struct SpeedProfile {
  std::vector<double> s;      // distance along the line [m]
  std::vector<double> v;      // [m/s]
  std::vector<double> limit;  // pure-cornering speed [m/s]
  std::vector<Regime> regime;
  std::vector<bool> flagged;  // no feasible cornering speed at this sample
  bool closed = true;
  double lap_time = 0.0;      // trapezoid rule on 1/v
};

struct ApexOptions {
  double entry_speed = 30.0;  // open lines only [m/s]
  double v_cap = 150.0;       // cornering search ceiling [m/s]
  Exec exec = Exec::parallel;
};

// Quasi-steady speed profile on a fixed line given by signed curvature and
// cumulative distance (closed lines repeat the first sample last). Cornering
// limits are independent per sample; the forward (traction) and backward
// (braking) passes are second-order in distance and run sequentially.
SpeedProfile apex_speed_profile(const std::vector<double>& kappa, const std::vector<double>& s,
                                bool closed, const VehicleParams& params,
                                const ApexOptions& options = {});

// Curvature and distance of the line P + n N sampled on the track rows.
struct LineGeometry {
  std::vector<double> kappa;
  std::vector<double> s;
};
LineGeometry line_geometry(const TrackRibbon& track, const RibbonDerivatives& derivs,
                           const PathState& path);

// Peak |kappa| and the distance spent with |kappa| >= threshold [1/m].
struct CurvatureStats {
  double peak = 0.0;
  double dwell = 0.0;  // [m]
};
CurvatureStats curvature_stats(const LineGeometry& line, double threshold);

}  // namespace apexcvx
