#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace apexcvx {

using Vec3 = Eigen::Vector3d;

class TrackError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Ribbon circuit model: reference path P(s_ref), unit lateral normal N(s_ref)
// pointing to the driver's left, and lateral bounds on the offset n. Closed
// tracks repeat the first sample as the last one (s_ref.back() == S_ref).
struct TrackRibbon {
  std::string name;
  std::vector<double> s_ref;
  std::vector<Vec3> P;
  std::vector<Vec3> N;
  std::vector<double> n_min;
  std::vector<double> n_max;
  bool closed = false;

  std::size_t size() const { return s_ref.size(); }
  double length() const { return s_ref.empty() ? 0.0 : s_ref.back(); }
  // Number of distinct samples (closed tracks drop the duplicated endpoint).
  std::size_t unique_size() const { return closed ? size() - 1 : size(); }
};

// Distance derivatives of the reference path and normal field.
struct RibbonDerivatives {
  std::vector<Vec3> dP, ddP, dN, ddN;
};

// Lateral offset and its first two derivatives with respect to s_ref.
struct PathState {
  std::vector<double> n, dn, ddn;

  static PathState zeros(std::size_t count) {
    return {std::vector<double>(count, 0.0), std::vector<double>(count, 0.0),
            std::vector<double>(count, 0.0)};
  }
  std::size_t size() const { return n.size(); }
};

struct TrajectoryDerivatives {
  std::vector<Vec3> d1;  // (x', y', z')
  std::vector<Vec3> d2;  // (x'', y'', z'')
};

// Gradient of the planar curvature with respect to (x', y', x'', y'').
struct CurvatureGradient {
  double dx1 = 0.0, dy1 = 0.0, dx2 = 0.0, dy2 = 0.0;
};

struct SlopeBanking {
  std::vector<double> theta;
  std::vector<double> phi;
};

// Checks every structural invariant; renormalizes normals that are off by at
// most 1e-6 and throws TrackError otherwise. A positive vehicle width also
// checks that the drivable corridor is nonempty.
void validate_track(TrackRibbon& track, double vehicle_width = 0.0);

// CSV `s_ref,x_ref,y_ref,z_ref,Nx,Ny,Nz,n_min,n_max` plus an optional JSON
// sidecar (same stem, .json) holding {"name", "closed"}. Without a sidecar a
// track is closed when its first and last points coincide.
TrackRibbon load_track(const std::filesystem::path& csv_path);
void save_track(const TrackRibbon& track, const std::filesystem::path& csv_path);

// Uniform arc-length resampling to `intervals` intervals (intervals + 1 rows).
// P and N use C2 cubic splines (periodic when closed), bounds are linear.
TrackRibbon resample_track(const TrackRibbon& track, std::size_t intervals);

enum class TrackKind : std::uint8_t { straight, circle, oval, s_bend, corners };

TrackKind parse_track_kind(const std::string& name);
std::string to_string(TrackKind kind);

struct TestTrackParams {
  TrackKind kind = TrackKind::circle;
  std::size_t samples = 500;  // intervals along the reference path
  double length = 500.0;      // straight length [m]
  double radius = 100.0;      // arc radius [m]
  double mean_radius = 400.0; // base circle of `corners` [m]
  double half_width = 6.0;    // corridor half width [m]
  double grade = 0.0;         // rise over run for `straight`
  double bank_deg = 0.0;      // banking of `circle`, inside edge low > 0
  double arc_deg = 90.0;      // turn angle of each `s_bend` arc
  int corners = 30;           // number of corners for `corners`
  double amplitude = 0.05;    // relative radius modulation for `corners`
  std::uint32_t seed = 7;     // harmonic phases for `corners`
  double vehicle_width = 0.0;
};

TrackRibbon make_test_track(const TestTrackParams& params);

// Fourth-order finite differences on the (uniform) s_ref grid, periodic for
// closed tracks and one-sided at the ends of open ones.
RibbonDerivatives differentiate_ribbon(const TrackRibbon& track);

// Fourth-order first and second derivatives of `count` distinct uniformly
// spaced samples; extra trailing entries (a closed track's repeated
// endpoint) copy the first one.
void differentiate_samples(const std::vector<double>& f, std::size_t count, bool periodic,
                           double h, std::vector<double>& d1, std::vector<double>& d2);

// First and second derivatives of the offset trajectory P + n N.
TrajectoryDerivatives trajectory_derivatives(const TrackRibbon& track,
                                             const RibbonDerivatives& derivs,
                                             const PathState& path);

double curvature(const Vec3& d1, const Vec3& d2);
std::vector<double> curvature(const TrajectoryDerivatives& td);
CurvatureGradient curvature_gradient(const Vec3& d1, const Vec3& d2);

// Slope from the given trajectory tangents; banking from the ribbon normal.
SlopeBanking slope_and_banking(const TrackRibbon& track,
                               const RibbonDerivatives& derivs,
                               const std::vector<Vec3>& d1_prev);

double slope_angle(const Vec3& d1);
double bank_angle(const Vec3& normal);

// Trapezoidal length of the offset trajectory over the whole track.
double path_length(const TrackRibbon& track, const TrajectoryDerivatives& td);

}  // namespace apexcvx
