#pragma once

#include "apexcvx/exec.hpp"

#include <array>
#include <filesystem>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace apexcvx {

enum Axle : int { kRear = 0, kFront = 1 };
template <class T>
using PerAxle = std::array<T, 2>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

class VehicleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Quasi-steady-state single-track vehicle. Per-axle arrays are indexed by
// Axle (rear first). Infinite P_min/T_min mean no lower actuator limit, an
// infinite C_alpha disables cornering resistance.
struct VehicleParams {
  double m = 800.0;
  double g = 9.81;
  double w_veh = 2.0;
  double rho = 1.2;
  double CdA = 1.1;
  double ClA = 3.2;
  double l_F = 2.0;
  double l_R = 1.6;
  double h_G = 0.30;
  double l_GP = 0.10;
  double h_P = 0.40;
  PerAxle<double> mu_x{1.65, 1.65};
  PerAxle<double> mu_y{1.60, 1.60};
  PerAxle<double> Fz_nom{2500.0, 2500.0};
  PerAxle<double> gamma{-0.10, -0.10};
  PerAxle<double> h_rc{0.08, 0.05};
  PerAxle<double> w_axle{1.55, 1.60};
  double xi = 0.55;
  PerAxle<double> C_alpha{-25.0, -25.0};
  PerAxle<double> c_r{0.012, 0.012};
  PerAxle<double> P_max{750e3, 0.0};
  PerAxle<double> P_min{-kInf, -kInf};
  PerAxle<double> T_max{4000.0, 0.0};
  PerAxle<double> T_min{-7000.0, -9000.0};
  PerAxle<double> r_w{0.33, 0.33};

  double wheelbase() const { return l_F + l_R; }
  // F_drag = drag_factor() * E_kin and F_down = lift_factor() * E_kin.
  double drag_factor() const { return rho * CdA / m; }
  double lift_factor() const { return rho * ClA / m; }

  // Throws VehicleError when a documented invariant fails.
  void validate() const;

  // Comparison model with load-independent grip and no cornering
  // resistance or rolling resistance.
  VehicleParams fixed_grip_variant() const;
  // Scales every nominal grip coefficient.
  VehicleParams with_grip_scale(double factor) const;
};

VehicleParams load_vehicle(const std::filesystem::path& json_path);
void save_vehicle(const VehicleParams& params, const std::filesystem::path& json_path);
VehicleParams vehicle_from_json_text(const std::string& text);
std::string vehicle_to_json_text(const VehicleParams& params);

// Every quantity of the force and moment balances at one point.
struct OperatingPoint {
  double E_kin = 0.0;
  PerAxle<double> Fx{0.0, 0.0};
  PerAxle<double> Fy{0.0, 0.0};
  PerAxle<double> Fz{0.0, 0.0};
  PerAxle<double> Fz_star{0.0, 0.0};
  PerAxle<double> dFz{0.0, 0.0};
  PerAxle<double> Fw{0.0, 0.0};
  double lethargy = 0.0;  // dt/ds
  double v = 0.0;
  double Fc = 0.0;
  double theta = 0.0;
  double phi = 0.0;

  double Fy_total() const { return Fy[kRear] + Fy[kFront]; }
};

struct BalanceResiduals {
  double longitudinal = 0.0;  // dE/ds balance
  double lateral = 0.0;
  double vertical = 0.0;
  double yaw = 0.0;
  double pitch = 0.0;
  PerAxle<double> roll{0.0, 0.0};  // load-transfer identities

  double max_abs() const;
};

BalanceResiduals residual_balances(const VehicleParams& p, const OperatingPoint& op,
                                   double dEkin_ds);

// Upper bound on F_z* from the load-sensitive grip relation.
double effective_load_bound(const VehicleParams& p, Axle axle, double Fz, double dFz);

// Lateral load-transfer difference across each axle for the given axle
// lateral forces.
PerAxle<double> lateral_load_transfer(const VehicleParams& p, const PerAxle<double>& Fy);

// Friction-ellipse margin per axle using the load-sensitive bound;
// nonnegative means feasible. Throws on negative vertical load.
PerAxle<double> friction_margin(const VehicleParams& p, const OperatingPoint& op);

struct WheelForceBudget {
  PerAxle<double> Fx_max{0.0, 0.0};
  PerAxle<double> cornering_loss{0.0, 0.0};
  PerAxle<bool> cone_form_agrees{true, true};
};

// Longitudinal force available from F_w after rolling and cornering
// resistance; also checks the explicit form against its conic rewrite.
WheelForceBudget wheel_force_budget(const VehicleParams& p, const OperatingPoint& op);
bool cornering_cone_feasible(const VehicleParams& p, Axle axle, double Fx, double Fw,
                             double Fy, double Fz);
bool cornering_explicit_feasible(const VehicleParams& p, Axle axle, double Fx, double Fw,
                                 double Fy, double Fz);

struct ActuatorBounds {
  PerAxle<double> lower{0.0, 0.0};
  PerAxle<double> upper{0.0, 0.0};
  PerAxle<bool> power_binds_upper{false, false};
};

ActuatorBounds actuator_limits(const VehicleParams& p, double lethargy);
bool actuator_feasible(const VehicleParams& p, const OperatingPoint& op, double tol = 1e-9);

// Axle loads, lateral split and load transfer on a given operating condition.
struct SteadyLoads {
  PerAxle<double> Fz{0.0, 0.0};
  PerAxle<double> Fy{0.0, 0.0};
  PerAxle<double> dFz{0.0, 0.0};
};

SteadyLoads steady_loads(const VehicleParams& p, double E_kin, double Fx_total, double Fc,
                         double theta = 0.0, double phi = 0.0);

// Range of total longitudinal force reachable at (v, a_y) on flat ground with
// the given total longitudinal force used to place the loads. Empty when the
// lateral demand alone exceeds the grip of an axle.
struct FxInterval {
  double lo = 0.0;
  double hi = 0.0;
  bool feasible = false;
};
FxInterval axle_force_range(const VehicleParams& p, double v, double a_y, double Fx_total);

// Steady-state feasibility of (v, a_x, a_y) on flat ground.
bool steady_state_feasible(const VehicleParams& p, double v, double a_x, double a_y);

// Extreme longitudinal accelerations at (v, a_y); nullopt when infeasible.
std::optional<double> max_longitudinal_accel(const VehicleParams& p, double v, double a_y);
std::optional<double> min_longitudinal_accel(const VehicleParams& p, double v, double a_y);

// Largest lateral acceleration reachable at speed v while holding a_x.
std::optional<double> max_lateral_accel(const VehicleParams& p, double v, double a_x);

// Highest steady speed on a flat constant-curvature path (a_x = 0).
double steady_cornering_speed(const VehicleParams& p, double curvature,
                              double v_cap = 150.0);

struct GgvPoint {
  double v = 0.0;
  double a_x = 0.0;
  double a_y = 0.0;
};

struct GgvSlice {
  double v = 0.0;
  bool feasible = false;
  double a_y_max = 0.0;
  std::vector<GgvPoint> boundary;  // closed, counter-clockwise in (a_y, a_x)
};

// Per-speed g-g boundary; slices are independent and evaluated in parallel
// when requested.
std::vector<GgvSlice> ggv_envelope(const VehicleParams& p, const std::vector<double>& speeds,
                                   int lateral_samples = 41, Exec exec = Exec::parallel);

}  // namespace apexcvx
