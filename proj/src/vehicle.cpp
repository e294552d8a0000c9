#include "apexcvx/vehicle.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace apexcvx {
namespace {

using nlohmann::json;

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "m",     "g",      "w_veh", "rho",    "CdA",     "ClA",  "l_F",   "l_R",
      "h_G",   "l_GP",   "h_P",   "mu_nom", "Fz_nom",  "gamma", "h_rc", "w_axle",
      "xi",    "C_alpha", "c_r",  "P_max",  "P_min",   "T_max", "T_min", "r_w"};
  return keys;
}

// null encodes an infinite value (sign chosen by the caller).
double number_or_inf(const json& j, double inf_value) {
  if (j.is_null()) return inf_value;
  if (!j.is_number()) throw VehicleError("vehicle file: expected a number or null");
  return j.get<double>();
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

PerAxle<double> read_axles(const json& j, const std::string& key, double inf_value) {
  const json& a = j.at(key);
  if (!a.is_array() || a.size() != 2) {
    throw VehicleError("vehicle file: '" + key + "' must be [rear, front]");
  }
  return {number_or_inf(a[0], inf_value), number_or_inf(a[1], inf_value)};
}

json write_axles(const PerAxle<double>& v) {
  return json::array({number_or_null(v[kRear]), number_or_null(v[kFront])});
}

// Bisection on a predicate that holds at `good` and fails at `bad`.
template <class Pred>
double bisect(double good, double bad, Pred&& ok, int iters = 60) {
  for (int i = 0; i < iters; ++i) {
    const double mid = 0.5 * (good + bad);
    if (ok(mid)) {
      good = mid;
    } else {
      bad = mid;
    }
  }
  return good;
}

// Generous acceleration scale used to bracket searches at speed v.
double accel_scale(const VehicleParams& p, double v) {
  const double mu = std::max({p.mu_x[0], p.mu_x[1], p.mu_y[0], p.mu_y[1]});
  const double E = 0.5 * p.m * v * v;
  return 2.0 * mu * (p.g + p.lift_factor() * E / p.m) + 1.0;
}

// Largest x in [lo, hi] with ok(x), assuming the feasible set is an interval;
// found by a coarse scan followed by bisection toward `hi`.
template <class Pred>
std::optional<double> upper_end(double lo, double hi, Pred&& ok, int scan = 64) {
  std::optional<double> best;
  double next_bad = hi;
  for (int i = scan; i >= 0; --i) {
    const double x = lo + (hi - lo) * static_cast<double>(i) / scan;
    if (ok(x)) {
      best = x;
      break;
    }
    next_bad = x;
  }
  if (!best) return std::nullopt;
  if (*best >= hi) return hi;
  return bisect(*best, next_bad, ok);
}

}  // namespace

void VehicleParams::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw VehicleError(std::string("vehicle parameter ") + name + " must be positive");
    }
  };
  positive(m, "m");
  positive(g, "g");
  positive(rho, "rho");
  positive(l_F, "l_F");
  positive(l_R, "l_R");
  if (!(w_veh >= 0.0)) throw VehicleError("vehicle parameter w_veh must be >= 0");
  if (!(CdA >= 0.0) || !(ClA >= 0.0)) throw VehicleError("CdA and ClA must be >= 0");
  if (!(xi >= 0.0 && xi <= 1.0)) throw VehicleError("xi must lie in [0, 1]");
  for (int a = 0; a < 2; ++a) {
    positive(w_axle[a], "w_axle");
    positive(r_w[a], "r_w");
    positive(mu_x[a], "mu_nom.x");
    positive(mu_y[a], "mu_nom.y");
    positive(Fz_nom[a], "Fz_nom");
    if (!(gamma[a] <= 0.0) || !(gamma[a] > -1.0)) {
      throw VehicleError("gamma must lie in (-1, 0]");
    }
    if (!(C_alpha[a] < 0.0)) throw VehicleError("C_alpha must be negative");
    if (!(c_r[a] >= 0.0)) throw VehicleError("c_r must be >= 0");
    if (!(P_max[a] >= 0.0) || !(T_max[a] >= 0.0)) {
      throw VehicleError("P_max and T_max must be >= 0");
    }
    if (!(P_min[a] <= 0.0) || !(T_min[a] <= 0.0)) {
      throw VehicleError("P_min and T_min must be <= 0");
    }
  }
}

VehicleParams VehicleParams::fixed_grip_variant() const {
  VehicleParams q = *this;
  q.gamma = {0.0, 0.0};
  q.C_alpha = {-kInf, -kInf};
  q.c_r = {0.0, 0.0};
  return q;
}

VehicleParams VehicleParams::with_grip_scale(double factor) const {
  VehicleParams q = *this;
  for (int a = 0; a < 2; ++a) {
    q.mu_x[a] *= factor;
    q.mu_y[a] *= factor;
  }
  return q;
}

VehicleParams vehicle_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw VehicleError(std::string("vehicle file: ") + e.what());
  }
  if (!j.is_object()) throw VehicleError("vehicle file: expected a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!known_keys().contains(key)) {
      throw VehicleError("vehicle file: unknown key '" + key + "'");
    }
  }
  for (const auto& key : known_keys()) {
    if (!j.contains(key)) throw VehicleError("vehicle file: missing key '" + key + "'");
  }
  VehicleParams p;
  try {
    p.m = j.at("m").get<double>();
    p.g = j.at("g").get<double>();
    p.w_veh = j.at("w_veh").get<double>();
    p.rho = j.at("rho").get<double>();
    p.CdA = j.at("CdA").get<double>();
    p.ClA = j.at("ClA").get<double>();
    p.l_F = j.at("l_F").get<double>();
    p.l_R = j.at("l_R").get<double>();
    p.h_G = j.at("h_G").get<double>();
    p.l_GP = j.at("l_GP").get<double>();
    p.h_P = j.at("h_P").get<double>();
    const json& mu = j.at("mu_nom");
    if (!mu.is_object() || mu.size() != 2 || !mu.contains("x") || !mu.contains("y")) {
      throw VehicleError("vehicle file: 'mu_nom' must be {\"x\": [R, F], \"y\": [R, F]}");
    }
    p.mu_x = read_axles(mu, "x", kInf);
    p.mu_y = read_axles(mu, "y", kInf);
    p.Fz_nom = read_axles(j, "Fz_nom", kInf);
    p.gamma = read_axles(j, "gamma", -kInf);
    p.h_rc = read_axles(j, "h_rc", kInf);
    p.w_axle = read_axles(j, "w_axle", kInf);
    p.xi = j.at("xi").get<double>();
    p.C_alpha = read_axles(j, "C_alpha", -kInf);
    p.c_r = read_axles(j, "c_r", kInf);
    p.P_max = read_axles(j, "P_max", kInf);
    p.P_min = read_axles(j, "P_min", -kInf);
    p.T_max = read_axles(j, "T_max", kInf);
    p.T_min = read_axles(j, "T_min", -kInf);
    p.r_w = read_axles(j, "r_w", kInf);
  } catch (const json::exception& e) {
    throw VehicleError(std::string("vehicle file: ") + e.what());
  }
  p.validate();
  return p;
}

std::string vehicle_to_json_text(const VehicleParams& p) {
  json j = {{"m", p.m},
            {"g", p.g},
            {"w_veh", p.w_veh},
            {"rho", p.rho},
            {"CdA", p.CdA},
            {"ClA", p.ClA},
            {"l_F", p.l_F},
            {"l_R", p.l_R},
            {"h_G", p.h_G},
            {"l_GP", p.l_GP},
            {"h_P", p.h_P},
            {"mu_nom", {{"x", write_axles(p.mu_x)}, {"y", write_axles(p.mu_y)}}},
            {"Fz_nom", write_axles(p.Fz_nom)},
            {"gamma", write_axles(p.gamma)},
            {"h_rc", write_axles(p.h_rc)},
            {"w_axle", write_axles(p.w_axle)},
            {"xi", p.xi},
            {"C_alpha", write_axles(p.C_alpha)},
            {"c_r", write_axles(p.c_r)},
            {"P_max", write_axles(p.P_max)},
            {"P_min", write_axles(p.P_min)},
            {"T_max", write_axles(p.T_max)},
            {"T_min", write_axles(p.T_min)},
            {"r_w", write_axles(p.r_w)}};
  return j.dump(2);
}

VehicleParams load_vehicle(const std::filesystem::path& json_path) {
  std::ifstream in(json_path);
  if (!in) throw VehicleError("cannot open vehicle file " + json_path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return vehicle_from_json_text(ss.str());
}

void save_vehicle(const VehicleParams& params, const std::filesystem::path& json_path) {
  std::ofstream out(json_path);
  if (!out) throw VehicleError("cannot write vehicle file " + json_path.string());
  out << vehicle_to_json_text(params) << '\n';
}

double BalanceResiduals::max_abs() const {
  return std::max({std::abs(longitudinal), std::abs(lateral), std::abs(vertical),
                   std::abs(yaw), std::abs(pitch), std::abs(roll[0]), std::abs(roll[1])});
}

PerAxle<double> lateral_load_transfer(const VehicleParams& p, const PerAxle<double>& Fy) {
  const double total = Fy[kRear] + Fy[kFront];
  const double roll = p.h_G * total - p.h_rc[kRear] * Fy[kRear] - p.h_rc[kFront] * Fy[kFront];
  return {2.0 * p.h_rc[kRear] * Fy[kRear] / p.w_axle[kRear] +
              (1.0 - p.xi) * 2.0 * roll / p.w_axle[kRear],
          2.0 * p.h_rc[kFront] * Fy[kFront] / p.w_axle[kFront] +
              p.xi * 2.0 * roll / p.w_axle[kFront]};
}

BalanceResiduals residual_balances(const VehicleParams& p, const OperatingPoint& op,
                                   double dEkin_ds) {
  const double cphi = std::cos(op.phi), sphi = std::sin(op.phi);
  const double cth = std::cos(op.theta), sth = std::sin(op.theta);
  const double mg = p.m * p.g;
  const double drag = p.drag_factor() * op.E_kin;
  const double down = p.lift_factor() * op.E_kin;
  const double fx = op.Fx[kRear] + op.Fx[kFront];
  BalanceResiduals r;
  r.longitudinal = dEkin_ds - (fx - cphi * sth * mg - drag);
  r.lateral = op.Fy[kRear] + op.Fy[kFront] - cphi * op.Fc + sphi * mg;
  r.vertical = op.Fz[kRear] + op.Fz[kFront] - cphi * cth * mg - sphi * cth * op.Fc - down;
  r.yaw = p.l_F * op.Fy[kFront] - p.l_R * op.Fy[kRear];
  r.pitch = -p.l_F * op.Fz[kFront] + p.l_R * op.Fz[kRear] - p.h_G * fx - p.l_GP * down -
            (p.h_P - p.h_G) * drag;
  const auto transfer = lateral_load_transfer(p, op.Fy);
  r.roll = {op.dFz[kRear] - transfer[kRear], op.dFz[kFront] - transfer[kFront]};
  return r;
}

double effective_load_bound(const VehicleParams& p, Axle a, double Fz, double dFz) {
  return p.gamma[a] / (2.0 * p.Fz_nom[a]) * (Fz * Fz + dFz * dFz) + (1.0 - p.gamma[a]) * Fz;
}

PerAxle<double> friction_margin(const VehicleParams& p, const OperatingPoint& op) {
  PerAxle<double> margin{};
  for (int i = 0; i < 2; ++i) {
    const auto a = static_cast<Axle>(i);
    if (op.Fz[a] < 0.0) throw VehicleError("friction_margin: negative vertical load");
    const double bound = effective_load_bound(p, a, op.Fz[a], op.dFz[a]);
    margin[a] = bound - std::hypot(op.Fx[a] / p.mu_x[a], op.Fy[a] / p.mu_y[a]);
  }
  return margin;
}

bool cornering_explicit_feasible(const VehicleParams& p, Axle a, double Fx, double Fw,
                                 double Fy, double Fz) {
  if (!(Fz > 0.0)) throw VehicleError("cornering resistance needs F_z > 0");
  double rhs = Fw - p.c_r[a] * Fz;
  if (std::isfinite(p.C_alpha[a])) rhs += Fy * Fy / (p.C_alpha[a] * Fz);
  return Fx <= rhs;
}

bool cornering_cone_feasible(const VehicleParams& p, Axle a, double Fx, double Fw,
                             double Fy, double Fz) {
  if (!(Fz > 0.0)) throw VehicleError("cornering resistance needs F_z > 0");
  if (!std::isfinite(p.C_alpha[a])) return Fx <= Fw - p.c_r[a] * Fz;
  const double t = -Fx + Fw - (p.c_r[a] + p.C_alpha[a]) * Fz;
  const double u = Fx - Fw + (p.c_r[a] - p.C_alpha[a]) * Fz;
  return t >= std::hypot(2.0 * Fy, u);
}

WheelForceBudget wheel_force_budget(const VehicleParams& p, const OperatingPoint& op) {
  WheelForceBudget out;
  for (int i = 0; i < 2; ++i) {
    const auto a = static_cast<Axle>(i);
    const double Fz = op.Fz[a];
    if (!(Fz > 0.0)) throw VehicleError("wheel_force_budget: F_z must be positive");
    const double loss = std::isfinite(p.C_alpha[a])
                            ? op.Fy[a] * op.Fy[a] / (-p.C_alpha[a] * Fz)
                            : 0.0;
    out.cornering_loss[a] = loss;
    out.Fx_max[a] = op.Fw[a] - p.c_r[a] * Fz - loss;
    if (std::isfinite(p.C_alpha[a])) {
      const double Fx = out.Fx_max[a];
      const double t = -Fx + op.Fw[a] - (p.c_r[a] + p.C_alpha[a]) * Fz;
      const double u = Fx - op.Fw[a] + (p.c_r[a] - p.C_alpha[a]) * Fz;
      const double gap = t - std::hypot(2.0 * op.Fy[a], u);
      out.cone_form_agrees[a] = std::abs(gap) <= 1e-9 * std::max(1.0, std::abs(t));
    }
  }
  return out;
}

ActuatorBounds actuator_limits(const VehicleParams& p, double lethargy) {
  ActuatorBounds b;
  for (int a = 0; a < 2; ++a) {
    const double power_up = p.P_max[a] * lethargy;
    const double torque_up = p.T_max[a] / p.r_w[a];
    b.upper[a] = std::min(power_up, torque_up);
    b.power_binds_upper[a] = power_up < torque_up;
    const double power_lo = std::isfinite(p.P_min[a]) ? p.P_min[a] * lethargy : -kInf;
    const double torque_lo = p.T_min[a] / p.r_w[a];
    b.lower[a] = std::max(power_lo, torque_lo);
  }
  return b;
}

bool actuator_feasible(const VehicleParams& p, const OperatingPoint& op, double tol) {
  const auto b = actuator_limits(p, op.lethargy);
  for (int a = 0; a < 2; ++a) {
    if (op.Fw[a] > b.upper[a] + tol || op.Fw[a] < b.lower[a] - tol) return false;
  }
  return true;
}

SteadyLoads steady_loads(const VehicleParams& p, double E_kin, double Fx_total, double Fc,
                         double theta, double phi) {
  const double cphi = std::cos(phi), sphi = std::sin(phi);
  const double cth = std::cos(theta);
  const double mg = p.m * p.g;
  const double l = p.wheelbase();
  SteadyLoads s;
  const double fy = cphi * Fc - sphi * mg;
  s.Fy = {p.l_F / l * fy, p.l_R / l * fy};
  const double sum = cphi * cth * mg + sphi * cth * Fc + p.lift_factor() * E_kin;
  const double moment = p.h_G * Fx_total + p.l_GP * p.lift_factor() * E_kin +
                        (p.h_P - p.h_G) * p.drag_factor() * E_kin;
  s.Fz = {(p.l_F * sum + moment) / l, (p.l_R * sum - moment) / l};
  s.dFz = lateral_load_transfer(p, s.Fy);
  return s;
}

FxInterval axle_force_range(const VehicleParams& p, double v, double a_y, double Fx_total) {
  FxInterval out;
  const double E = 0.5 * p.m * v * v;
  const auto loads = steady_loads(p, E, Fx_total, p.m * a_y);
  const double lethargy = 1.0 / v;
  const auto act = actuator_limits(p, lethargy);
  for (int i = 0; i < 2; ++i) {
    const auto a = static_cast<Axle>(i);
    const double Fz = loads.Fz[a];
    if (!(Fz > 0.0)) return out;
    const double bound = effective_load_bound(p, a, Fz, loads.dFz[a]);
    const double lat = std::abs(loads.Fy[a]) / p.mu_y[a];
    if (!(bound >= lat)) return out;
    const double ellipse = p.mu_x[a] * std::sqrt(bound * bound - lat * lat);
    if (act.lower[a] > act.upper[a]) return out;
    const double loss = std::isfinite(p.C_alpha[a])
                            ? loads.Fy[a] * loads.Fy[a] / (-p.C_alpha[a] * Fz)
                            : 0.0;
    const double hi = std::min(ellipse, act.upper[a] - p.c_r[a] * Fz - loss);
    const double lo = -ellipse;
    if (hi < lo) return out;
    out.lo += lo;
    out.hi += hi;
  }
  out.feasible = true;
  return out;
}

bool steady_state_feasible(const VehicleParams& p, double v, double a_x, double a_y) {
  const double E = 0.5 * p.m * v * v;
  const double Fx = p.m * a_x + p.drag_factor() * E;
  const auto range = axle_force_range(p, v, a_y, Fx);
  return range.feasible && Fx >= range.lo && Fx <= range.hi;
}

std::optional<double> max_longitudinal_accel(const VehicleParams& p, double v, double a_y) {
  const double A = accel_scale(p, v);
  return upper_end(-A, A, [&](double ax) { return steady_state_feasible(p, v, ax, a_y); });
}

std::optional<double> min_longitudinal_accel(const VehicleParams& p, double v, double a_y) {
  const double A = accel_scale(p, v);
  auto r = upper_end(-A, A, [&](double nax) { return steady_state_feasible(p, v, -nax, a_y); });
  if (!r) return std::nullopt;
  return -*r;
}

std::optional<double> max_lateral_accel(const VehicleParams& p, double v, double a_x) {
  const double A = accel_scale(p, v);
  return upper_end(0.0, A, [&](double ay) { return steady_state_feasible(p, v, a_x, ay); });
}

double steady_cornering_speed(const VehicleParams& p, double curvature, double v_cap) {
  const double k = std::abs(curvature);
  auto ok = [&](double v) { return steady_state_feasible(p, v, 0.0, v * v * k); };
  const double v_min = 0.5;
  if (!ok(v_min)) return 0.0;
  constexpr int kScan = 300;
  double good = v_min;
  for (int i = 1; i <= kScan; ++i) {
    const double v = v_min + (v_cap - v_min) * static_cast<double>(i) / kScan;
    if (!ok(v)) return bisect(good, v, ok);
    good = v;
  }
  return v_cap;
}

namespace {

GgvSlice ggv_slice(const VehicleParams& p, double v, int lateral_samples) {
  GgvSlice slice;
  slice.v = v;
  if (!(v > 0.0)) return slice;
  const double A = accel_scale(p, v);
  auto any_ax = [&](double ay) { return max_longitudinal_accel(p, v, ay).has_value(); };
  const auto ay_max = upper_end(0.0, A, any_ax);
  if (!ay_max) return slice;
  slice.feasible = true;
  slice.a_y_max = *ay_max;
  const int n = std::max(lateral_samples, 3);
  std::vector<double> ays(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    // Cosine spacing clusters samples where the boundary turns.
    ays[static_cast<std::size_t>(i)] =
        -*ay_max * std::cos(M_PI * static_cast<double>(i) / (n - 1));
  }
  ays.front() = -*ay_max;
  ays.back() = *ay_max;
  std::vector<GgvPoint> upper, lower;
  for (double ay : ays) {
    const auto hi = max_longitudinal_accel(p, v, ay);
    const auto lo = min_longitudinal_accel(p, v, ay);
    if (!hi || !lo) continue;
    upper.push_back({v, *hi, ay});
    lower.push_back({v, *lo, ay});
  }
  // Lower branch left to right, upper branch right to left.
  slice.boundary = lower;
  for (auto it = upper.rbegin(); it != upper.rend(); ++it) slice.boundary.push_back(*it);
  if (!slice.boundary.empty()) slice.boundary.push_back(slice.boundary.front());
  return slice;
}

}  // namespace

std::vector<GgvSlice> ggv_envelope(const VehicleParams& p, const std::vector<double>& speeds,
                                   int lateral_samples, Exec exec) {
  for (double v : speeds) {
    if (!(v > 0.0)) throw VehicleError("ggv_envelope: speeds must be positive");
  }
  std::vector<GgvSlice> out(speeds.size());
  const auto count = static_cast<std::ptrdiff_t>(speeds.size());
  const bool par = exec == Exec::parallel;
#pragma omp parallel for schedule(dynamic) if (par)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    out[static_cast<std::size_t>(i)] =
        ggv_slice(p, speeds[static_cast<std::size_t>(i)], lateral_samples);
  }
  (void)par;
  return out;
}

}  // namespace apexcvx
