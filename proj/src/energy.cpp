#include "apexcvx/energy.hpp"

#include "log.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <future>
#include <sstream>
#include <stdexcept>

namespace apexcvx {

using nlohmann::json;

namespace {

constexpr double kTol = 1e-9;

// Point spacing on the reference line between point j and its successor.
double point_spacing(const TrajectoryIterate& it, std::size_t j) {
  if (j + 1 < it.size()) return it.s_ref[j + 1] - it.s_ref[j];
  return it.length - it.s_ref[j];  // closing segment of a closed track
}

}  // namespace

void PowertrainConfig::validate(const VehicleParams& p) const {
  auto positive = [](double v) { return std::isfinite(v) && v >= 0.0; };
  if (!positive(engine_power) || !positive(engine_torque) || !positive(motor_boost_power) ||
      !positive(motor_regen_power) || !positive(motor_torque)) {
    throw std::invalid_argument("powertrain limits must be finite and nonnegative");
  }
  if (!(capacity > 0.0)) throw std::invalid_argument("battery capacity must be positive");
  if (!(eta_charge > 0.0 && eta_charge <= 1.0) || !(eta_discharge > 0.0 && eta_discharge <= 1.0)) {
    throw std::invalid_argument("efficiencies must lie in (0, 1]");
  }
  const Axle m = motor_axle;
  PerAxle<double> power{engine_power, 0.0};
  PerAxle<double> torque{engine_torque, 0.0};
  power[m] += motor_boost_power;
  torque[m] += motor_torque;
  for (int a = 0; a < 2; ++a) {
    if (power[a] > p.P_max[a] * (1.0 + kTol) + kTol || torque[a] > p.T_max[a] * (1.0 + kTol) + kTol) {
      throw std::invalid_argument("powertrain components exceed the " +
                                  std::string(a == kRear ? "rear" : "front") + " axle limits");
    }
  }
  if (motor_torque > -p.T_min[m] * (1.0 + kTol)) {
    throw std::invalid_argument("motor regeneration exceeds the axle braking limit");
  }
}

PowertrainConfig powertrain_from_json_text(const std::string& text) {
  PowertrainConfig c;
  try {
    const json j = json::parse(text);
    const std::string axle = j.value("motor_axle", std::string("rear"));
    if (axle == "rear") {
      c.motor_axle = kRear;
    } else if (axle == "front") {
      c.motor_axle = kFront;
    } else {
      throw std::invalid_argument("motor_axle must be 'rear' or 'front'");
    }
    c.engine_power = j.value("engine_power", c.engine_power);
    c.engine_torque = j.value("engine_torque", c.engine_torque);
    c.motor_boost_power = j.value("motor_boost_power", c.motor_boost_power);
    c.motor_regen_power = j.value("motor_regen_power", c.motor_regen_power);
    c.motor_torque = j.value("motor_torque", c.motor_torque);
    c.capacity = j.value("capacity", c.capacity);
    c.eta_charge = j.value("eta_charge", c.eta_charge);
    c.eta_discharge = j.value("eta_discharge", c.eta_discharge);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("powertrain json: ") + e.what());
  }
  return c;
}

std::string powertrain_to_json_text(const PowertrainConfig& c) {
  const json j = {{"motor_axle", c.motor_axle == kRear ? "rear" : "front"},
                  {"engine_power", c.engine_power},
                  {"engine_torque", c.engine_torque},
                  {"motor_boost_power", c.motor_boost_power},
                  {"motor_regen_power", c.motor_regen_power},
                  {"motor_torque", c.motor_torque},
                  {"capacity", c.capacity},
                  {"eta_charge", c.eta_charge},
                  {"eta_discharge", c.eta_discharge}};
  return j.dump(2);
}

PowertrainConfig load_powertrain(const std::filesystem::path& json_path) {
  std::ifstream in(json_path);
  if (!in) throw std::invalid_argument("cannot open powertrain file " + json_path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return powertrain_from_json_text(ss.str());
}

std::string to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::drain: return "drain";
    case ScenarioKind::fill: return "fill";
    case ScenarioKind::sustain: return "sustain";
  }
  return "unknown";
}

ScenarioKind parse_scenario(const std::string& name) {
  if (name == "drain") return ScenarioKind::drain;
  if (name == "fill") return ScenarioKind::fill;
  if (name == "sustain") return ScenarioKind::sustain;
  throw std::invalid_argument("unknown scenario '" + name + "'");
}

void add_energy_constraints(Subproblem& sub, const TrajectoryIterate& prev,
                            const VehicleParams& p, const PowertrainConfig& c,
                            const EnergyScenario& scenario) {
  const Layout& L = sub.layout;
  if (!L.energy) throw std::invalid_argument("add_energy_constraints: layout has no energy block");
  ProgramBuilder& B = sub.builder;
  const double F0 = sub.scales.force, E0 = sub.scales.energy, V0 = sub.scales.speed;
  const auto P = static_cast<std::size_t>(L.points);
  const Axle m = c.motor_axle;
  const bool split = c.eta_charge != 1.0 || c.eta_discharge != 1.0;

  auto X = [&](std::size_t i, int f) { return LinExpr::var(L.var(static_cast<int>(i), f)); };
  auto Y = [&](std::size_t i, int f) {
    return LinExpr::var(L.energy_var(static_cast<int>(i), f));
  };

  // Battery power draw per point, in scaled force units.
  std::vector<LinExpr> draw(P);
  for (std::size_t i = 0; i < P; ++i) {
    const int ii = static_cast<int>(i);
    LinExpr rear = X(i, kFwR) - Y(i, kEng) - Y(i, kBrkR);
    LinExpr front = X(i, kFwF) - Y(i, kBrkF);
    (m == kRear ? rear : front) -= Y(i, kMot);
    B.add_equality(rear, "split_rear");
    B.add_equality(front, "split_front");

    B.add_bounds(L.energy_var(ii, kEng), 0.0, c.engine_torque / (p.r_w[kRear] * F0), "engine_torque");
    B.add_nonneg((c.engine_power / (V0 * F0)) * X(i, kLethargy) - Y(i, kEng), "engine_power");

    const double t_mot = c.motor_torque / (p.r_w[m] * F0);
    B.add_bounds(L.energy_var(ii, kMot), -t_mot, t_mot, "motor_torque");
    B.add_nonneg((c.motor_boost_power / (V0 * F0)) * X(i, kLethargy) - Y(i, kMot), "motor_boost");
    B.add_nonneg(Y(i, kMot) + (c.motor_regen_power / (V0 * F0)) * X(i, kLethargy), "motor_regen");

    for (int a = 0; a < 2; ++a) {
      const double lo = p.T_min[a] / (p.r_w[a] * F0);
      B.add_bounds(L.energy_var(ii, a == kRear ? kBrkR : kBrkF), lo, 0.0, "brake");
    }

    // Regeneration only where the previous iterate brakes, and never more
    // than the total braking force.
    const bool braking = prev.Fw[kRear][i] + prev.Fw[kFront][i] < 0.0;
    if (braking) {
      B.add_nonneg(Y(i, kMot) - X(i, kFwR) - X(i, kFwF), "regen_demand");
    } else {
      B.add_nonneg(Y(i, kMot), "regen_demand");
    }

    if (split) {
      const int boost = B.add_variable("boost");
      const int regen = B.add_variable("regen");
      B.add_bounds(boost, 0.0, kInf);
      B.add_bounds(regen, 0.0, kInf);
      B.add_equality(Y(i, kMot) - LinExpr::var(boost) + LinExpr::var(regen), "motor_split");
      draw[i] = LinExpr::var(boost, 1.0 / c.eta_discharge) - LinExpr::var(regen, c.eta_charge);
    } else {
      draw[i] = Y(i, kMot);
    }
  }

  // Battery chain on the points, trapezoid rule with the previous ds/ds_ref.
  const double cap = c.capacity / E0;
  for (int j = 0; j < L.battery_states; ++j) B.add_bounds(L.battery_var(j), 0.0, cap, "battery");
  const int transitions = L.battery_states - 1;
  for (int j = 0; j < transitions; ++j) {
    const auto a = static_cast<std::size_t>(j);
    const auto b = static_cast<std::size_t>(L.wrap(j + 1));
    const double ds = point_spacing(prev, a);
    const double k = 0.5 * ds * F0 / E0;
    LinExpr row = LinExpr::var(L.battery_var(j + 1)) - LinExpr::var(L.battery_var(j));
    row += (k * prev.sigma[a]) * draw[a];
    row += (k * prev.sigma[b]) * draw[b];
    B.add_equality(row, "battery");
  }

  const int first = L.battery_var(0), last = L.battery_var(L.battery_states - 1);
  switch (scenario.kind) {
    case ScenarioKind::drain:
      B.add_equality(LinExpr::var(first) - LinExpr(cap), "scenario");
      break;
    case ScenarioKind::fill:
      B.add_equality(LinExpr::var(first), "scenario");
      B.add_nonneg(LinExpr::var(last) - LinExpr(cap), "scenario");
      break;
    case ScenarioKind::sustain:
      B.add_nonneg(LinExpr::var(last) - LinExpr::var(first), "scenario");
      break;
  }
}

SolveReport solve_energy(const TrackRibbon& track, const VehicleParams& params,
                         const SCPConfig& config, const PowertrainConfig& powertrain,
                         const EnergyScenario& scenario, const std::optional<PathState>& fixed_line) {
  powertrain.validate(params);
  auto ext = [&](Subproblem& sub, const TrajectoryIterate& prev) {
    add_energy_constraints(sub, prev, params, powertrain, scenario);
  };
  SolveReport r = run_scp(track, params, config, fixed_line, true, ext);
  r.mode = std::string(fixed_line ? "fixed-line" : "min-time") + "/" + to_string(scenario.kind);
  if (r.status == SCPStatus::solver_failure) {
    r.message = to_string(scenario.kind) + " scenario: " + r.message;
  }
  return r;
}

std::vector<double> battery_trace(const TrajectoryIterate& it, const PowertrainConfig& c) {
  if (it.battery.empty() || it.F_mot.size() != it.size()) {
    throw std::invalid_argument("battery_trace: iterate has no powertrain channels");
  }
  auto draw = [&](std::size_t i) {
    const double f = it.F_mot[i];
    return f >= 0.0 ? f / c.eta_discharge : f * c.eta_charge;
  };
  std::vector<double> b(it.battery.size());
  b[0] = it.battery[0];
  const std::size_t P = it.size();
  for (std::size_t j = 0; j + 1 < b.size(); ++j) {
    const std::size_t k = (j + 1) % P;
    const double ds = point_spacing(it, j);
    b[j + 1] = b[j] - 0.5 * ds * (draw(j) * it.sigma[j] + draw(k) * it.sigma[k]);
  }
  return b;
}

const ScenarioRun& ScenarioComparison::find(ScenarioKind kind, bool fixed) const {
  for (const auto& r : runs) {
    if (r.kind == kind && r.fixed == fixed) return r;
  }
  throw std::out_of_range("scenario run not found");
}

bool ScenarioComparison::ok() const {
  for (const auto& r : runs) {
    if (r.report.status != SCPStatus::converged) return false;
  }
  return !runs.empty();
}

ScenarioComparison run_scenarios(const TrackRibbon& track, const VehicleParams& params,
                                 const PowertrainConfig& powertrain, const SCPConfig& config,
                                 const std::vector<ScenarioKind>& kinds, bool concurrent) {
  powertrain.validate(params);
  ScenarioComparison out;
  out.base = solve_min_lap_time(track, params, config);
  if (out.base.status == SCPStatus::solver_failure) {
    throw std::runtime_error("scenario warm start failed: " + out.base.message);
  }
  // The base solve already resampled; keep its grid for every run.
  SCPConfig cfg = config;
  cfg.samples = 0;
  cfg.warm_start = out.base.final_iterate;
  const TrackRibbon& grid = out.base.track;

  ScenarioRun drain;
  drain.kind = ScenarioKind::drain;
  drain.report = solve_energy(grid, params, cfg, powertrain, {ScenarioKind::drain});
  if (drain.report.status == SCPStatus::solver_failure) {
    throw std::runtime_error(drain.report.message);
  }
  const PathState line = drain.report.final_iterate.path;
  const double t_ref = drain.report.t_lap();
  cfg.warm_start = drain.report.final_iterate;

  struct Job {
    ScenarioKind kind;
    bool fixed;
  };
  std::vector<Job> jobs;
  for (ScenarioKind k : kinds) {
    if (k != ScenarioKind::drain) jobs.push_back({k, false});
  }
  for (ScenarioKind k : kinds) jobs.push_back({k, true});

  auto run = [&](const Job& job) {
    ScenarioRun r;
    r.kind = job.kind;
    r.fixed = job.fixed;
    r.report = solve_energy(grid, params, cfg, powertrain, {job.kind},
                            job.fixed ? std::optional<PathState>(line) : std::nullopt);
    return r;
  };
  std::vector<ScenarioRun> done(jobs.size());
  if (concurrent) {
    std::vector<std::future<ScenarioRun>> futures;
    for (const Job& j : jobs) futures.push_back(std::async(std::launch::async, run, j));
    for (std::size_t i = 0; i < jobs.size(); ++i) done[i] = futures[i].get();
  } else {
    for (std::size_t i = 0; i < jobs.size(); ++i) done[i] = run(jobs[i]);
  }

  out.runs.push_back(std::move(drain));
  for (auto& r : done) out.runs.push_back(std::move(r));
  // Order: free runs then fixed runs, each in `kinds` order.
  std::vector<ScenarioRun> ordered;
  for (bool fixed : {false, true}) {
    for (ScenarioKind k : kinds) {
      for (auto& r : out.runs) {
        if (r.kind == k && r.fixed == fixed) ordered.push_back(std::move(r));
      }
    }
  }
  out.runs = std::move(ordered);
  for (auto& r : out.runs) {
    r.delta = r.report.t_lap() - t_ref;
    detail::log().info("scenario {} {}: t_lap {:.4f} s ({:+.4f} s), {}", to_string(r.kind),
                       r.fixed ? "fixed" : "free", r.report.t_lap(), r.delta,
                       to_string(r.report.status));
  }
  return out;
}

}  // namespace apexcvx
