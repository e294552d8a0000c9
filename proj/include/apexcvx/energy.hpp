#pragma once

#include "apexcvx/scp.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace apexcvx {

// Hybrid powertrain. F_w of each axle is split into components:
//   rear:  F_w,R = F_eng + F_mot [motor on rear] + F_brk,R
//   front: F_w,F = F_mot [motor on front] + F_brk,F
// The engine only drives, brakes only retard, and the motor boosts from or
// regenerates into a battery of capacity `capacity`.
struct PowertrainConfig {
  Axle motor_axle = kRear;
  double engine_power = 600e3;        // [W]
  double engine_torque = 3000.0;      // at the wheel [N m]
  double motor_boost_power = 120e3;   // [W]
  double motor_regen_power = 120e3;   // [W]
  double motor_torque = 1000.0;       // at the wheel, both directions [N m]
  double capacity = 250e3;            // [J]
  double eta_charge = 1.0;
  double eta_discharge = 1.0;

  // Throws std::invalid_argument when a component exceeds its axle limits.
  void validate(const VehicleParams& params) const;
};

PowertrainConfig load_powertrain(const std::filesystem::path& json_path);
PowertrainConfig powertrain_from_json_text(const std::string& text);
std::string powertrain_to_json_text(const PowertrainConfig& config);

enum class ScenarioKind : std::uint8_t { drain, fill, sustain };
std::string to_string(ScenarioKind kind);
ScenarioKind parse_scenario(const std::string& name);

// drain:   E_b(0) = capacity, E_b(end) >= 0
// fill:    E_b(0) = 0,        E_b(end) >= capacity
// sustain: E_b(end) >= E_b(0)
struct EnergyScenario {
  ScenarioKind kind = ScenarioKind::drain;
};

// Appends the component split, component limits, the battery chain and the
// scenario boundary conditions to a subproblem built with the energy block.
// The battery chain integrates -F_mot ds with the previous iterate's
// ds/ds_ref, so it stays affine. The motor may only regenerate at points
// where the previous iterate was braking, and then by no more than the
// total braking force.
void add_energy_constraints(Subproblem& sub, const TrajectoryIterate& prev,
                            const VehicleParams& params, const PowertrainConfig& config,
                            const EnergyScenario& scenario);

// Free (or fixed-line) minimum-time SCP with the powertrain block.
SolveReport solve_energy(const TrackRibbon& track, const VehicleParams& params,
                         const SCPConfig& config, const PowertrainConfig& powertrain,
                         const EnergyScenario& scenario,
                         const std::optional<PathState>& fixed_line = std::nullopt);

// Battery chain recomputed from the solved motor force and the solved
// ds/ds_ref, starting from the solved initial state.
std::vector<double> battery_trace(const TrajectoryIterate& it, const PowertrainConfig& config);

struct ScenarioRun {
  ScenarioKind kind = ScenarioKind::drain;
  bool fixed = false;
  SolveReport report;
  double delta = 0.0;  // lap time minus the drain/free lap time [s]
};

struct ScenarioComparison {
  std::vector<ScenarioRun> runs;  // drain, fill, sustain; free then fixed
  SolveReport base;               // warm start without the powertrain block

  const ScenarioRun& find(ScenarioKind kind, bool fixed) const;
  bool ok() const;
};

// Six solves: the drain/free case first, whose line then pins the three
// fixed cases. The remaining five run concurrently when `concurrent`.
ScenarioComparison run_scenarios(const TrackRibbon& track, const VehicleParams& params,
                                 const PowertrainConfig& powertrain, const SCPConfig& config,
                                 const std::vector<ScenarioKind>& kinds = {ScenarioKind::drain,
                                                                           ScenarioKind::fill,
                                                                           ScenarioKind::sustain},
                                 bool concurrent = true);

}  // namespace apexcvx
