#pragma once

#include "apexcvx/baseline.hpp"
#include "apexcvx/energy.hpp"
#include "apexcvx/scp.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace apexcvx {

// Column-oriented table of per-sample channels. Text columns (regime tags)
// carry strings instead of numbers.
struct Column {
  std::string name;
  std::string unit;
  std::string description;
  std::vector<double> values;
  std::vector<std::string> text;

  bool is_text() const { return !text.empty(); }
  std::size_t size() const { return is_text() ? text.size() : values.size(); }
};

struct ChannelTable {
  std::vector<Column> columns;

  void add(std::string name, std::string unit, std::string description, std::vector<double> v);
  void add_text(std::string name, std::string description, std::vector<std::string> v);
  const Column* find(const std::string& name) const;
  const Column& at(const std::string& name) const;
  std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
};

// Per-point channels of an SCP solution: reference and travelled distance,
// position, offset, speed (m/s and km/h), curvature, accelerations, axle
// forces, relaxation gaps and powertrain channels when present.
ChannelTable solution_channels(const SolveReport& report, const VehicleParams& params);

// Channels of a fixed-line apex profile on the distinct track rows.
ChannelTable profile_channels(const TrackRibbon& track, const RibbonDerivatives& derivs,
                              const PathState& path, const SpeedProfile& profile);

// Fixed-precision CSV; identical tables give identical bytes.
void write_csv(const ChannelTable& table, const std::filesystem::path& path);
ChannelTable read_csv(const std::filesystem::path& path);

// iteration, exact and linearised lap time, timings, solver status.
ChannelTable convergence_table(const SolveReport& report);

// Scalars, per-iteration history and the final nonlinear residuals.
std::string report_json(const SolveReport& report, const VehicleParams& params);
std::string scenario_json(const ScenarioComparison& cmp);
ChannelTable scenario_table(const ScenarioComparison& cmp);

// Column name, unit and description of each listed table, keyed by file.
std::string manifest_json(const std::vector<std::pair<std::string, const ChannelTable*>>& files);

// Cumulative time along a channel table with distance `s` and speed `v`.
std::vector<double> elapsed_time(const ChannelTable& table);

// Overlay of two runs on the same track: speed and elapsed-time deltas on
// the shared s_ref base (second minus first).
ChannelTable compare_channels(const ChannelTable& a, const ChannelTable& b);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace apexcvx
