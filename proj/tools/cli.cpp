#include "cli.hpp"

#include "apexcvx/baseline.hpp"
#include "apexcvx/energy.hpp"
#include "apexcvx/logging.hpp"
#include "apexcvx/report.hpp"
#include "apexcvx/scp.hpp"
#include "apexcvx/svg_plot.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <stdexcept>

namespace apexcvx::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Failure : std::runtime_error {
  int code;
  std::string kind;
  Failure(int c, std::string k, const std::string& msg)
      : std::runtime_error(msg), code(c), kind(std::move(k)) {}
};

Failure config_error(const std::string& msg) { return {kConfigError, "config", msg}; }

const std::vector<std::string> kModes = {"min-time", "fixed-line", "min-curvature",
                                         "apex",     "ggv",        "energy"};

TrackRibbon load_track_arg(const std::string& arg, unsigned seed) {
  if (arg.empty()) throw config_error("--track is required");
  const std::string prefix = "fixture:";
  if (arg.rfind(prefix, 0) == 0) {
    TestTrackParams tp;
    tp.kind = parse_track_kind(arg.substr(prefix.size()));
    tp.samples = 2000;
    tp.seed = seed;
    TrackRibbon t = make_test_track(tp);
    t.name = arg.substr(prefix.size());
    return t;
  }
  if (!fs::exists(arg)) throw config_error("track file not found: " + arg);
  return load_track(arg);
}

VehicleParams load_vehicle_arg(const std::string& path) {
  if (path.empty()) return {};
  if (!fs::exists(path)) throw config_error("vehicle file not found: " + path);
  return load_vehicle(path);
}

PowertrainConfig load_powertrain_arg(const std::string& path) {
  if (path.empty()) return {};
  if (!fs::exists(path)) throw config_error("powertrain file not found: " + path);
  return load_powertrain(path);
}

// Offset chain of a previous run resampled onto the collocation points of
// `grid`. Derivative columns are used when present.
PathState line_from_channels(const ChannelTable& table, const TrackRibbon& grid) {
  const auto& s = table.at("s_ref").values;
  if (s.size() < 2) throw config_error("fixed line has too few rows");
  if (std::abs(grid.length() / s.back() - 1.0) > 1e-3) {
    throw config_error("fixed line belongs to a different track");
  }
  auto resample = [&](const std::vector<double>& f) {
    std::vector<double> out(grid.unique_size());
    for (std::size_t i = 0; i < out.size(); ++i) {
      const double q = grid.s_ref[i];
      const auto hi = std::upper_bound(s.begin(), s.end(), q);
      const auto j = std::clamp<std::size_t>(static_cast<std::size_t>(hi - s.begin()), 1, s.size() - 1);
      const double w = std::clamp((q - s[j - 1]) / (s[j] - s[j - 1]), 0.0, 1.0);
      out[i] = (1.0 - w) * f[j - 1] + w * f[j];
    }
    return out;
  };
  const auto n = resample(table.at("n").values);
  const Column* dn = table.find("dn");
  const Column* ddn = table.find("ddn");
  if (!dn || !ddn) return line_on_points(grid, n);
  return {n, resample(dn->values), resample(ddn->values)};
}

int exit_code(SCPStatus status) {
  switch (status) {
    case SCPStatus::converged: return kOk;
    case SCPStatus::max_iters: return kNotConverged;
    case SCPStatus::solver_failure: return kSolverFailure;
  }
  return kSolverFailure;
}

Plot line_plot(const TrackRibbon& track, const std::vector<const ChannelTable*>& runs,
               const std::vector<std::string>& labels) {
  Plot p;
  p.title = "Racing line";
  p.xlabel = "x [m]";
  p.ylabel = "y [m]";
  p.equal_aspect = true;
  p.width = 800;
  p.height = 800;
  Series left{"", {}, {}, "#999999", false, 1.0}, right = left;
  for (std::size_t i = 0; i < track.size(); ++i) {
    const Vec3 l = track.P[i] + track.n_max[i] * track.N[i];
    const Vec3 r = track.P[i] + track.n_min[i] * track.N[i];
    left.x.push_back(l.x());
    left.y.push_back(l.y());
    right.x.push_back(r.x());
    right.y.push_back(r.y());
  }
  p.series = {left, right};
  for (std::size_t k = 0; k < runs.size(); ++k) {
    p.series.push_back({labels[k], runs[k]->at("x").values, runs[k]->at("y").values, palette(k), false, 1.5});
  }
  return p;
}

Plot speed_plot(const std::vector<const ChannelTable*>& runs, const std::vector<std::string>& labels) {
  Plot p;
  p.title = "Speed";
  p.xlabel = "distance along reference [m]";
  p.ylabel = "v [km/h]";
  for (std::size_t k = 0; k < runs.size(); ++k) {
    p.series.push_back({labels[k], runs[k]->at("s_ref").values, runs[k]->at("v_kmh").values, palette(k), false, 1.5});
  }
  return p;
}

void write_ggv_files(const VehicleParams& params, const std::vector<double>& speeds, const fs::path& dir) {
  const auto env = ggv_envelope(params, speeds);
  std::vector<double> v, ay, ax;
  Plot plot;
  plot.title = "g-g-v envelope";
  plot.xlabel = "a_y [m/s^2]";
  plot.ylabel = "a_x [m/s^2]";
  plot.equal_aspect = true;
  std::size_t k = 0;
  for (const auto& slice : env) {
    if (!slice.feasible) continue;
    Series s{fmt::format("{:g} m/s", slice.v), {}, {}, palette(k++), false, 1.2};
    for (const auto& q : slice.boundary) {
      v.push_back(q.v);
      ay.push_back(q.a_y);
      ax.push_back(q.a_x);
      s.x.push_back(q.a_y);
      s.y.push_back(q.a_x);
    }
    plot.series.push_back(std::move(s));
  }
  ChannelTable t;
  t.add("v", "m/s", "speed of the slice", v);
  t.add("a_y", "m/s^2", "lateral acceleration", ay);
  t.add("a_x", "m/s^2", "longitudinal acceleration", ax);
  write_csv(t, dir / "ggv.csv");
  write_svg(plot, dir / "ggv.svg");
}

void emit_solution(const SolveReport& rep, const VehicleParams& params, const fs::path& dir,
                   const std::string& stem = "") {
  const ChannelTable ch = solution_channels(rep, params);
  const ChannelTable conv = convergence_table(rep);
  const std::string pre = stem.empty() ? "" : stem + "_";
  write_text(dir / (pre + "report.json"), report_json(rep, params));
  write_csv(ch, dir / (pre + "channels.csv"));
  write_csv(conv, dir / (pre + "convergence.csv"));
  write_text(dir / (pre + "manifest.json"),
             manifest_json({{pre + "channels.csv", &ch}, {pre + "convergence.csv", &conv}}));

  write_svg(line_plot(rep.track, {&ch}, {rep.mode}), dir / (pre + "line.svg"));
  write_svg(speed_plot({&ch}, {rep.mode}), dir / (pre + "speed.svg"));
  Plot gg;
  gg.title = "Accelerations along the lap";
  gg.xlabel = "a_y [m/s^2]";
  gg.ylabel = "a_x [m/s^2]";
  gg.equal_aspect = true;
  gg.series.push_back({"", ch.at("a_y").values, ch.at("a_x").values, palette(0), true, 1.5});
  write_svg(gg, dir / (pre + "ggv.svg"));
  Plot cv;
  cv.title = "SCP convergence";
  cv.xlabel = "iteration";
  cv.ylabel = "lap time [s]";
  cv.series.push_back({"exact", conv.at("iteration").values, conv.at("t_lap").values, palette(0), false, 1.5});
  cv.series.push_back({"linearised", conv.at("iteration").values, conv.at("t_lap_linearized").values, palette(1), false, 1.5});
  write_svg(cv, dir / (pre + "convergence.svg"));
}

int finish_solve(const SolveReport& rep, std::ostream& out) {
  const int code = exit_code(rep.status);
  if (code == kSolverFailure) throw Failure(code, "solver", rep.message);
  if (code == kNotConverged) throw Failure(code, "not-converged", rep.message);
  out << fmt::format("{} {}: t_lap {:.4f} s after {} iterations\n", rep.mode, to_string(rep.status),
                     rep.t_lap(), rep.iterations());
  return code;
}

int cmd_solve(const RunConfig& cfg, std::ostream& out) {
  cfg.validate();
  fs::create_directories(cfg.out);
  const VehicleParams params = load_vehicle_arg(cfg.vehicle);
  if (cfg.mode == "ggv") {
    std::vector<double> speeds;
    for (double v = 10.0; v <= 90.0 + 1e-9; v += 10.0) speeds.push_back(v);
    write_ggv_files(params, speeds, cfg.out);
    out << "ggv written to " << cfg.out.string() << "\n";
    return kOk;
  }
  const TrackRibbon track = load_track_arg(cfg.track, cfg.seed);
  SCPConfig sc;
  sc.epsilon = cfg.epsilon;
  sc.max_iters = cfg.max_iters;
  sc.trust_radius = cfg.trust_radius;
  sc.samples = cfg.samples;
  sc.validate();

  if (cfg.mode == "min-time") {
    const SolveReport rep = solve_min_lap_time(track, params, sc);
    emit_solution(rep, params, cfg.out);
    return finish_solve(rep, out);
  }

  TrackRibbon grid = prepare_grid(track, cfg.samples);
  validate_track(grid, params.w_veh);
  const RibbonDerivatives derivs = differentiate_ribbon(grid);
  sc.samples = 0;
  std::optional<PathState> line;
  if (!cfg.fixed_line.empty()) {
    if (!fs::exists(cfg.fixed_line)) throw config_error("fixed line not found: " + cfg.fixed_line);
    line = line_from_channels(read_csv(cfg.fixed_line), grid);
  }

  if (cfg.mode == "fixed-line" || cfg.mode == "min-curvature") {
    if (cfg.mode == "min-curvature") line = min_curvature_line(grid, derivs, params.w_veh);
    SolveReport rep = solve_fixed_trajectory(grid, params, sc, *line);
    if (cfg.mode == "min-curvature") rep.mode = "min-curvature";
    emit_solution(rep, params, cfg.out);
    return finish_solve(rep, out);
  }

  if (cfg.mode == "apex") {
    const PathState path = line ? *line : PathState::zeros(grid.unique_size());
    const LineGeometry geo = line_geometry(grid, derivs, path);
    const SpeedProfile prof = apex_speed_profile(geo.kappa, geo.s, grid.closed, params);
    const ChannelTable ch = profile_channels(grid, derivs, path, prof);
    write_csv(ch, cfg.out / "channels.csv");
    write_text(cfg.out / "manifest.json", manifest_json({{"channels.csv", &ch}}));
    std::map<std::string, int> counts;
    for (Regime r : prof.regime) ++counts[to_string(r)];
    const auto flagged = std::count(prof.flagged.begin(), prof.flagged.end(), true);
    json j = {{"status", flagged ? "flagged" : "ok"},
              {"mode", "apex"},
              {"track", grid.name},
              {"t_lap", prof.lap_time},
              {"regimes", counts},
              {"flagged_samples", flagged}};
    write_text(cfg.out / "report.json", j.dump(2));
    write_svg(line_plot(grid, {&ch}, {"apex"}), cfg.out / "line.svg");
    write_svg(speed_plot({&ch}, {"apex"}), cfg.out / "speed.svg");
    out << fmt::format("apex: t_lap {:.4f} s\n", prof.lap_time);
    return kOk;
  }

  // energy
  const PowertrainConfig pt = load_powertrain_arg(cfg.powertrain);
  try {
    pt.validate(params);
  } catch (const std::invalid_argument& e) {
    throw config_error(e.what());
  }
  if (cfg.scenario != "all") {
    const SolveReport rep = solve_energy(grid, params, sc, pt, {parse_scenario(cfg.scenario)}, line);
    emit_solution(rep, params, cfg.out);
    return finish_solve(rep, out);
  }
  const ScenarioComparison cmp = run_scenarios(grid, params, pt, sc);
  const ChannelTable table = scenario_table(cmp);
  write_csv(table, cfg.out / "scenarios.csv");
  write_text(cfg.out / "report.json", scenario_json(cmp));
  Plot bat;
  bat.title = "Battery energy";
  bat.xlabel = "distance along reference [m]";
  bat.ylabel = "E_b [kJ]";
  std::vector<std::pair<std::string, const ChannelTable*>> manifest{{"scenarios.csv", &table}};
  std::vector<ChannelTable> chans;
  chans.reserve(cmp.runs.size());
  for (const auto& r : cmp.runs) {
    const std::string stem = to_string(r.kind) + "_" + (r.fixed ? "fixed" : "free");
    chans.push_back(solution_channels(r.report, params));
    write_csv(chans.back(), cfg.out / (stem + "_channels.csv"));
    std::vector<double> kj = chans.back().at("battery").values;
    for (double& e : kj) e *= 1e-3;
    bat.series.push_back({stem, chans.back().at("s_ref").values, kj, palette(bat.series.size()), false, 1.5});
  }
  if (!chans.empty()) manifest.emplace_back("<scenario>_<trajectory>_channels.csv", &chans.front());
  write_text(cfg.out / "manifest.json", manifest_json(manifest));
  write_svg(bat, cfg.out / "battery.svg");
  int code = kOk;
  for (const auto& r : cmp.runs) {
    out << fmt::format("{:8s} {:5s} t_lap {:.4f} s  delta {:+.4f} s  {}\n", to_string(r.kind),
                       r.fixed ? "fixed" : "free", r.report.t_lap(), r.delta, to_string(r.report.status));
    code = std::max(code, exit_code(r.report.status) == kSolverFailure ? 10 : exit_code(r.report.status));
  }
  if (code == 10) throw Failure(kSolverFailure, "solver", "a scenario run failed");
  if (code == kNotConverged) throw Failure(kNotConverged, "not-converged", "a scenario run did not converge");
  return kOk;
}

ChannelTable load_run(const std::string& arg) {
  fs::path p = arg;
  if (fs::is_directory(p)) p /= "channels.csv";
  if (!fs::exists(p)) throw config_error("run not found: " + arg);
  return read_csv(p);
}

int cmd_compare(const std::vector<std::string>& runs, std::vector<std::string> labels,
                const fs::path& dir, std::ostream& out) {
  if (runs.size() < 2) throw config_error("compare needs at least two runs");
  if (labels.empty()) {
    for (const auto& r : runs) labels.push_back(fs::path(r).filename().string());
  }
  if (labels.size() != runs.size()) throw config_error("one label per run is required");
  std::vector<ChannelTable> tables;
  for (const auto& r : runs) tables.push_back(load_run(r));
  fs::create_directories(dir);

  std::vector<const ChannelTable*> ptrs;
  for (const auto& t : tables) ptrs.push_back(&t);
  json summary = json::array();
  Plot dt;
  dt.title = "Time delta to " + labels[0];
  dt.xlabel = "distance along reference [m]";
  dt.ylabel = "delta t [s]";
  for (std::size_t k = 1; k < tables.size(); ++k) {
    ChannelTable c;
    try {
      c = compare_channels(tables[0], tables[k]);
    } catch (const std::invalid_argument& e) {
      throw config_error(e.what());
    }
    const std::string name = k == 1 ? "compare.csv" : fmt::format("compare_{}.csv", k);
    write_csv(c, dir / name);
    const auto& d = c.at("dt").values;
    const auto& dv = c.at("dv").values;
    const auto imax = static_cast<std::size_t>(std::max_element(dv.begin(), dv.end()) - dv.begin());
    summary.push_back({{"reference", labels[0]},
                       {"run", labels[k]},
                       {"file", name},
                       {"t_reference", c.at("t_a").values.back()},
                       {"t_run", c.at("t_b").values.back()},
                       {"final_dt", d.back()},
                       {"max_dv", dv[imax]},
                       {"max_dv_s_ref", c.at("s_ref").values[imax]}});
    dt.series.push_back({labels[k], c.at("s_ref").values, d, palette(k), false, 1.5});
    out << fmt::format("{} vs {}: final delta {:+.4f} s\n", labels[k], labels[0], d.back());
  }
  write_text(dir / "compare.json", summary.dump(2));
  write_svg(speed_plot(ptrs, labels), dir / "compare_speed.svg");
  write_svg(dt, dir / "compare_dt.svg");
  Plot lines;
  lines.title = "Racing lines";
  lines.xlabel = "x [m]";
  lines.ylabel = "y [m]";
  lines.equal_aspect = true;
  lines.width = lines.height = 800;
  for (std::size_t k = 0; k < tables.size(); ++k) {
    lines.series.push_back({labels[k], tables[k].at("x").values, tables[k].at("y").values, palette(k), false, 1.5});
  }
  write_svg(lines, dir / "compare_line.svg");
  return kOk;
}

void report_failure(const Failure& f, std::ostream& out, const fs::path& dir) {
  const json j = {{"error", f.kind}, {"message", f.what()}, {"exit_code", f.code}};
  out << j.dump() << "\n";
  if (dir.empty()) return;
  try {
    fs::create_directories(dir);
    write_text(dir / "error.json", j.dump(2));
  } catch (const std::exception&) {
  }
}

}  // namespace

void RunConfig::validate() const {
  if (samples < 16) throw config_error(fmt::format("samples must be at least 16 (got {})", samples));
  if (!(epsilon > 0.0)) throw config_error("epsilon must be positive");
  if (max_iters < 1) throw config_error("max-iters must be at least 1");
  if (std::find(kModes.begin(), kModes.end(), mode) == kModes.end()) {
    throw config_error("unknown mode '" + mode + "'");
  }
  if (trust_radius && !(*trust_radius > 0.0)) throw config_error("trust radius must be positive");
  if (mode == "fixed-line" && fixed_line.empty()) throw config_error("fixed-line mode needs --fixed-line");
  if (mode == "energy" && scenario != "all") {
    try {
      parse_scenario(scenario);
    } catch (const std::invalid_argument& e) {
      throw config_error(e.what());
    }
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  init_logging_from_env();
  CLI::App app{"Minimum-lap-time racing lines by sequential convex programming"};
  app.require_subcommand(1);

  RunConfig cfg;
  auto* solve = app.add_subcommand("solve", "optimise a lap and write artifacts");
  solve->add_option("--track", cfg.track, "track CSV, or fixture:<kind>");
  solve->add_option("--vehicle", cfg.vehicle, "vehicle JSON (built-in defaults when absent)");
  solve->add_option("--powertrain", cfg.powertrain, "powertrain JSON for energy mode");
  solve->add_option("--samples", cfg.samples, "reference samples (intervals)");
  solve->add_option("--epsilon", cfg.epsilon, "lap-time convergence threshold [s]");
  solve->add_option("--max-iters", cfg.max_iters, "SCP iteration limit");
  solve->add_option("--mode", cfg.mode, "min-time|fixed-line|min-curvature|apex|ggv|energy");
  solve->add_option("--scenario", cfg.scenario, "drain|fill|sustain|all");
  solve->add_option("--fixed-line", cfg.fixed_line, "channels.csv whose line is pinned");
  solve->add_option("--trust-radius", cfg.trust_radius, "trust region radius [m]");
  solve->add_option("--out", cfg.out, "output directory");
  solve->add_option("--seed", cfg.seed, "seed for generated fixtures");

  std::vector<std::string> runs, labels;
  fs::path cmp_out = "compare";
  auto* compare = app.add_subcommand("compare", "overlay runs on the same track");
  compare->add_option("runs", runs, "run directories or channels.csv files; the first is the reference")
      ->required();
  compare->add_option("--labels", labels, "one label per run")->delimiter(',');
  compare->add_option("--out", cmp_out, "output directory");

  TestTrackParams tp;
  std::string kind = "oval";
  fs::path track_out = "track.csv";
  auto* make = app.add_subcommand("make-track", "write a synthetic fixture track");
  make->add_option("--kind", kind, "straight|circle|oval|s-bend|corners");
  make->add_option("--samples", tp.samples, "intervals");
  make->add_option("--length", tp.length, "straight length [m]");
  make->add_option("--radius", tp.radius, "arc radius [m]");
  make->add_option("--mean-radius", tp.mean_radius, "base radius of corners [m]");
  make->add_option("--half-width", tp.half_width, "corridor half width [m]");
  make->add_option("--grade", tp.grade, "rise over run of straight");
  make->add_option("--bank", tp.bank_deg, "banking of circle [deg]");
  make->add_option("--arc", tp.arc_deg, "turn angle of each s-bend arc [deg]");
  make->add_option("--corners", tp.corners, "number of corners");
  make->add_option("--amplitude", tp.amplitude, "relative radius modulation of corners");
  make->add_option("--seed", tp.seed, "harmonic phases of corners");
  make->add_option("--out", track_out, "output CSV");

  std::string gg_vehicle;
  double v_min = 10.0, v_max = 90.0, v_step = 10.0;
  fs::path gg_out = "ggv";
  auto* ggv = app.add_subcommand("ggv", "write the g-g-v envelope");
  ggv->add_option("--vehicle", gg_vehicle, "vehicle JSON");
  ggv->add_option("--v-min", v_min, "lowest speed [m/s]");
  ggv->add_option("--v-max", v_max, "highest speed [m/s]");
  ggv->add_option("--v-step", v_step, "speed step [m/s]");
  ggv->add_option("--out", gg_out, "output directory");

  std::vector<std::string> argv_s = {"apexcvx"};
  argv_s.insert(argv_s.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_s) argv.push_back(a.data());

  fs::path dir;
  try {
    try {
      app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
      throw config_error(e.what());
    }
    if (*solve) {
      dir = cfg.out;
      return cmd_solve(cfg, out);
    }
    if (*compare) {
      dir = cmp_out;
      return cmd_compare(runs, labels, cmp_out, out);
    }
    if (*make) {
      tp.kind = parse_track_kind(kind);
      TrackRibbon t = make_test_track(tp);
      t.name = kind;
      if (track_out.has_parent_path()) fs::create_directories(track_out.parent_path());
      save_track(t, track_out);
      out << fmt::format("{} track, {:.1f} m, written to {}\n", kind, t.length(), track_out.string());
      return kOk;
    }
    dir = gg_out;
    if (!(v_min > 0.0) || !(v_max >= v_min) || !(v_step > 0.0)) throw config_error("bad speed range");
    fs::create_directories(gg_out);
    std::vector<double> speeds;
    for (double v = v_min; v <= v_max + 1e-9; v += v_step) speeds.push_back(v);
    write_ggv_files(load_vehicle_arg(gg_vehicle), speeds, gg_out);
    out << "ggv written to " << gg_out.string() << "\n";
    return kOk;
  } catch (const Failure& f) {
    report_failure(f, out, dir);
    return f.code;
  } catch (const TrackError& e) {
    report_failure(config_error(e.what()), out, dir);
    return kConfigError;
  } catch (const VehicleError& e) {
    report_failure(config_error(e.what()), out, dir);
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    report_failure(config_error(e.what()), out, dir);
    return kConfigError;
  } catch (const std::exception& e) {
    report_failure(Failure(kSolverFailure, "runtime", e.what()), out, dir);
    return kSolverFailure;
  }
}

}  // namespace apexcvx::cli
