#include "apexcvx/report.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace apexcvx {

using nlohmann::json;

namespace {

// Point i of a closed solution, with the closing row mapped back to 0.
std::vector<double> close_loop(const std::vector<double>& v, std::size_t rows) {
  std::vector<double> out(rows);
  for (std::size_t i = 0; i < rows; ++i) out[i] = v[i % v.size()];
  return out;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

void ChannelTable::add(std::string name, std::string unit, std::string description,
                       std::vector<double> v) {
  columns.push_back({std::move(name), std::move(unit), std::move(description), std::move(v), {}});
}

void ChannelTable::add_text(std::string name, std::string description,
                            std::vector<std::string> v) {
  columns.push_back({std::move(name), "", std::move(description), {}, std::move(v)});
}

const Column* ChannelTable::find(const std::string& name) const {
  for (const auto& c : columns) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

const Column& ChannelTable::at(const std::string& name) const {
  const Column* c = find(name);
  if (c == nullptr) throw std::out_of_range("missing channel '" + name + "'");
  return *c;
}

ChannelTable solution_channels(const SolveReport& report, const VehicleParams& p) {
  const TrajectoryIterate& it = report.final_iterate;
  const TrackRibbon& track = report.track;
  const std::size_t P = it.size();
  const std::size_t rows = it.closed ? P + 1 : P;
  if (P == 0 || track.size() != rows) throw std::invalid_argument("solution_channels: no solution");
  auto loop = [&](const std::vector<double>& v) { return close_loop(v, rows); };

  std::vector<double> s_ref(track.s_ref.begin(), track.s_ref.begin() + static_cast<std::ptrdiff_t>(rows));
  std::vector<double> s(rows, 0.0), x(rows), y(rows), z(rows);
  const auto sigma = loop(it.sigma);
  for (std::size_t i = 0; i < rows; ++i) {
    const double n = it.path.n[i % P];
    const Vec3 q = track.P[i] + n * track.N[i];
    x[i] = q.x();
    y[i] = q.y();
    z[i] = q.z();
    if (i > 0) s[i] = s[i - 1] + 0.5 * (s_ref[i] - s_ref[i - 1]) * (sigma[i - 1] + sigma[i]);
  }
  const auto v = loop(it.v);
  const auto kappa = loop(it.kappa);
  std::vector<double> kmh(rows), ax(rows), ay(rows);
  const auto dEds = loop(it.dEds);
  for (std::size_t i = 0; i < rows; ++i) {
    kmh[i] = 3.6 * v[i];
    ax[i] = dEds[i] / p.m;
    ay[i] = v[i] * v[i] * kappa[i];
  }

  ChannelTable t;
  t.add("s_ref", "m", "distance along the reference line", s_ref);
  t.add("s", "m", "distance along the racing line", s);
  t.add("x", "m", "racing line position", x);
  t.add("y", "m", "racing line position", y);
  t.add("z", "m", "racing line position", z);
  t.add("n", "m", "lateral offset, positive to the left", loop(it.path.n));
  t.add("dn", "-", "dn/ds_ref", loop(it.path.dn));
  t.add("ddn", "1/m", "d2n/ds_ref2", loop(it.path.ddn));
  t.add("v", "m/s", "speed", v);
  t.add("v_kmh", "km/h", "speed", kmh);
  t.add("kappa", "1/m", "curvature of the racing line", kappa);
  t.add("a_x", "m/s^2", "longitudinal acceleration", ax);
  t.add("a_y", "m/s^2", "lateral acceleration v^2 kappa", ay);
  t.add("E_kin", "J", "kinetic energy", loop(it.E));
  t.add("lethargy", "s/m", "dt/ds", loop(it.lethargy));
  t.add("sigma", "-", "ds/ds_ref", sigma);
  t.add("F_c", "N", "centrifugal force", loop(it.Fc));
  const char* axle[2] = {"R", "F"};
  for (int a = 0; a < 2; ++a) t.add(fmt::format("F_x_{}", axle[a]), "N", "longitudinal tire force", loop(it.Fx[a]));
  for (int a = 0; a < 2; ++a) t.add(fmt::format("F_y_{}", axle[a]), "N", "lateral tire force", loop(it.Fy[a]));
  for (int a = 0; a < 2; ++a) t.add(fmt::format("F_z_{}", axle[a]), "N", "vertical axle load", loop(it.Fz[a]));
  for (int a = 0; a < 2; ++a) {
    t.add(fmt::format("F_z_star_{}", axle[a]), "N", "effective friction-ellipse load", loop(it.Fz_star[a]));
  }
  for (int a = 0; a < 2; ++a) t.add(fmt::format("F_w_{}", axle[a]), "N", "wheel (actuator) force", loop(it.Fw[a]));
  const Tightness& g = it.tightness;
  if (g.path.size() == P) {
    t.add("gap_path", "-", "(sigma - |xyz'|)/|xyz'|", loop(g.path));
    t.add("gap_lethargy", "-", "lethargy v - 1", loop(g.lethargy));
    t.add("gap_energy", "-", "(E - m v^2/2)/E", loop(g.energy));
    for (int a = 0; a < 2; ++a) {
      t.add(fmt::format("gap_load_{}", axle[a]), "-", "(load bound - F_z*)/max(F_z, m g/100)", loop(g.load[a]));
      std::vector<double> act(P);
      for (std::size_t i = 0; i < P; ++i) act[i] = g.grip_active[a][i] ? 1.0 : 0.0;
      t.add(fmt::format("grip_active_{}", axle[a]), "-", "1 where the friction ellipse is active", loop(act));
    }
  }
  if (it.F_mot.size() == P) {
    t.add("F_eng", "N", "engine force", loop(it.F_eng));
    t.add("F_mot", "N", "motor force, negative when regenerating", loop(it.F_mot));
    t.add("F_brk_R", "N", "rear friction brake force", loop(it.F_brk[kRear]));
    t.add("F_brk_F", "N", "front friction brake force", loop(it.F_brk[kFront]));
    std::vector<double> b(rows);
    for (std::size_t i = 0; i < rows; ++i) b[i] = it.battery[std::min(i, it.battery.size() - 1)];
    t.add("battery", "J", "battery energy", b);
  }
  return t;
}

ChannelTable profile_channels(const TrackRibbon& track, const RibbonDerivatives& derivs,
                              const PathState& path, const SpeedProfile& prof) {
  const std::size_t rows = track.size();
  if (prof.v.size() != rows) throw std::invalid_argument("profile_channels: size mismatch");
  const LineGeometry geo = line_geometry(track, derivs, path);
  std::vector<double> x(rows), y(rows), z(rows), n(rows), kmh(rows), ay(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    n[i] = path.n[i % path.size()];
    const Vec3 q = track.P[i] + n[i] * track.N[i];
    x[i] = q.x();
    y[i] = q.y();
    z[i] = q.z();
    kmh[i] = 3.6 * prof.v[i];
    ay[i] = prof.v[i] * prof.v[i] * geo.kappa[i];
  }
  std::vector<std::string> regime(rows);
  for (std::size_t i = 0; i < rows; ++i) regime[i] = to_string(prof.regime[i]);
  ChannelTable t;
  t.add("s_ref", "m", "distance along the reference line", track.s_ref);
  t.add("s", "m", "distance along the racing line", prof.s);
  t.add("x", "m", "racing line position", x);
  t.add("y", "m", "racing line position", y);
  t.add("z", "m", "racing line position", z);
  t.add("n", "m", "lateral offset, positive to the left", n);
  t.add("v", "m/s", "speed", prof.v);
  t.add("v_kmh", "km/h", "speed", kmh);
  t.add("kappa", "1/m", "curvature of the racing line", geo.kappa);
  t.add("a_y", "m/s^2", "lateral acceleration v^2 kappa", ay);
  t.add("v_corner", "m/s", "pure-cornering speed limit", prof.limit);
  t.add_text("regime", "limiting regime", regime);
  return t;
}

void write_csv(const ChannelTable& table, const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  const std::size_t rows = table.rows();
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    if (table.columns[c].size() != rows) {
      throw std::invalid_argument("write_csv: column '" + table.columns[c].name + "' has the wrong length");
    }
    f << (c ? "," : "") << table.columns[c].name;
  }
  f << '\n';
  std::string line;
  for (std::size_t r = 0; r < rows; ++r) {
    line.clear();
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
      const Column& col = table.columns[c];
      if (c) line += ',';
      line += col.is_text() ? col.text[r] : fmt::format("{:.10g}", col.values[r]);
    }
    f << line << '\n';
  }
}

ChannelTable read_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(f, line)) throw std::runtime_error(path.string() + ": empty file");
  const auto header = split_line(line);
  std::vector<std::vector<std::string>> cells(header.size());
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const auto row = split_line(line);
    if (row.size() != header.size()) throw std::runtime_error(path.string() + ": ragged row");
    for (std::size_t c = 0; c < row.size(); ++c) cells[c].push_back(row[c]);
  }
  ChannelTable t;
  for (std::size_t c = 0; c < header.size(); ++c) {
    std::vector<double> v(cells[c].size());
    bool numeric = true;
    for (std::size_t r = 0; r < v.size() && numeric; ++r) {
      try {
        std::size_t used = 0;
        v[r] = std::stod(cells[c][r], &used);
        numeric = used == cells[c][r].size();
      } catch (const std::exception&) {
        numeric = false;
      }
    }
    if (numeric) {
      t.add(header[c], "", "", std::move(v));
    } else {
      t.add_text(header[c], "", cells[c]);
    }
  }
  return t;
}

ChannelTable convergence_table(const SolveReport& report) {
  std::vector<double> k, t, tl, sec, solve, ipm, cert, status;
  for (const auto& h : report.history) {
    k.push_back(h.k);
    t.push_back(is_success(h.solver_status) ? h.t_lap : NAN);
    tl.push_back(is_success(h.solver_status) ? h.t_lap_linearized : NAN);
    sec.push_back(h.seconds);
    solve.push_back(h.solve_seconds);
    ipm.push_back(h.solver_iterations);
    cert.push_back(h.certificate ? 1.0 : 0.0);
  }
  std::vector<std::string> st;
  for (const auto& h : report.history) st.push_back(to_string(h.solver_status));
  ChannelTable c;
  c.add("iteration", "-", "SCP iteration", k);
  c.add("t_lap", "s", "exact lap time of the iterate", t);
  c.add("t_lap_linearized", "s", "objective of the convex subproblem", tl);
  c.add("wall_time", "s", "wall time of the iteration", sec);
  c.add("solve_time", "s", "conic solver time", solve);
  c.add("ipm_iterations", "-", "interior-point iterations", ipm);
  c.add("certificate", "-", "1 for the re-linearised check after convergence", cert);
  c.add_text("solver_status", "conic solver status", st);
  return c;
}

std::string report_json(const SolveReport& r, const VehicleParams& params) {
  json j;
  j["status"] = to_string(r.status);
  j["mode"] = r.mode;
  j["message"] = r.message;
  j["track"] = r.track.name;
  j["closed"] = r.track.closed;
  j["samples"] = r.track.size() > 0 ? r.track.size() - 1 : 0;
  j["t_lap"] = r.t_lap();
  j["iterations"] = r.iterations();
  j["converged_at"] = r.converged_at;
  j["certified"] = r.certified;
  j["certificate_dt"] = r.certificate_dt;
  j["total_seconds"] = r.total_seconds;
  json hist = json::array();
  for (const auto& h : r.history) {
    hist.push_back({{"k", h.k},
                    {"t_lap", h.t_lap},
                    {"t_lap_linearized", h.t_lap_linearized},
                    {"solver_status", to_string(h.solver_status)},
                    {"solver_iterations", h.solver_iterations},
                    {"seconds", h.seconds},
                    {"solve_seconds", h.solve_seconds},
                    {"trust_radius", h.trust_radius ? json(*h.trust_radius) : json(nullptr)},
                    {"max_path_gap", h.max_path_gap},
                    {"max_lethargy_gap", h.max_lethargy_gap},
                    {"max_energy_gap", h.max_energy_gap},
                    {"max_load_gap", h.max_load_gap},
                    {"nonlinear_residual", h.nonlinear_residual},
                    {"certificate", h.certificate}});
  }
  j["history"] = hist;
  const TrajectoryIterate& it = r.final_iterate;
  if (it.size() > 0) {
    const Tightness& g = it.tightness;
    j["tightness"] = {{"max_path", g.max_path},
                      {"max_lethargy", g.max_lethargy},
                      {"max_energy", g.max_energy},
                      {"max_load_active", g.max_load_active},
                      {"active_points", g.active_points}};
    const auto nl = nonlinear_residuals(it, r.track, r.derivs, params);
    j["nonlinear_residuals"] = {{"centrifugal", nl.centrifugal},
                                {"slope", nl.slope},
                                {"lethargy", nl.lethargy},
                                {"energy_transform", nl.energy_transform},
                                {"lap_time", nl.lap_time}};
    double vmin = it.v.front(), vmax = it.v.front();
    for (double v : it.v) vmin = std::min(vmin, v), vmax = std::max(vmax, v);
    j["v_min"] = vmin;
    j["v_max"] = vmax;
  }
  return j.dump(2);
}

ChannelTable scenario_table(const ScenarioComparison& cmp) {
  std::vector<std::string> scen, mode, status;
  std::vector<double> t, d, rel, b0, b1;
  for (const auto& r : cmp.runs) {
    scen.push_back(to_string(r.kind));
    mode.push_back(r.fixed ? "fixed" : "free");
    status.push_back(to_string(r.report.status));
    t.push_back(r.report.t_lap());
    d.push_back(r.delta);
    const double ref = r.report.t_lap() - r.delta;
    rel.push_back(100.0 * r.delta / ref);
    const auto& b = r.report.final_iterate.battery;
    b0.push_back(b.empty() ? NAN : b.front());
    b1.push_back(b.empty() ? NAN : b.back());
  }
  ChannelTable c;
  c.add_text("scenario", "energy scenario", scen);
  c.add_text("trajectory", "free or fixed to the drain/free line", mode);
  c.add("t_lap", "s", "lap time", t);
  c.add("delta", "s", "lap time minus the drain/free lap time", d);
  c.add("delta_pct", "%", "relative delta", rel);
  c.add("battery_start", "J", "initial battery energy", b0);
  c.add("battery_end", "J", "final battery energy", b1);
  c.add_text("status", "SCP status", status);
  return c;
}

std::string scenario_json(const ScenarioComparison& cmp) {
  json runs = json::array();
  for (const auto& r : cmp.runs) {
    runs.push_back({{"scenario", to_string(r.kind)},
                    {"trajectory", r.fixed ? "fixed" : "free"},
                    {"status", to_string(r.report.status)},
                    {"t_lap", r.report.t_lap()},
                    {"delta", r.delta},
                    {"iterations", r.report.iterations()},
                    {"message", r.report.message}});
  }
  json j;
  j["base_t_lap"] = cmp.base.t_lap();
  j["runs"] = runs;
  return j.dump(2);
}

std::string manifest_json(const std::vector<std::pair<std::string, const ChannelTable*>>& files) {
  json j = json::object();
  for (const auto& [file, table] : files) {
    json cols = json::array();
    for (const auto& c : table->columns) {
      cols.push_back({{"name", c.name}, {"unit", c.unit}, {"description", c.description}});
    }
    j[file] = cols;
  }
  return j.dump(2);
}

std::vector<double> elapsed_time(const ChannelTable& table) {
  const auto& s = table.at("s").values;
  const auto& v = table.at("v").values;
  std::vector<double> t(s.size(), 0.0);
  for (std::size_t i = 1; i < s.size(); ++i) {
    t[i] = t[i - 1] + 0.5 * (s[i] - s[i - 1]) * (1.0 / v[i - 1] + 1.0 / v[i]);
  }
  return t;
}

ChannelTable compare_channels(const ChannelTable& a, const ChannelTable& b) {
  const auto& sa = a.at("s_ref").values;
  const auto& sb = b.at("s_ref").values;
  if (sa.size() != sb.size()) throw std::invalid_argument("compare: runs use different tracks");
  for (std::size_t i = 0; i < sa.size(); ++i) {
    if (std::abs(sa[i] - sb[i]) > 1e-6 * std::max(1.0, std::abs(sa[i]))) {
      throw std::invalid_argument("compare: runs use different tracks");
    }
  }
  const auto ta = elapsed_time(a), tb = elapsed_time(b);
  const auto& va = a.at("v").values;
  const auto& vb = b.at("v").values;
  std::vector<double> dv(sa.size()), dt(sa.size());
  for (std::size_t i = 0; i < sa.size(); ++i) {
    dv[i] = vb[i] - va[i];
    dt[i] = tb[i] - ta[i];
  }
  ChannelTable c;
  c.add("s_ref", "m", "distance along the reference line", sa);
  c.add("x_a", "m", "first run position", a.at("x").values);
  c.add("y_a", "m", "first run position", a.at("y").values);
  c.add("x_b", "m", "second run position", b.at("x").values);
  c.add("y_b", "m", "second run position", b.at("y").values);
  c.add("v_a", "m/s", "first run speed", va);
  c.add("v_b", "m/s", "second run speed", vb);
  c.add("dv", "m/s", "speed delta, second minus first", dv);
  c.add("t_a", "s", "first run elapsed time", ta);
  c.add("t_b", "s", "second run elapsed time", tb);
  c.add("dt", "s", "time delta, second minus first", dt);
  return c;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
  if (!text.empty() && text.back() != '\n') f << '\n';
}

}  // namespace apexcvx
