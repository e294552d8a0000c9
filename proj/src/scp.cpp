#include "apexcvx/scp.hpp"

#include "log.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace apexcvx {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void refresh_geometry(TrajectoryIterate& it, const TrackRibbon& grid,
                      const RibbonDerivatives& d) {
  for (std::size_t i = 0; i < it.size(); ++i) {
    const Vec3 d1 = d.dP[i] + it.path.dn[i] * grid.N[i] + it.path.n[i] * d.dN[i];
    const Vec3 d2 = d.ddP[i] + it.path.ddn[i] * grid.N[i] + 2.0 * it.path.dn[i] * d.dN[i] +
                    it.path.n[i] * d.ddN[i];
    it.sigma[i] = d1.norm();
    it.kappa[i] = curvature(d1, d2);
    it.Fc[i] = 2.0 * it.E[i] * it.kappa[i];
  }
}

}  // namespace

void SCPConfig::validate() const {
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (max_iters < 1) throw std::invalid_argument("max_iters must be at least 1");
  if (trust_radius && !(*trust_radius > 0.0)) {
    throw std::invalid_argument("trust radius must be positive");
  }
  if (samples != 0 && samples < 16) throw std::invalid_argument("samples must be at least 16");
  if (!(initial_speed > 0.0) || !(entry_speed > 0.0)) {
    throw std::invalid_argument("speeds must be positive");
  }
}

std::string to_string(SCPStatus status) {
  switch (status) {
    case SCPStatus::converged: return "converged";
    case SCPStatus::max_iters: return "max-iters";
    case SCPStatus::solver_failure: return "solver-failure";
  }
  return "unknown";
}

TrackRibbon prepare_grid(const TrackRibbon& track, std::size_t samples) {
  const std::size_t have = track.size() - 1;
  std::size_t want = samples == 0 ? have : samples;
  want += want % 2;
  if (want < 16) throw std::invalid_argument("samples must be at least 16");
  if (want == have) {
    bool uniform = true;
    const double h = track.length() / static_cast<double>(have);
    for (std::size_t i = 1; i < track.size() && uniform; ++i) {
      uniform = std::abs(track.s_ref[i] - track.s_ref[i - 1] - h) <= 1e-9 * h;
    }
    if (uniform) return track;
  }
  return resample_track(track, want);
}

PathState line_on_points(const TrackRibbon& grid, const std::vector<double>& n) {
  const std::size_t rows = grid.size();
  const std::size_t count = grid.unique_size();
  if (n.size() != rows && n.size() != count) {
    throw std::invalid_argument("line_on_points: length mismatch");
  }
  const double h = grid.length() / static_cast<double>(rows - 1);
  std::vector<double> f(n.begin(), n.begin() + static_cast<std::ptrdiff_t>(count));
  std::vector<double> d1, d2;
  differentiate_samples(f, count, grid.closed, h, d1, d2);
  const std::size_t points = grid.closed ? count : rows;
  PathState ps;
  ps.n.assign(f.begin(), f.begin() + static_cast<std::ptrdiff_t>(points));
  ps.dn.assign(d1.begin(), d1.begin() + static_cast<std::ptrdiff_t>(points));
  ps.ddn.assign(d2.begin(), d2.begin() + static_cast<std::ptrdiff_t>(points));
  return ps;
}

SolveReport run_scp(const TrackRibbon& track, const VehicleParams& params,
                    const SCPConfig& config, const std::optional<PathState>& fixed_line,
                    bool energy, const SubproblemExtension& extension) {
  config.validate();
  params.validate();
  const auto start = Clock::now();
  SolveReport report;
  report.mode = fixed_line ? "fixed-line" : "min-time";
  report.track = prepare_grid(track, config.samples);
  validate_track(report.track, params.w_veh);
  report.derivs = differentiate_ribbon(report.track);
  const TrackRibbon& grid = report.track;
  const RibbonDerivatives& derivs = report.derivs;
  const Layout layout = layout_variables(grid.size() - 1, grid.closed, energy);

  TrajectoryIterate prev;
  if (config.warm_start) {
    prev = *config.warm_start;
    if (prev.size() != static_cast<std::size_t>(layout.points)) {
      throw std::invalid_argument("warm start does not match the grid");
    }
  } else {
    prev = initial_guess(grid, derivs, params, layout, config.initial_speed);
  }
  if (fixed_line) {
    if (fixed_line->size() != static_cast<std::size_t>(layout.points)) {
      throw std::invalid_argument("fixed line does not match the grid");
    }
    prev.path = *fixed_line;
    refresh_geometry(prev, grid, derivs);
  }

  std::optional<double> radius = config.trust_radius;
  double t_prev = prev.t_lap;
  report.status = SCPStatus::max_iters;
  const int last = config.max_iters + (config.certify ? 1 : 0);
  for (int k = 1; k <= last; ++k) {
    if (k > config.max_iters && report.converged_at == 0) break;
    const auto t0 = Clock::now();
    TranscriptionOptions opt;
    opt.trust_radius = radius;
    opt.fixed_line = fixed_line;
    opt.entry_speed = config.entry_speed;
    opt.energy = energy;

    Subproblem sub;
    SolveResult res;
    bool retried = false;
    while (true) {
      opt.trust_radius = radius;
      sub = assemble_subproblem(grid, derivs, params, prev, opt);
      if (extension) extension(sub, prev);
      const ConicProgram prog = sub.builder.build();
      res = conic_solve(prog, config.solver);
      if (is_success(res.status) || retried || fixed_line) break;
      radius = radius ? *radius / 2.0 : config.fallback_radius / 2.0;
      detail::log().warn("scp iteration {}: solver {}, retrying with trust radius {:.3g} m", k,
                         to_string(res.status), *radius);
      retried = true;
    }

    IterationRecord rec;
    rec.k = k;
    rec.solver_status = res.status;
    rec.solver_iterations = res.iterations;
    rec.solve_seconds = res.solve_seconds;
    rec.trust_radius = opt.trust_radius;
    if (!is_success(res.status)) {
      rec.seconds = seconds_since(t0);
      report.history.push_back(rec);
      if (report.converged_at > 0) {
        report.message = "certificate solve failed: " + to_string(res.status);
        detail::log().warn("scp: {}", report.message);
        break;
      }
      report.status = SCPStatus::solver_failure;
      report.message = "solver " + to_string(res.status) + " at iteration " + std::to_string(k);
      detail::log().error("scp: {}", report.message);
      break;
    }

    TrajectoryIterate it = extract_iterate(res.x, sub, grid, derivs, params);
    it.k = k;
    rec.t_lap = it.t_lap;
    rec.t_lap_linearized = it.t_lap_linearized;
    rec.max_path_gap = it.tightness.max_path;
    rec.max_lethargy_gap = it.tightness.max_lethargy;
    rec.max_energy_gap = it.tightness.max_energy;
    rec.max_load_gap = it.tightness.max_load_active;
    rec.nonlinear_residual = nonlinear_residuals(it, grid, derivs, params).max();
    rec.seconds = seconds_since(t0);
    report.history.push_back(rec);
    detail::log().info("scp iteration {}: t_lap {:.4f} s (linearised {:.4f} s), {} ipm iters, {:.2f} s",
                       k, it.t_lap, it.t_lap_linearized, res.iterations, rec.seconds);

    const double dt = std::abs(it.t_lap - t_prev);
    t_prev = it.t_lap;
    prev = std::move(it);
    if (report.converged_at > 0) {
      report.history.back().certificate = true;
      report.certificate_dt = dt;
      report.certified = dt <= config.epsilon;
      if (!report.certified) {
        report.message = "certificate solve moved the lap time by " + std::to_string(dt) + " s";
        detail::log().warn("scp: {}", report.message);
      }
      break;
    }
    if ((k >= 2 || config.warm_start) && dt <= config.epsilon) {
      report.status = SCPStatus::converged;
      report.converged_at = k;
      if (!config.certify) break;
    }
  }
  report.final_iterate = prev;
  report.total_seconds = seconds_since(start);
  if (report.status == SCPStatus::max_iters) {
    report.message = "no convergence within " + std::to_string(config.max_iters) + " iterations";
    detail::log().warn("scp: {}", report.message);
  }
  return report;
}

SolveReport solve_min_lap_time(const TrackRibbon& track, const VehicleParams& params,
                               const SCPConfig& config) {
  return run_scp(track, params, config, std::nullopt, false, {});
}

SolveReport solve_fixed_trajectory(const TrackRibbon& track, const VehicleParams& params,
                                   const SCPConfig& config, const PathState& n_fixed) {
  return run_scp(track, params, config, n_fixed, false, {});
}

}  // namespace apexcvx
