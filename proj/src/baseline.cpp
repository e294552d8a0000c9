#include "apexcvx/baseline.hpp"

#include "log.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

namespace apexcvx {

namespace {

constexpr double kRegularization = 1e-8;

// n' and n'' at sample i as affine expressions of the offset variables.
struct Stencil {
  LinExpr dn, ddn;
};

Stencil central_stencil(int i, int count, bool periodic, double h, int first_var) {
  auto idx = [&](int j) { return first_var + (periodic ? (j % count + count) % count : j); };
  Stencil st;
  if (periodic || (i > 0 && i + 1 < count)) {
    st.dn = LinExpr({{idx(i + 1), 0.5 / h}, {idx(i - 1), -0.5 / h}});
    st.ddn = LinExpr({{idx(i + 1), 1.0 / (h * h)}, {idx(i), -2.0 / (h * h)},
                      {idx(i - 1), 1.0 / (h * h)}});
    return st;
  }
  // Second-order one-sided stencils at the ends of open lines.
  const int s = i == 0 ? 1 : -1;
  st.dn = LinExpr({{idx(i), -1.5 * s / h}, {idx(i + s), 2.0 * s / h}, {idx(i + 2 * s), -0.5 * s / h}});
  st.ddn = LinExpr({{idx(i), 2.0 / (h * h)},
                    {idx(i + s), -5.0 / (h * h)},
                    {idx(i + 2 * s), 4.0 / (h * h)},
                    {idx(i + 3 * s), -1.0 / (h * h)}});
  return st;
}

double gdot(const CurvatureGradient& g, const Vec3& a1, const Vec3& a2) {
  return g.dx1 * a1.x() + g.dy1 * a1.y() + g.dx2 * a2.x() + g.dy2 * a2.y();
}

// Grip-only copy: driven axles lose their power and torque ceilings.
VehicleParams grip_only(const VehicleParams& p) {
  VehicleParams q = p;
  for (int a = 0; a < 2; ++a) {
    if (p.P_max[a] > 0.0 || p.T_max[a] > 0.0) {
      q.P_max[a] = kInf;
      q.T_max[a] = kInf;
    }
  }
  return q;
}

// Second-order step of v^2 over ds with acceleration a(v, kappa).
template <class Accel>
double speed_step(double v, double k0, double k1, double ds, const Accel& accel) {
  auto a_at = [&](double vv, double k) {
    const auto a = accel(vv, vv * vv * std::abs(k));
    return a ? *a : 0.0;
  };
  const double a1 = a_at(v, k0);
  const double vm2 = std::max(v * v + a1 * ds, 1e-6);
  const double a2 = a_at(std::sqrt(vm2), 0.5 * (k0 + k1));
  return std::sqrt(std::max(v * v + 2.0 * a2 * ds, 1e-6));
}

}  // namespace

PathState min_curvature_line(const TrackRibbon& track, const RibbonDerivatives& derivs,
                             double w_veh, const SolverSettings& solver) {
  const int count = static_cast<int>(track.unique_size());
  if (count < 5) throw TrackError("min_curvature_line: too few samples");
  const double h = track.length() / static_cast<double>(track.size() - 1);

  std::vector<double> k0(static_cast<std::size_t>(count));
  std::vector<CurvatureGradient> grad(k0.size());
  double kmax = 0.0;
  for (std::size_t i = 0; i < k0.size(); ++i) {
    k0[i] = curvature(derivs.dP[i], derivs.ddP[i]);
    grad[i] = curvature_gradient(derivs.dP[i], derivs.ddP[i]);
    kmax = std::max(kmax, std::abs(k0[i]));
  }
  const double scale = kmax > 0.0 ? 1.0 / kmax : 1.0;
  const double reg = std::sqrt(kRegularization);

  ProgramBuilder b;
  const int n0 = b.add_variables(count, "n");
  const int t0 = b.add_variables(count, "t");
  for (int i = 0; i < count; ++i) {
    const auto u = static_cast<std::size_t>(i);
    const double lo = track.n_min[u] + 0.5 * w_veh;
    const double hi = track.n_max[u] - 0.5 * w_veh;
    if (lo > hi) throw TrackError("min_curvature_line: corridor narrower than the vehicle");
    b.add_bounds(n0 + i, lo, hi, "corridor");

    const Stencil st = central_stencil(i, count, track.closed, h, n0);
    const CurvatureGradient& g = grad[u];
    const Vec3& N = track.N[u];
    // kappa_lin = k0 + g . (n' N + n N', n'' N + 2 n' N' + n N'')
    LinExpr kap(k0[u]);
    kap += LinExpr::var(n0 + i, gdot(g, derivs.dN[u], derivs.ddN[u]));
    kap += gdot(g, N, 2.0 * derivs.dN[u]) * st.dn;
    kap += gdot(g, Vec3::Zero(), N) * st.ddn;
    b.add_rotated_soc(LinExpr::var(t0 + i), LinExpr(0.5),
                      {scale * kap, LinExpr::var(n0 + i, scale * reg)}, "curvature");
    b.add_objective(LinExpr::var(t0 + i, 1.0 / count));
  }

  const ConicProgram prog = b.build();
  const SolveResult res = conic_solve(prog, solver);
  if (!is_success(res.status)) {
    throw std::runtime_error("min_curvature_line: solver " + to_string(res.status));
  }
  detail::log().info("min-curvature line: {} samples, {} ipm iterations", count, res.iterations);

  std::vector<double> n(res.x.data() + n0, res.x.data() + n0 + count);
  for (int i = 0; i < count; ++i) {
    const auto u = static_cast<std::size_t>(i);
    n[u] = std::clamp(n[u], track.n_min[u] + 0.5 * w_veh, track.n_max[u] - 0.5 * w_veh);
  }
  PathState ps;
  differentiate_samples(n, n.size(), track.closed, h, ps.dn, ps.ddn);
  ps.n = std::move(n);
  return ps;
}

std::string to_string(Regime regime) {
  switch (regime) {
    case Regime::grip: return "grip";
    case Regime::power: return "power";
    case Regime::torque: return "torque";
    case Regime::braking: return "braking";
    case Regime::corner_apex: return "corner-apex";
  }
  return "unknown";
}

SpeedProfile apex_speed_profile(const std::vector<double>& kappa, const std::vector<double>& s,
                                bool closed, const VehicleParams& params,
                                const ApexOptions& options) {
  const std::size_t rows = s.size();
  if (kappa.size() != rows || rows < 3) {
    throw std::invalid_argument("apex_speed_profile: need matching kappa and s arrays");
  }
  for (std::size_t i = 0; i < rows; ++i) {
    if (!std::isfinite(kappa[i])) throw std::invalid_argument("apex_speed_profile: non-finite curvature");
    if (i > 0 && !(s[i] > s[i - 1])) {
      throw std::invalid_argument("apex_speed_profile: distances must increase");
    }
  }
  const std::size_t M = closed ? rows - 1 : rows;
  constexpr double kFloor = 0.5;

  SpeedProfile prof;
  prof.s = s;
  prof.closed = closed;
  prof.limit.assign(rows, 0.0);
  const auto count = static_cast<std::ptrdiff_t>(M);
  const bool par = options.exec == Exec::parallel;
#pragma omp parallel for schedule(dynamic, 16) if (par)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    const auto u = static_cast<std::size_t>(i);
    prof.limit[u] = steady_cornering_speed(params, kappa[u], options.v_cap);
  }
  (void)par;
  std::vector<bool> flagged(rows, false);
  for (std::size_t i = 0; i < M; ++i) {
    if (prof.limit[i] < kFloor) {
      flagged[i] = true;
      prof.limit[i] = kFloor;
      detail::log().warn("apex profile: no feasible cornering speed at s = {:.1f} m", s[i]);
    }
  }
  if (closed) {
    prof.limit[M] = prof.limit[0];
    flagged[M] = flagged[0];
  }
  prof.flagged = flagged;

  auto accel = [&](double v, double ay) { return max_longitudinal_accel(params, v, ay); };
  auto decel = [&](double v, double ay) -> std::optional<double> {
    const auto a = min_longitudinal_accel(params, v, ay);
    if (!a) return std::nullopt;
    return -*a;
  };
  auto ds = [&](std::size_t i) { return s[i + 1] - s[i]; };  // row i -> i + 1

  std::vector<double> fwd(rows), bwd(rows);
  if (closed) {
    const auto i0 = static_cast<std::size_t>(
        std::min_element(prof.limit.begin(), prof.limit.begin() + static_cast<std::ptrdiff_t>(M)) -
        prof.limit.begin());
    fwd[i0] = prof.limit[i0];
    for (std::size_t step = 0; step + 1 < M; ++step) {
      const std::size_t i = (i0 + step) % M;
      const std::size_t j = (i + 1) % M;
      fwd[j] = std::min(prof.limit[j], speed_step(fwd[i], kappa[i], kappa[j], ds(i), accel));
    }
    bwd[i0] = prof.limit[i0];
    for (std::size_t step = 0; step + 1 < M; ++step) {
      const std::size_t j = (i0 + M - step) % M;
      const std::size_t i = (j + M - 1) % M;
      const double v = speed_step(bwd[j], kappa[j], kappa[i], ds(i), decel);
      bwd[i] = std::min(prof.limit[i], v);
    }
    fwd[M] = fwd[0];
    bwd[M] = bwd[0];
  } else {
    fwd[0] = std::min(options.entry_speed, prof.limit[0]);
    for (std::size_t i = 0; i + 1 < rows; ++i) {
      fwd[i + 1] = std::min(prof.limit[i + 1],
                            speed_step(fwd[i], kappa[i], kappa[i + 1], ds(i), accel));
    }
    bwd[rows - 1] = prof.limit[rows - 1];
    for (std::size_t j = rows - 1; j > 0; --j) {
      bwd[j - 1] = std::min(prof.limit[j - 1],
                            speed_step(bwd[j], kappa[j], kappa[j - 1], ds(j - 1), decel));
    }
  }

  prof.v.resize(rows);
  prof.regime.resize(rows);
  const VehicleParams grip = grip_only(params);
  double drive_torque = 0.0;
  for (int a = 0; a < 2; ++a) {
    if (params.T_max[a] > 0.0) drive_torque += params.T_max[a] / params.r_w[a];
  }
  double drive_power = 0.0;
  for (int a = 0; a < 2; ++a) drive_power += std::max(params.P_max[a], 0.0);

  const auto rcount = static_cast<std::ptrdiff_t>(rows);
#pragma omp parallel for schedule(dynamic, 16) if (par)
  for (std::ptrdiff_t r = 0; r < rcount; ++r) {
    const auto i = static_cast<std::size_t>(r);
    const double v = std::min(fwd[i], bwd[i]);
    prof.v[i] = v;
    if (v >= prof.limit[i] * (1.0 - 1e-9)) {
      prof.regime[i] = Regime::corner_apex;
    } else if (bwd[i] < fwd[i]) {
      prof.regime[i] = Regime::braking;
    } else {
      const double ay = v * v * std::abs(kappa[i]);
      const auto a_act = max_longitudinal_accel(params, v, ay);
      const auto a_grip = max_longitudinal_accel(grip, v, ay);
      const bool actuator = a_act && a_grip && *a_act < *a_grip - 1e-6 * (1.0 + std::abs(*a_grip));
      if (!actuator) {
        prof.regime[i] = Regime::grip;
      } else {
        prof.regime[i] = drive_power / v < drive_torque ? Regime::power : Regime::torque;
      }
    }
  }

  prof.lap_time = 0.0;
  for (std::size_t i = 0; i + 1 < rows; ++i) {
    prof.lap_time += 0.5 * ds(i) * (1.0 / prof.v[i] + 1.0 / prof.v[i + 1]);
  }
  return prof;
}

LineGeometry line_geometry(const TrackRibbon& track, const RibbonDerivatives& derivs,
                           const PathState& path) {
  const std::size_t rows = track.size();
  PathState full = path;
  if (full.size() + 1 == rows && track.closed) {
    full.n.push_back(full.n.front());
    full.dn.push_back(full.dn.front());
    full.ddn.push_back(full.ddn.front());
  }
  if (full.size() != rows) throw TrackError("line_geometry: length mismatch");
  const TrajectoryDerivatives td = trajectory_derivatives(track, derivs, full);
  LineGeometry g;
  g.kappa = curvature(td);
  g.s.assign(rows, 0.0);
  for (std::size_t i = 1; i < rows; ++i) {
    const double h = track.s_ref[i] - track.s_ref[i - 1];
    g.s[i] = g.s[i - 1] + 0.5 * h * (td.d1[i - 1].norm() + td.d1[i].norm());
  }
  return g;
}

CurvatureStats curvature_stats(const LineGeometry& line, double threshold) {
  CurvatureStats st;
  for (std::size_t i = 0; i < line.kappa.size(); ++i) {
    st.peak = std::max(st.peak, std::abs(line.kappa[i]));
    if (i + 1 < line.kappa.size() && std::abs(line.kappa[i]) >= threshold) {
      st.dwell += line.s[i + 1] - line.s[i];
    }
  }
  return st;
}

}  // namespace apexcvx
