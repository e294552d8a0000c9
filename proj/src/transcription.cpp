#include "apexcvx/transcription.hpp"

#include "log.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace apexcvx {

namespace {

constexpr double kRefSpeed = 50.0;

template <class T>
std::pair<T, T> hs_rows(double h, const T& x0, const T& f0, const T& xm, const T& fm, const T& x1,
                        const T& f1) {
  T mid = xm - 0.5 * x0 - 0.5 * x1 - (h / 8.0) * f0 + (h / 8.0) * f1;
  T end = x1 - x0 - (h / 6.0) * f0 - (4.0 * h / 6.0) * fm - (h / 6.0) * f1;
  return {mid, end};
}

// Affine axle loads in (E, Fc, Fx_total) at fixed slope and banking.
struct LoadModel {
  // rows: Fz R/F, Fy R/F, dFz R/F; columns: constant, E, Fc, Fx
  double c[6][4] = {};

  LoadModel(const VehicleParams& p, double theta, double phi) {
    auto pack = [](const SteadyLoads& s, double out[6]) {
      out[0] = s.Fz[kRear];
      out[1] = s.Fz[kFront];
      out[2] = s.Fy[kRear];
      out[3] = s.Fy[kFront];
      out[4] = s.dFz[kRear];
      out[5] = s.dFz[kFront];
    };
    double base[6], e[6], fc[6], fx[6];
    pack(steady_loads(p, 0.0, 0.0, 0.0, theta, phi), base);
    pack(steady_loads(p, 1.0, 0.0, 0.0, theta, phi), e);
    pack(steady_loads(p, 0.0, 0.0, 1.0, theta, phi), fc);
    pack(steady_loads(p, 0.0, 1.0, 0.0, theta, phi), fx);
    for (int r = 0; r < 6; ++r) {
      c[r][0] = base[r];
      c[r][1] = e[r] - base[r];
      c[r][2] = fc[r] - base[r];
      c[r][3] = fx[r] - base[r];
    }
  }

  double eval(int row, double E, double Fc, double Fx) const {
    return c[row][0] + c[row][1] * E + c[row][2] * Fc + c[row][3] * Fx;
  }
};

Vec3 d1_of(const RibbonDerivatives& d, const TrackRibbon& t, std::size_t i, double n, double dn) {
  return d.dP[i] + dn * t.N[i] + n * d.dN[i];
}

Vec3 d2_of(const RibbonDerivatives& d, const TrackRibbon& t, std::size_t i, double n, double dn,
           double ddn) {
  return d.ddP[i] + ddn * t.N[i] + 2.0 * dn * d.dN[i] + n * d.ddN[i];
}

std::vector<double> quadrature_weights(const Layout& L, double h) {
  std::vector<double> w(static_cast<std::size_t>(L.points), 0.0);
  for (int k = 0; k < L.intervals; ++k) {
    w[static_cast<std::size_t>(2 * k)] += h / 6.0;
    w[static_cast<std::size_t>(2 * k + 1)] += 4.0 * h / 6.0;
    w[static_cast<std::size_t>(L.wrap(2 * k + 2))] += h / 6.0;
  }
  return w;
}

void check_grid(const TrackRibbon& track, const RibbonDerivatives& derivs, const Layout& L) {
  if (track.size() != static_cast<std::size_t>(L.samples + 1)) {
    throw std::invalid_argument("transcription: track must have samples + 1 rows");
  }
  if (derivs.dP.size() != track.size()) {
    throw std::invalid_argument("transcription: derivative arrays do not match the track");
  }
}

template <class T>
void resize_all(std::size_t n, T& v) {
  v.assign(n, 0.0);
}

void resize_iterate(TrajectoryIterate& it, std::size_t n) {
  it.s_ref.assign(n, 0.0);
  it.path = PathState::zeros(n);
  for (auto* v : {&it.E, &it.dEds, &it.dEdsref, &it.lethargy, &it.v, &it.sigma, &it.Fc,
                  &it.kappa, &it.theta, &it.phi}) {
    resize_all(n, *v);
  }
  for (int a = 0; a < 2; ++a) {
    for (auto* v : {&it.Fx[a], &it.Fy[a], &it.Fz[a], &it.Fz_star[a], &it.dFz[a], &it.Fw[a]}) {
      resize_all(n, *v);
    }
  }
}

double lap_time_of(const TrajectoryIterate& it, const std::vector<double>& w) {
  double t = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) t += w[i] * it.lethargy[i] * it.sigma[i];
  return t;
}

}  // namespace

Layout layout_variables(std::size_t samples, bool closed, bool energy) {
  if (samples < 16) throw std::invalid_argument("samples must be at least 16");
  Layout L;
  L.samples = static_cast<int>(samples + (samples % 2));
  L.intervals = L.samples / 2;
  L.closed = closed;
  L.points = closed ? L.samples : L.samples + 1;
  L.energy = energy;
  L.num_vars = kFieldCount * L.points;
  if (energy) {
    L.energy_offset = L.num_vars;
    L.num_vars += kEnergyFieldCount * L.points;
    L.battery_offset = L.num_vars;
    L.battery_states = L.points + (closed ? 1 : 0);
    L.num_vars += L.battery_states;
  }
  return L;
}

HsDefect hermite_simpson_defect(double h, double x0, double f0, double xm, double fm, double x1,
                                double f1) {
  const auto [mid, end] = hs_rows(h, x0, f0, xm, fm, x1, f1);
  return {mid, end};
}

OperatingPoint TrajectoryIterate::operating_point(std::size_t i) const {
  OperatingPoint op;
  op.E_kin = E[i];
  for (int a = 0; a < 2; ++a) {
    op.Fx[a] = Fx[a][i];
    op.Fy[a] = Fy[a][i];
    op.Fz[a] = Fz[a][i];
    op.Fz_star[a] = Fz_star[a][i];
    op.dFz[a] = dFz[a][i];
    op.Fw[a] = Fw[a][i];
  }
  op.lethargy = lethargy[i];
  op.v = v[i];
  op.Fc = Fc[i];
  op.theta = theta[i];
  op.phi = phi[i];
  return op;
}

TrajectoryIterate initial_guess(const TrackRibbon& track, const RibbonDerivatives& derivs,
                                const VehicleParams& params, const Layout& layout,
                                double speed) {
  check_grid(track, derivs, layout);
  if (!(speed > 0.0)) throw std::invalid_argument("initial speed must be positive");
  const auto P = static_cast<std::size_t>(layout.points);
  TrajectoryIterate it;
  it.k = 0;
  it.closed = layout.closed;
  it.length = track.length();
  resize_iterate(it, P);
  const double E = 0.5 * params.m * speed * speed;
  for (std::size_t i = 0; i < P; ++i) {
    it.s_ref[i] = track.s_ref[i];
    const Vec3 d1 = derivs.dP[i];
    const Vec3 d2 = derivs.ddP[i];
    it.E[i] = E;
    it.v[i] = speed;
    it.lethargy[i] = 1.0 / speed;
    it.sigma[i] = d1.norm();
    it.kappa[i] = curvature(d1, d2);
    it.Fc[i] = 2.0 * E * it.kappa[i];
    it.theta[i] = slope_angle(d1);
    it.phi[i] = bank_angle(track.N[i]);
  }
  const double h = track.s_ref[2] - track.s_ref[0];
  it.t_lap = lap_time_of(it, quadrature_weights(layout, h));
  it.t_lap_linearized = it.t_lap;
  return it;
}

Subproblem assemble_subproblem(const TrackRibbon& track, const RibbonDerivatives& derivs,
                               const VehicleParams& p, const TrajectoryIterate& prev,
                               const TranscriptionOptions& opt) {
  Subproblem sub;
  const std::size_t samples = track.size() - 1;
  if (samples % 2 != 0) throw std::invalid_argument("transcription: odd sample count");
  sub.layout = layout_variables(samples, track.closed, opt.energy);
  const Layout& L = sub.layout;
  check_grid(track, derivs, L);
  const auto P = static_cast<std::size_t>(L.points);
  if (prev.size() != P) throw std::invalid_argument("transcription: iterate size mismatch");
  if (opt.fixed_line && opt.fixed_line->size() != P) {
    throw std::invalid_argument("transcription: fixed line size mismatch");
  }

  const double h = track.s_ref[2] - track.s_ref[0];
  sub.weights = quadrature_weights(L, h);

  Scales& sc = sub.scales;
  sc.force = p.m * p.g;
  sc.speed = kRefSpeed;
  sc.energy = 0.5 * p.m * kRefSpeed * kRefSpeed;
  sc.time = prev.t_lap > 0.0 ? prev.t_lap : track.length() / kRefSpeed;
  const double F0 = sc.force, E0 = sc.energy, V0 = sc.speed, T0 = sc.time;

  Linearization& lin = sub.lin;
  lin.theta.resize(P);
  lin.phi.resize(P);
  lin.kappa.resize(P);
  lin.grad.resize(P);
  lin.d1.resize(P);
  lin.d2.resize(P);
  lin.n = prev.path.n;
  lin.E = prev.E;
  lin.dEds = prev.dEds;
  lin.sigma = prev.sigma;
  lin.lethargy = prev.lethargy;
  for (std::size_t i = 0; i < P; ++i) {
    const double n = prev.path.n[i], dn = prev.path.dn[i], ddn = prev.path.ddn[i];
    lin.d1[i] = d1_of(derivs, track, i, n, dn);
    lin.d2[i] = d2_of(derivs, track, i, n, dn, ddn);
    if (!(std::hypot(lin.d1[i].x(), lin.d1[i].y()) > 1e-9)) {
      throw std::invalid_argument("transcription: singular previous tangent");
    }
    lin.theta[i] = slope_angle(lin.d1[i]);
    lin.phi[i] = bank_angle(track.N[i]);
    lin.kappa[i] = curvature(lin.d1[i], lin.d2[i]);
    lin.grad[i] = curvature_gradient(lin.d1[i], lin.d2[i]);
  }

  ProgramBuilder& B = sub.builder;
  B.add_variables(L.num_vars);
  auto V = [&](std::size_t i, int f) { return LinExpr::var(L.var(static_cast<int>(i), f)); };

  const double kD = p.drag_factor();
  const double half_w = 0.5 * p.w_veh;

  for (std::size_t i = 0; i < P; ++i) {
    const double w = sub.weights[i];
    const double sig_p = prev.sigma[i], leth_p = prev.lethargy[i];

    // Linearised lap-time integrand.
    LinExpr obj = (w * sig_p / (V0 * T0)) * V(i, kLethargy);
    obj += (w * leth_p / T0) * V(i, kSigma);
    obj += -w * leth_p * sig_p / T0;
    B.add_objective(obj);

    // Path length.
    std::vector<LinExpr> d1u(3);
    for (int j = 0; j < 3; ++j) {
      d1u[static_cast<std::size_t>(j)] = LinExpr(derivs.dP[i][j]);
      d1u[static_cast<std::size_t>(j)].add(L.var(static_cast<int>(i), kDn), track.N[i][j]);
      d1u[static_cast<std::size_t>(j)].add(L.var(static_cast<int>(i), kN), derivs.dN[i][j]);
    }
    B.add_soc(V(i, kSigma), d1u, "path_length");
    // Lethargy times speed at least one.
    B.add_rotated_soc(V(i, kLethargy), V(i, kV), {LinExpr(std::sqrt(2.0))}, "lethargy");
    // Kinetic energy at least m v^2 / 2.
    B.add_rotated_soc(V(i, kE), LinExpr(0.5), {V(i, kV)}, "kinetic_energy");

    // Linearised centrifugal force.
    const CurvatureGradient& g = lin.grad[i];
    const Vec3& N = track.N[i];
    const Vec3& dN = derivs.dN[i];
    const Vec3& ddN = derivs.ddN[i];
    const double c_n = g.dx1 * dN.x() + g.dy1 * dN.y() + g.dx2 * ddN.x() + g.dy2 * ddN.y();
    const double c_dn = g.dx1 * N.x() + g.dy1 * N.y() + 2.0 * (g.dx2 * dN.x() + g.dy2 * dN.y());
    const double c_ddn = g.dx2 * N.x() + g.dy2 * N.y();
    const double c_0 = -(g.dx1 * lin.d1[i].x() + g.dy1 * lin.d1[i].y() + g.dx2 * lin.d2[i].x() +
                         g.dy2 * lin.d2[i].y()) +
                       g.dx1 * derivs.dP[i].x() + g.dy1 * derivs.dP[i].y() +
                       g.dx2 * derivs.ddP[i].x() + g.dy2 * derivs.ddP[i].y();
    const double e2 = 2.0 * prev.E[i] / F0;
    LinExpr fc = V(i, kFc);
    fc.add(L.var(static_cast<int>(i), kN), -e2 * c_n);
    fc.add(L.var(static_cast<int>(i), kDn), -e2 * c_dn);
    fc.add(L.var(static_cast<int>(i), kDdn), -e2 * c_ddn);
    fc.add(L.var(static_cast<int>(i), kE), -2.0 * E0 * lin.kappa[i] / F0);
    fc += -e2 * c_0;
    B.add_equality(fc, "centrifugal");

    // Axle loads, lateral forces and load transfers in scaled units.
    const LoadModel lm(p, lin.theta[i], lin.phi[i]);
    auto load = [&](int row) {
      LinExpr e(lm.c[row][0] / F0);
      e.add(L.var(static_cast<int>(i), kE), lm.c[row][1] * E0 / F0);
      e.add(L.var(static_cast<int>(i), kFc), lm.c[row][2]);
      e.add(L.var(static_cast<int>(i), kFxR), lm.c[row][3]);
      e.add(L.var(static_cast<int>(i), kFxF), lm.c[row][3]);
      return e;
    };

    // Longitudinal balance and the linearised domain transform.
    const double cth = std::cos(lin.phi[i]) * std::sin(lin.theta[i]);
    LinExpr G = V(i, kFxR) + V(i, kFxF);
    G.add(L.var(static_cast<int>(i), kE), -kD * E0 / F0);
    G += -cth;
    const double G_p = prev.dEds[i] / F0;
    LinExpr Hrow = V(i, kH) - sig_p * G;
    Hrow.add(L.var(static_cast<int>(i), kSigma), -G_p);
    Hrow += G_p * sig_p;
    B.add_equality(Hrow, "energy_transform");

    for (int a = 0; a < 2; ++a) {
      const auto ax = static_cast<Axle>(a);
      const int fx = a == kRear ? kFxR : kFxF;
      const int fw = a == kRear ? kFwR : kFwF;
      const int fzs = a == kRear ? kFzsR : kFzsF;
      const LinExpr Fz = load(a);
      const LinExpr Fy = load(2 + a);
      const LinExpr dFz = load(4 + a);

      B.add_nonneg(Fz, "vertical_load");
      B.add_soc(V(i, fzs), {(1.0 / p.mu_x[ax]) * V(i, fx), (1.0 / p.mu_y[ax]) * Fy},
                "friction_ellipse");
      const double gam = p.gamma[ax];
      LinExpr room = (1.0 - gam) * Fz - V(i, fzs);
      if (gam < 0.0) {
        B.add_rotated_soc(room, LinExpr(p.Fz_nom[ax] / (-gam * F0)), {Fz, dFz}, "load_sensitivity");
      } else {
        B.add_nonneg(room, "load_sensitivity");
      }

      const double cr = p.c_r[ax];
      if (std::isfinite(p.C_alpha[ax])) {
        const double ca = p.C_alpha[ax];
        LinExpr t = V(i, fw) - V(i, fx) - (cr + ca) * Fz;
        LinExpr u2 = V(i, fx) - V(i, fw) + (cr - ca) * Fz;
        B.add_soc(t, {2.0 * Fy, u2}, "cornering_resistance");
      } else {
        B.add_nonneg(V(i, fw) - V(i, fx) - cr * Fz, "cornering_resistance");
      }

      if (std::isfinite(p.P_max[ax])) {
        LinExpr e = (p.P_max[ax] / (V0 * F0)) * V(i, kLethargy) - V(i, fw);
        B.add_nonneg(e, "power_max");
      }
      if (std::isfinite(p.P_min[ax])) {
        LinExpr e = V(i, fw) - (p.P_min[ax] / (V0 * F0)) * V(i, kLethargy);
        B.add_nonneg(e, "power_min");
      }
      const double up = p.T_max[ax] / (p.r_w[ax] * F0);
      const double lo = p.T_min[ax] / (p.r_w[ax] * F0);
      B.add_bounds(L.var(static_cast<int>(i), fw), lo, up, "torque");
    }

    // Corridor, trust region and fixed line.
    double lo = track.n_min[i] + half_w;
    double hi = track.n_max[i] - half_w;
    if (opt.trust_radius && !opt.fixed_line) {
      lo = std::max(lo, prev.path.n[i] - *opt.trust_radius);
      hi = std::min(hi, prev.path.n[i] + *opt.trust_radius);
      if (hi < lo) throw std::invalid_argument("transcription: empty trust region");
    }
    B.add_bounds(L.var(static_cast<int>(i), kN), lo, hi, "corridor");
    if (opt.fixed_line) {
      const PathState& f = *opt.fixed_line;
      B.add_equality(V(i, kN) - LinExpr(f.n[i]), "fixed_line");
      B.add_equality(V(i, kDn) - LinExpr(f.dn[i]), "fixed_line");
      B.add_equality(V(i, kDdn) - LinExpr(f.ddn[i]), "fixed_line");
    }
  }

  // Hermite-Simpson collocation of n -> n' -> n'' and E.
  const double eh = F0 / E0;
  for (int k = 0; k < L.intervals; ++k) {
    const auto a = static_cast<std::size_t>(2 * k);
    const auto m = static_cast<std::size_t>(2 * k + 1);
    const auto b = static_cast<std::size_t>(L.wrap(2 * k + 2));
    if (!opt.fixed_line) {
      auto [m1, e1] = hs_rows(h, V(a, kN), V(a, kDn), V(m, kN), V(m, kDn), V(b, kN), V(b, kDn));
      B.add_equality(m1, "collocation_n");
      B.add_equality(e1, "collocation_n");
      auto [m2, e2] =
          hs_rows(h, V(a, kDn), V(a, kDdn), V(m, kDn), V(m, kDdn), V(b, kDn), V(b, kDdn));
      B.add_equality(m2, "collocation_dn");
      B.add_equality(e2, "collocation_dn");
    }
    auto [m3, e3] = hs_rows(h, V(a, kE), eh * V(a, kH), V(m, kE), eh * V(m, kH), V(b, kE),
                            eh * V(b, kH));
    B.add_equality(m3, "collocation_E");
    B.add_equality(e3, "collocation_E");
  }

  if (!L.closed) {
    const double E_in = 0.5 * p.m * opt.entry_speed * opt.entry_speed;
    B.add_equality(V(0, kE) - LinExpr(E_in / E0), "entry_speed");
  }
  return sub;
}

ConicProgram build_subproblem(const TrackRibbon& track, const RibbonDerivatives& derivs,
                              const VehicleParams& params, const TrajectoryIterate& prev,
                              const TranscriptionOptions& options) {
  return assemble_subproblem(track, derivs, params, prev, options).builder.build();
}

TrajectoryIterate extract_iterate(const Eigen::VectorXd& x, const Subproblem& sub,
                                  const TrackRibbon& track, const RibbonDerivatives& derivs,
                                  const VehicleParams& p) {
  const Layout& L = sub.layout;
  if (x.size() != L.num_vars) throw std::invalid_argument("extract_iterate: size mismatch");
  const auto P = static_cast<std::size_t>(L.points);
  const Scales& sc = sub.scales;
  TrajectoryIterate it;
  it.closed = L.closed;
  it.length = track.length();
  resize_iterate(it, P);
  auto X = [&](std::size_t i, int f) { return x[L.var(static_cast<int>(i), f)]; };
  for (std::size_t i = 0; i < P; ++i) {
    it.s_ref[i] = track.s_ref[i];
    it.path.n[i] = X(i, kN);
    it.path.dn[i] = X(i, kDn);
    it.path.ddn[i] = X(i, kDdn);
    it.E[i] = X(i, kE) * sc.energy;
    it.dEdsref[i] = X(i, kH) * sc.force;
    it.sigma[i] = X(i, kSigma);
    it.lethargy[i] = X(i, kLethargy) / sc.speed;
    it.v[i] = X(i, kV) * sc.speed;
    it.Fc[i] = X(i, kFc) * sc.force;
    it.theta[i] = sub.lin.theta[i];
    it.phi[i] = sub.lin.phi[i];
    const double Fx_tot = (X(i, kFxR) + X(i, kFxF)) * sc.force;
    it.Fx[kRear][i] = X(i, kFxR) * sc.force;
    it.Fx[kFront][i] = X(i, kFxF) * sc.force;
    it.Fw[kRear][i] = X(i, kFwR) * sc.force;
    it.Fw[kFront][i] = X(i, kFwF) * sc.force;
    it.Fz_star[kRear][i] = X(i, kFzsR) * sc.force;
    it.Fz_star[kFront][i] = X(i, kFzsF) * sc.force;
    const LoadModel lm(p, it.theta[i], it.phi[i]);
    for (int a = 0; a < 2; ++a) {
      it.Fz[a][i] = lm.eval(a, it.E[i], it.Fc[i], Fx_tot);
      it.Fy[a][i] = lm.eval(2 + a, it.E[i], it.Fc[i], Fx_tot);
      it.dFz[a][i] = lm.eval(4 + a, it.E[i], it.Fc[i], Fx_tot);
    }
    it.dEds[i] = Fx_tot - std::cos(it.phi[i]) * std::sin(it.theta[i]) * p.m * p.g -
                 p.drag_factor() * it.E[i];
    const Vec3 d1 = d1_of(derivs, track, i, it.path.n[i], it.path.dn[i]);
    const Vec3 d2 = d2_of(derivs, track, i, it.path.n[i], it.path.dn[i], it.path.ddn[i]);
    it.kappa[i] = curvature(d1, d2);
  }
  if (L.energy) {
    it.F_eng.assign(P, 0.0);
    it.F_mot.assign(P, 0.0);
    it.F_brk[kRear].assign(P, 0.0);
    it.F_brk[kFront].assign(P, 0.0);
    for (std::size_t i = 0; i < P; ++i) {
      const int ii = static_cast<int>(i);
      it.F_eng[i] = x[L.energy_var(ii, kEng)] * sc.force;
      it.F_mot[i] = x[L.energy_var(ii, kMot)] * sc.force;
      it.F_brk[kRear][i] = x[L.energy_var(ii, kBrkR)] * sc.force;
      it.F_brk[kFront][i] = x[L.energy_var(ii, kBrkF)] * sc.force;
    }
    it.battery.assign(static_cast<std::size_t>(L.battery_states), 0.0);
    for (int j = 0; j < L.battery_states; ++j) {
      it.battery[static_cast<std::size_t>(j)] = x[L.battery_var(j)] * sc.energy;
    }
  }
  it.t_lap = lap_time_of(it, sub.weights);
  double lin_t = 0.0;
  for (std::size_t i = 0; i < P; ++i) {
    const double lp = sub.lin.lethargy[i], sp = sub.lin.sigma[i];
    lin_t += sub.weights[i] * (it.lethargy[i] * sp + lp * it.sigma[i] - lp * sp);
  }
  it.t_lap_linearized = lin_t;
  it.tightness = evaluate_tightness(it, track, derivs, p);
  return it;
}

Eigen::VectorXd pack_iterate(const TrajectoryIterate& it, const Subproblem& sub) {
  const Layout& L = sub.layout;
  const Scales& sc = sub.scales;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(L.num_vars);
  for (std::size_t i = 0; i < it.size(); ++i) {
    auto set = [&](int f, double v) { x[L.var(static_cast<int>(i), f)] = v; };
    set(kN, it.path.n[i]);
    set(kDn, it.path.dn[i]);
    set(kDdn, it.path.ddn[i]);
    set(kE, it.E[i] / sc.energy);
    set(kH, it.dEdsref[i] / sc.force);
    set(kSigma, it.sigma[i]);
    set(kLethargy, it.lethargy[i] * sc.speed);
    set(kV, it.v[i] / sc.speed);
    set(kFc, it.Fc[i] / sc.force);
    set(kFxR, it.Fx[kRear][i] / sc.force);
    set(kFxF, it.Fx[kFront][i] / sc.force);
    set(kFwR, it.Fw[kRear][i] / sc.force);
    set(kFwF, it.Fw[kFront][i] / sc.force);
    set(kFzsR, it.Fz_star[kRear][i] / sc.force);
    set(kFzsF, it.Fz_star[kFront][i] / sc.force);
  }
  if (L.energy && !it.F_mot.empty()) {
    for (std::size_t i = 0; i < it.size(); ++i) {
      const int ii = static_cast<int>(i);
      x[L.energy_var(ii, kEng)] = it.F_eng[i] / sc.force;
      x[L.energy_var(ii, kMot)] = it.F_mot[i] / sc.force;
      x[L.energy_var(ii, kBrkR)] = it.F_brk[kRear][i] / sc.force;
      x[L.energy_var(ii, kBrkF)] = it.F_brk[kFront][i] / sc.force;
    }
    for (int j = 0; j < L.battery_states; ++j) {
      x[L.battery_var(j)] = it.battery[static_cast<std::size_t>(j)] / sc.energy;
    }
  }
  return x;
}

Tightness evaluate_tightness(const TrajectoryIterate& it, const TrackRibbon& track,
                             const RibbonDerivatives& derivs, const VehicleParams& p) {
  const std::size_t P = it.size();
  Tightness t;
  t.path.resize(P);
  t.lethargy.resize(P);
  t.energy.resize(P);
  for (int a = 0; a < 2; ++a) {
    t.load[a].assign(P, 0.0);
    t.grip_active[a].assign(P, false);
  }
  const double load_floor = 0.01 * p.m * p.g;
  for (std::size_t i = 0; i < P; ++i) {
    const double len = d1_of(derivs, track, i, it.path.n[i], it.path.dn[i]).norm();
    t.path[i] = (it.sigma[i] - len) / len;
    t.lethargy[i] = it.lethargy[i] * it.v[i] - 1.0;
    t.energy[i] = (it.E[i] - 0.5 * p.m * it.v[i] * it.v[i]) / it.E[i];
    t.max_path = std::max(t.max_path, std::abs(t.path[i]));
    t.max_lethargy = std::max(t.max_lethargy, std::abs(t.lethargy[i]));
    t.max_energy = std::max(t.max_energy, std::abs(t.energy[i]));
    bool any = false;
    for (int a = 0; a < 2; ++a) {
      const auto ax = static_cast<Axle>(a);
      const double bound = effective_load_bound(p, ax, it.Fz[a][i], it.dFz[a][i]);
      const double scale = std::max(it.Fz[a][i], load_floor);
      t.load[a][i] = (bound - it.Fz_star[a][i]) / scale;
      const double use =
          std::hypot(it.Fx[a][i] / p.mu_x[ax], it.Fy[a][i] / p.mu_y[ax]);
      const bool active = it.Fz_star[a][i] - use <= 1e-6 * scale;
      t.grip_active[a][i] = active;
      if (active) {
        any = true;
        t.max_load_active = std::max(t.max_load_active, std::abs(t.load[a][i]));
      }
    }
    if (any) ++t.active_points;
  }
  return t;
}

double NonlinearResiduals::max() const {
  return std::max({centrifugal, slope, lethargy, energy_transform, lap_time});
}

NonlinearResiduals nonlinear_residuals(const TrajectoryIterate& it, const TrackRibbon& track,
                                       const RibbonDerivatives& derivs, const VehicleParams& p) {
  NonlinearResiduals r;
  const double F0 = p.m * p.g;
  for (std::size_t i = 0; i < it.size(); ++i) {
    const Vec3 d1 = d1_of(derivs, track, i, it.path.n[i], it.path.dn[i]);
    const Vec3 d2 = d2_of(derivs, track, i, it.path.n[i], it.path.dn[i], it.path.ddn[i]);
    const double fc = 2.0 * it.E[i] * curvature(d1, d2);
    r.centrifugal = std::max(r.centrifugal, std::abs(it.Fc[i] - fc) / std::max(std::abs(fc), F0));
    const double th = slope_angle(d1);
    r.slope = std::max(r.slope, std::abs(it.theta[i] - th));
    r.lethargy = std::max(r.lethargy, std::abs(it.lethargy[i] * it.v[i] - 1.0));
    const double Fx = it.Fx[kRear][i] + it.Fx[kFront][i];
    const double G =
        Fx - std::cos(it.phi[i]) * std::sin(th) * F0 - p.drag_factor() * it.E[i];
    const double H = G * it.sigma[i];
    r.energy_transform =
        std::max(r.energy_transform, std::abs(it.dEdsref[i] - H) / std::max(std::abs(H), F0));
  }
  if (it.t_lap > 0.0) r.lap_time = std::abs(it.t_lap_linearized - it.t_lap) / it.t_lap;
  return r;
}

}  // namespace apexcvx
