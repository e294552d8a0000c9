#include "apexcvx/transcription.hpp"

#include "apexcvx/socp_solver.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

using namespace apexcvx;

namespace {

constexpr double kPi = std::numbers::pi;

struct Grid {
  TrackRibbon track;
  RibbonDerivatives derivs;
};

Grid fixture(TrackKind kind, std::size_t samples) {
  TestTrackParams tp;
  tp.kind = kind;
  tp.samples = samples;
  Grid g;
  g.track = make_test_track(tp);
  g.derivs = differentiate_ribbon(g.track);
  return g;
}

Eigen::VectorXd eq_residual(const ConicProgram& prog, const Eigen::VectorXd& x) {
  return prog.A * x - prog.b;
}

std::map<std::string, double> worst_by_tag(const ConicProgram& prog, const Eigen::VectorXd& x) {
  const Eigen::VectorXd r = eq_residual(prog, x);
  std::map<std::string, double> out;
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    auto& w = out[prog.eq_tags[static_cast<std::size_t>(i)]];
    w = std::max(w, std::abs(r[i]));
  }
  return out;
}

std::vector<Eigen::Index> rows_tagged(const ConicProgram& prog, const std::string& tag) {
  std::vector<Eigen::Index> rows;
  for (std::size_t i = 0; i < prog.eq_tags.size(); ++i) {
    if (prog.eq_tags[i] == tag) rows.push_back(static_cast<Eigen::Index>(i));
  }
  return rows;
}

double signed_curvature(const Vec3& d1, const Vec3& d2) {
  const double q = std::pow(d1.x() * d1.x() + d1.y() * d1.y(), 1.5);
  return (d1.x() * d2.y() - d1.y() * d2.x()) / q;
}

// Smooth periodic offset and its derivatives at reference distance s.
struct Wave {
  double amp = 2.0;
  double k = 0.0;
  double n(double s) const { return amp * std::sin(k * s); }
  double dn(double s) const { return amp * k * std::cos(k * s); }
  double ddn(double s) const { return -amp * k * k * std::sin(k * s); }
};

// An arbitrary iterate that satisfies none of the nonlinear relations.
TrajectoryIterate scrambled(const Grid& g, const VehicleParams& p, double scale, unsigned seed) {
  const Layout L = layout_variables(g.track.size() - 1, g.track.closed);
  TrajectoryIterate it = initial_guess(g.track, g.derivs, p, L, 30.0);
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Wave wave{scale * 2.0, 6.0 * kPi / g.track.length()};
  for (std::size_t i = 0; i < it.size(); ++i) {
    const double s = it.s_ref[i];
    it.path.n[i] = wave.n(s);
    it.path.dn[i] = wave.dn(s);
    it.path.ddn[i] = wave.ddn(s);
    const double v = 40.0 + 15.0 * u(rng);
    it.v[i] = v;
    it.E[i] = 0.5 * p.m * v * v * (1.0 + 0.05 * u(rng));
    it.lethargy[i] = (1.0 + 0.1 * std::abs(u(rng))) / v;
    it.sigma[i] = 1.0 + 0.2 * std::abs(u(rng));
    it.Fc[i] = 5000.0 * u(rng);
    it.Fx[kRear][i] = 6000.0 * u(rng);
    it.Fx[kFront][i] = 3000.0 * u(rng);
    it.dEds[i] = 4000.0 * u(rng);
    it.dEdsref[i] = 4000.0 * u(rng);
  }
  it.t_lap = 25.0;
  return it;
}

Vec3 d1_at(const Grid& g, std::size_t i, double n, double dn) {
  return g.derivs.dP[i] + dn * g.track.N[i] + n * g.derivs.dN[i];
}

Vec3 d2_at(const Grid& g, std::size_t i, double n, double dn, double ddn) {
  return g.derivs.ddP[i] + ddn * g.track.N[i] + 2.0 * dn * g.derivs.dN[i] + n * g.derivs.ddN[i];
}

}  // namespace

TEST(Layout, VariableCountFormula) {
  for (std::size_t samples : {16u, 17u, 64u, 2000u}) {
    const int even = static_cast<int>(samples + samples % 2);
    const Layout closed = layout_variables(samples, true);
    const Layout open = layout_variables(samples, false);
    EXPECT_EQ(closed.points, even);
    EXPECT_EQ(open.points, even + 1);
    EXPECT_EQ(closed.intervals, even / 2);
    EXPECT_EQ(closed.num_vars, 15 * even);
    EXPECT_EQ(open.num_vars, 15 * (even + 1));

    const Layout ce = layout_variables(samples, true, true);
    const Layout oe = layout_variables(samples, false, true);
    EXPECT_EQ(ce.num_vars, 15 * even + 4 * even + even + 1);
    EXPECT_EQ(oe.num_vars, 15 * (even + 1) + 5 * (even + 1));
    EXPECT_EQ(ce.battery_var(ce.battery_states - 1), ce.num_vars - 1);
    EXPECT_EQ(ce.energy_var(ce.points - 1, kBrkF), ce.battery_offset - 1);
  }
  EXPECT_THROW(layout_variables(15, true), std::invalid_argument);
  const Layout L = layout_variables(16, true);
  EXPECT_EQ(L.var(3, kV), 45 + 7);
  EXPECT_EQ(L.wrap(16), 0);
  EXPECT_EQ(layout_variables(16, false).wrap(16), 16);
}

TEST(Layout, EnergyBlockAddsOneBatteryChain) {
  const Layout a = layout_variables(100, true);
  const Layout b = layout_variables(100, true, true);
  EXPECT_EQ(b.num_vars - a.num_vars, 5 * a.points + 1);
  EXPECT_EQ(b.energy_offset, a.num_vars);
}

TEST(HermiteSimpson, ExactForCubics) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    const double a = u(rng), b = u(rng), c = u(rng), d = u(rng);
    const double s0 = u(rng), h = 0.1 + std::abs(u(rng));
    auto x = [&](double s) { return a + b * s + c * s * s + d * s * s * s; };
    auto f = [&](double s) { return b + 2.0 * c * s + 3.0 * d * s * s; };
    const HsDefect e =
        hermite_simpson_defect(h, x(s0), f(s0), x(s0 + h / 2), f(s0 + h / 2), x(s0 + h), f(s0 + h));
    EXPECT_NEAR(e.mid, 0.0, 1e-13);
    EXPECT_NEAR(e.end, 0.0, 1e-13);
  }
}

TEST(HermiteSimpson, QuadraticOffsetAndLinearEnergy) {
  // n'' constant: n quadratic, n' linear, n'' constant.
  const double h = 0.7, c = 0.3;
  auto n = [&](double s) { return 1.0 + 0.5 * s + c * s * s; };
  auto dn = [&](double s) { return 0.5 + 2.0 * c * s; };
  const HsDefect e1 = hermite_simpson_defect(h, n(0), dn(0), n(h / 2), dn(h / 2), n(h), dn(h));
  const HsDefect e2 =
      hermite_simpson_defect(h, dn(0), 2 * c, dn(h / 2), 2 * c, dn(h), 2 * c);
  EXPECT_NEAR(e1.mid, 0.0, 1e-15);
  EXPECT_NEAR(e1.end, 0.0, 1e-15);
  EXPECT_NEAR(e2.mid, 0.0, 1e-15);
  EXPECT_NEAR(e2.end, 0.0, 1e-15);
  // Constant dE/ds_ref.
  const double E0 = 3e5, G = -1234.5, hE = 2.0;
  const HsDefect e3 = hermite_simpson_defect(hE, E0, G, E0 + G * hE / 2, G, E0 + G * hE, G);
  EXPECT_NEAR(e3.mid, 0.0, 1e-9);
  EXPECT_NEAR(e3.end, 0.0, 1e-9);
}

TEST(HermiteSimpson, LeadingErrorTerms) {
  // x = s^4 on [0, h]: cubic Hermite interpolation misses h^4 / 16 at the midpoint.
  const double h = 0.5;
  const HsDefect q = hermite_simpson_defect(h, 0.0, 0.0, std::pow(h / 2, 4), 4 * std::pow(h / 2, 3),
                                            std::pow(h, 4), 4 * std::pow(h, 3));
  EXPECT_NEAR(q.mid, std::pow(h, 4) / 16.0, 1e-15);
  EXPECT_NEAR(q.end, 0.0, 1e-15);
  // x = s^5: Simpson misses h^5 / 24.
  const HsDefect f = hermite_simpson_defect(h, 0.0, 0.0, std::pow(h / 2, 5), 5 * std::pow(h / 2, 4),
                                            std::pow(h, 5), 5 * std::pow(h, 4));
  EXPECT_NEAR(f.end, -std::pow(h, 5) / 24.0, 1e-15);
}

TEST(HermiteSimpson, ManufacturedSolutionOrder) {
  // Exact offset chain sampled on four meshes; the largest collocation
  // residual of the built program must shrink like h^4.
  const VehicleParams p;
  std::vector<double> hs, defects;
  for (std::size_t samples : {64u, 128u, 256u, 512u}) {
    const Grid g = fixture(TrackKind::circle, samples);
    const Layout L = layout_variables(samples, true);
    TrajectoryIterate it = initial_guess(g.track, g.derivs, p, L, 30.0);
    const Wave wave{1.5, 4.0 * kPi / g.track.length()};
    for (std::size_t i = 0; i < it.size(); ++i) {
      it.path.n[i] = wave.n(it.s_ref[i]);
      it.path.dn[i] = wave.dn(it.s_ref[i]);
      it.path.ddn[i] = wave.ddn(it.s_ref[i]);
    }
    const Subproblem sub = assemble_subproblem(g.track, g.derivs, p, it, {});
    const ConicProgram prog = sub.builder.build();
    const auto worst = worst_by_tag(prog, pack_iterate(it, sub));
    hs.push_back(std::log(g.track.length() / static_cast<double>(samples)));
    defects.push_back(std::log(std::max(worst.at("collocation_n"), worst.at("collocation_dn"))));
  }
  double mh = 0, md = 0;
  for (std::size_t i = 0; i < hs.size(); ++i) {
    mh += hs[i] / 4.0;
    md += defects[i] / 4.0;
  }
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < hs.size(); ++i) {
    sxy += (hs[i] - mh) * (defects[i] - md);
    sxx += (hs[i] - mh) * (hs[i] - mh);
  }
  EXPECT_GE(sxy / sxx, 3.5);
}

TEST(Subproblem, Deterministic) {
  const Grid g = fixture(TrackKind::s_bend, 64);
  const VehicleParams p;
  const TrajectoryIterate it = scrambled(g, p, 1.0, 11);
  std::ostringstream a, b;
  write_program_text(build_subproblem(g.track, g.derivs, p, it, {}), a);
  write_program_text(build_subproblem(g.track, g.derivs, p, it, {}), b);
  EXPECT_EQ(a.str(), b.str());
}

TEST(Subproblem, StructurallyConvex) {
  const VehicleParams p;
  for (TrackKind kind : {TrackKind::circle, TrackKind::s_bend}) {
    const Grid g = fixture(kind, 64);
    const Layout L = layout_variables(64, g.track.closed);
    const TrajectoryIterate it = scrambled(g, p, 1.0, 5);
    const ConicProgram prog = build_subproblem(g.track, g.derivs, p, it, {});
    EXPECT_NO_THROW(prog.validate());
    EXPECT_EQ(prog.num_vars, L.num_vars);
    for (int q : prog.cones.q) EXPECT_GE(q, 2);
    const std::set<std::string> allowed = {
        "path_length",     "lethargy",  "kinetic_energy", "vertical_load",
        "friction_ellipse", "load_sensitivity", "cornering_resistance", "power_max",
        "power_min",       "torque",    "corridor"};
    for (const auto& tag : prog.cone_tags) EXPECT_TRUE(allowed.count(tag)) << tag;

    std::map<std::string, int> eq;
    for (const auto& tag : prog.eq_tags) ++eq[tag];
    EXPECT_EQ(eq["centrifugal"], L.points);
    EXPECT_EQ(eq["energy_transform"], L.points);
    EXPECT_EQ(eq["collocation_n"], 2 * L.intervals);
    EXPECT_EQ(eq["collocation_dn"], 2 * L.intervals);
    EXPECT_EQ(eq["collocation_E"], 2 * L.intervals);
    EXPECT_EQ(eq["entry_speed"], g.track.closed ? 0 : 1);
    EXPECT_EQ(eq.count("fixed_line"), 0u);

    TranscriptionOptions fixed;
    fixed.fixed_line = it.path;
    const ConicProgram pf = build_subproblem(g.track, g.derivs, p, it, fixed);
    std::map<std::string, int> eqf;
    for (const auto& tag : pf.eq_tags) ++eqf[tag];
    EXPECT_EQ(eqf["fixed_line"], 3 * L.points);
    EXPECT_EQ(eqf.count("collocation_n"), 0u);
  }
}

TEST(Subproblem, FixedGripVariantDropsCones) {
  const Grid g = fixture(TrackKind::circle, 32);
  const VehicleParams p = VehicleParams{}.fixed_grip_variant();
  const TrajectoryIterate it = scrambled(g, p, 1.0, 5);
  const ConicProgram prog = build_subproblem(g.track, g.derivs, p, it, {});
  int soc_sens = 0, soc_corner = 0;
  const std::size_t first_soc = static_cast<std::size_t>(prog.cones.l);
  for (std::size_t k = first_soc; k < prog.cone_tags.size(); ++k) {
    soc_sens += prog.cone_tags[k] == "load_sensitivity";
    soc_corner += prog.cone_tags[k] == "cornering_resistance";
  }
  EXPECT_EQ(soc_sens, 0);
  EXPECT_EQ(soc_corner, 0);
}

TEST(Subproblem, ExactAtExpansionPoint) {
  const VehicleParams p;
  for (TrackKind kind : {TrackKind::circle, TrackKind::s_bend, TrackKind::oval}) {
    const Grid g = fixture(kind, 128);
    const TrajectoryIterate prev = scrambled(g, p, 1.0, 17);
    const Subproblem sub = assemble_subproblem(g.track, g.derivs, p, prev, {});
    const ConicProgram prog = sub.builder.build();
    const Eigen::VectorXd x = pack_iterate(prev, sub);
    const Eigen::VectorXd r = eq_residual(prog, x);
    const double F0 = p.m * p.g;
    const double kD = p.rho * p.CdA / p.m;

    const auto fc_rows = rows_tagged(prog, "centrifugal");
    const auto et_rows = rows_tagged(prog, "energy_transform");
    ASSERT_EQ(fc_rows.size(), prev.size());
    ASSERT_EQ(et_rows.size(), prev.size());
    for (std::size_t i = 0; i < prev.size(); ++i) {
      const double n = prev.path.n[i], dn = prev.path.dn[i], ddn = prev.path.ddn[i];
      const double kappa = signed_curvature(d1_at(g, i, n, dn), d2_at(g, i, n, dn, ddn));
      const double fc = (prev.Fc[i] - 2.0 * prev.E[i] * kappa) / F0;
      EXPECT_NEAR(r[fc_rows[i]], fc, 1e-10 * std::max(1.0, std::abs(fc)));

      // Flat fixtures: no slope or banking term.
      const double G = prev.Fx[kRear][i] + prev.Fx[kFront][i] - kD * prev.E[i];
      const double et = (prev.dEdsref[i] - prev.sigma[i] * G) / F0;
      EXPECT_NEAR(r[et_rows[i]], et, 1e-10 * std::max(1.0, std::abs(et)));
    }

    // Linearised objective reproduces the quadrature lap time.
    const double h = 2.0 * g.track.length() / static_cast<double>(g.track.size() - 1);
    double t = 0.0;
    for (std::size_t i = 0; i < prev.size(); ++i) {
      double w = (i % 2 == 1) ? 4.0 * h / 6.0 : 2.0 * h / 6.0;
      if (!g.track.closed && (i == 0 || i + 1 == prev.size())) w = h / 6.0;
      t += w * prev.lethargy[i] * prev.sigma[i];
    }
    EXPECT_NEAR(prog.objective(x) * sub.scales.time, t, 1e-9 * t);
  }
}

TEST(Subproblem, CentrifugalLinearisationIsFirstOrder) {
  // Moving the line by eps away from the expansion point leaves an O(eps^2)
  // gap between the linearised row and the exact centrifugal force.
  const VehicleParams p;
  const Grid g = fixture(TrackKind::oval, 128);
  const TrajectoryIterate prev = scrambled(g, p, 1.0, 23);
  const Subproblem sub = assemble_subproblem(g.track, g.derivs, p, prev, {});
  const ConicProgram prog = sub.builder.build();
  const auto rows = rows_tagged(prog, "centrifugal");
  const Wave shift{1.0, 10.0 * kPi / g.track.length()};
  auto gap = [&](double eps) {
    TrajectoryIterate it = prev;
    double worst = 0.0;
    for (std::size_t i = 0; i < it.size(); ++i) {
      it.path.n[i] += eps * shift.n(it.s_ref[i]);
      it.path.dn[i] += eps * shift.dn(it.s_ref[i]);
      it.path.ddn[i] += eps * shift.ddn(it.s_ref[i]);
    }
    const Eigen::VectorXd r = eq_residual(prog, pack_iterate(it, sub));
    for (std::size_t i = 0; i < it.size(); ++i) {
      const double k = signed_curvature(
          d1_at(g, i, it.path.n[i], it.path.dn[i]),
          d2_at(g, i, it.path.n[i], it.path.dn[i], it.path.ddn[i]));
      const double exact = (it.Fc[i] - 2.0 * it.E[i] * k) / (p.m * p.g);
      worst = std::max(worst, std::abs(r[rows[i]] - exact));
    }
    return worst;
  };
  const double g1 = gap(0.1), g2 = gap(0.05), g3 = gap(0.025);
  EXPECT_GT(g1, 0.0);
  EXPECT_NEAR(g1 / g2, 4.0, 0.4);
  EXPECT_NEAR(g2 / g3, 4.0, 0.4);
}

TEST(Subproblem, StraightTrackHasNoCurvatureCoupling) {
  const VehicleParams p;
  TestTrackParams tp;
  tp.kind = TrackKind::straight;
  tp.samples = 100;
  Grid g;
  g.track = make_test_track(tp);
  g.derivs = differentiate_ribbon(g.track);
  const Layout L = layout_variables(100, false);
  const TrajectoryIterate prev = initial_guess(g.track, g.derivs, p, L, 30.0);
  const ConicProgram prog = build_subproblem(g.track, g.derivs, p, prev, {});
  const auto rows = rows_tagged(prog, "centrifugal");
  const SparseMatrix At = prog.A.transpose();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const int pt = static_cast<int>(i);
    for (SparseMatrix::InnerIterator e(At, rows[i]); e; ++e) {
      const int col = static_cast<int>(e.row());
      if (col == L.var(pt, kFc) || col == L.var(pt, kDdn)) continue;
      ADD_FAILURE() << "centrifugal row " << i << " couples variable " << col;
    }
    EXPECT_DOUBLE_EQ(prog.b[rows[i]], 0.0);
  }
}

TEST(Subproblem, StraightOptimumIsFullAcceleration) {
  const VehicleParams p;
  TestTrackParams tp;
  tp.kind = TrackKind::straight;
  tp.samples = 100;
  Grid g;
  g.track = make_test_track(tp);
  g.derivs = differentiate_ribbon(g.track);
  const Layout L = layout_variables(100, false);
  const TrajectoryIterate prev = initial_guess(g.track, g.derivs, p, L, 30.0);
  const Subproblem sub = assemble_subproblem(g.track, g.derivs, p, prev, {});
  const SolveResult res = conic_solve(sub.builder.build(), {});
  ASSERT_TRUE(is_success(res.status));
  const TrajectoryIterate it = extract_iterate(res.x, sub, g.track, g.derivs, p);
  EXPECT_NEAR(it.v.front(), 30.0, 1e-4);
  for (std::size_t i = 0; i < it.size(); ++i) {
    if (i > 0) {
      EXPECT_GT(it.v[i], it.v[i - 1]);
    }
    EXPECT_NEAR(it.path.ddn[i], 0.0, 1e-5);
    const auto amax = max_longitudinal_accel(p, it.v[i], 0.0);
    ASSERT_TRUE(amax.has_value());
    EXPECT_NEAR(it.dEds[i] / p.m, *amax, 2e-3 * std::abs(*amax)) << "point " << i;
  }
}

TEST(Subproblem, CircleFixedLineMatchesSteadyCornering) {
  const VehicleParams p;
  const Grid g = fixture(TrackKind::circle, 200);
  const Layout L = layout_variables(200, true);
  const TrajectoryIterate prev = initial_guess(g.track, g.derivs, p, L, 30.0);
  TranscriptionOptions opt;
  opt.fixed_line = PathState::zeros(prev.size());
  const Subproblem sub = assemble_subproblem(g.track, g.derivs, p, prev, opt);
  const SolveResult res = conic_solve(sub.builder.build(), {});
  ASSERT_TRUE(is_success(res.status));
  const TrajectoryIterate it = extract_iterate(res.x, sub, g.track, g.derivs, p);
  const double v_ref = steady_cornering_speed(p, 1.0 / 100.0);
  for (std::size_t i = 0; i < it.size(); ++i) {
    EXPECT_NEAR(it.v[i], v_ref, 5e-3 * v_ref) << "point " << i;
  }
}

TEST(Subproblem, TrustRegionClipsCorridor) {
  const VehicleParams p;
  const Grid g = fixture(TrackKind::circle, 32);
  const Layout L = layout_variables(32, true);
  TrajectoryIterate prev = initial_guess(g.track, g.derivs, p, L, 30.0);
  TranscriptionOptions opt;
  opt.trust_radius = 0.5;
  const ConicProgram prog = build_subproblem(g.track, g.derivs, p, prev, opt);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(prog.num_vars);
  for (int pt = 0; pt < L.points; ++pt) {
    for (double n : {0.49, 0.51, -0.49, -0.51}) {
      x.setZero();
      x[L.var(pt, kN)] = n;
      const Eigen::VectorXd slack = prog.h - prog.G * x;
      double worst = 0.0;
      for (int r = 0; r < prog.cones.l; ++r) {
        if (prog.cone_tags[static_cast<std::size_t>(r)] != "corridor") continue;
        worst = std::min(worst, slack[r]);
      }
      if (std::abs(n) < 0.5) {
        EXPECT_GE(worst, 0.0);
      } else {
        EXPECT_LT(worst, 0.0);
      }
    }
  }
  opt.trust_radius = 0.5;
  prev.path.n.assign(prev.size(), 20.0);
  EXPECT_THROW(build_subproblem(g.track, g.derivs, p, prev, opt), std::invalid_argument);
}

TEST(Subproblem, RejectsBadInput) {
  const VehicleParams p;
  const Grid g = fixture(TrackKind::circle, 32);
  const Layout L = layout_variables(32, true);
  TrajectoryIterate prev = initial_guess(g.track, g.derivs, p, L, 30.0);
  TrajectoryIterate shorter = prev;
  shorter.s_ref.pop_back();
  EXPECT_THROW(build_subproblem(g.track, g.derivs, p, shorter, {}), std::invalid_argument);
  TranscriptionOptions opt;
  opt.fixed_line = PathState::zeros(5);
  EXPECT_THROW(build_subproblem(g.track, g.derivs, p, prev, opt), std::invalid_argument);
  EXPECT_THROW(initial_guess(g.track, g.derivs, p, L, 0.0), std::invalid_argument);
  RibbonDerivatives bad = g.derivs;
  bad.dP.pop_back();
  EXPECT_THROW(build_subproblem(g.track, bad, p, prev, {}), std::invalid_argument);
}

TEST(Iterate, PackExtractRoundTrip) {
  const VehicleParams p;
  const Grid g = fixture(TrackKind::s_bend, 64);
  const TrajectoryIterate prev = scrambled(g, p, 1.0, 29);
  const Subproblem sub = assemble_subproblem(g.track, g.derivs, p, prev, {});
  const Eigen::VectorXd x = pack_iterate(prev, sub);
  const TrajectoryIterate back = extract_iterate(x, sub, g.track, g.derivs, p);
  ASSERT_EQ(back.size(), prev.size());
  for (std::size_t i = 0; i < prev.size(); ++i) {
    EXPECT_NEAR(back.path.n[i], prev.path.n[i], 1e-12);
    EXPECT_NEAR(back.path.dn[i], prev.path.dn[i], 1e-12);
    EXPECT_NEAR(back.E[i], prev.E[i], 1e-12 * prev.E[i]);
    EXPECT_NEAR(back.v[i], prev.v[i], 1e-12 * prev.v[i]);
    EXPECT_NEAR(back.lethargy[i], prev.lethargy[i], 1e-15);
    EXPECT_NEAR(back.sigma[i], prev.sigma[i], 1e-15);
    EXPECT_NEAR(back.Fc[i], prev.Fc[i], 1e-9);
    EXPECT_NEAR(back.Fx[kRear][i], prev.Fx[kRear][i], 1e-9);
    EXPECT_NEAR(back.dEdsref[i], prev.dEdsref[i], 1e-9);
  }
  EXPECT_TRUE(pack_iterate(back, sub).isApprox(x, 1e-14));
  EXPECT_THROW(extract_iterate(Eigen::VectorXd::Zero(3), sub, g.track, g.derivs, p),
               std::invalid_argument);
}

TEST(Iterate, ExactLapTimeUsesQuadrature) {
  const VehicleParams p;
  const Grid g = fixture(TrackKind::circle, 64);
  const Layout L = layout_variables(64, true);
  const TrajectoryIterate it = initial_guess(g.track, g.derivs, p, L, 25.0);
  // sigma comes from spline derivatives of the sampled circle.
  EXPECT_NEAR(it.t_lap, g.track.length() / 25.0, 1e-5 * it.t_lap);
  const TrajectoryIterate s = scrambled(g, p, 1.0, 31);
  const Subproblem sub = assemble_subproblem(g.track, g.derivs, p, s, {});
  const TrajectoryIterate back = extract_iterate(pack_iterate(s, sub), sub, g.track, g.derivs, p);
  EXPECT_NEAR(back.t_lap, back.t_lap_linearized, 1e-12);
  double sum_w = 0.0;
  for (double w : sub.weights) sum_w += w;
  EXPECT_NEAR(sum_w, g.track.length(), 1e-9);
}

TEST(Tightness, GapsOfKnownIterate) {
  const VehicleParams p;
  const Grid g = fixture(TrackKind::circle, 64);
  const Layout L = layout_variables(64, true);
  TrajectoryIterate it = initial_guess(g.track, g.derivs, p, L, 30.0);
  Tightness t = evaluate_tightness(it, g.track, g.derivs, p);
  EXPECT_NEAR(t.max_path, 0.0, 1e-12);
  EXPECT_NEAR(t.max_lethargy, 0.0, 1e-12);
  EXPECT_NEAR(t.max_energy, 0.0, 1e-12);
  for (std::size_t i = 0; i < it.size(); ++i) {
    it.sigma[i] *= 1.02;
    it.lethargy[i] *= 1.03;
  }
  t = evaluate_tightness(it, g.track, g.derivs, p);
  EXPECT_NEAR(t.max_path, 0.02, 1e-9);
  EXPECT_NEAR(t.max_lethargy, 0.03, 1e-9);
}

TEST(Residuals, ZeroOnConsistentCircleState) {
  const VehicleParams p;
  const Grid g = fixture(TrackKind::circle, 64);
  const Layout L = layout_variables(64, true);
  TrajectoryIterate it = initial_guess(g.track, g.derivs, p, L, 30.0);
  // Steady cruise: drive force balances drag, no energy change.
  for (std::size_t i = 0; i < it.size(); ++i) {
    const double drag = p.rho * p.CdA / p.m * it.E[i];
    it.Fx[kRear][i] = drag;
    it.dEds[i] = 0.0;
    it.dEdsref[i] = 0.0;
  }
  const NonlinearResiduals r = nonlinear_residuals(it, g.track, g.derivs, p);
  EXPECT_LT(r.max(), 1e-9);
  const double fc = it.Fc[3];
  it.Fc[3] *= 1.1;
  EXPECT_NEAR(nonlinear_residuals(it, g.track, g.derivs, p).centrifugal,
              0.1 * std::abs(fc) / std::max(std::abs(fc), p.m * p.g), 1e-9);
}
