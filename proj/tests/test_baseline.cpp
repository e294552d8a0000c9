#include "apexcvx/baseline.hpp"

#include "apexcvx/scp.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace apexcvx;

namespace {

struct Grid {
  TrackRibbon track;
  RibbonDerivatives derivs;
};

Grid fixture(TestTrackParams tp) {
  Grid g;
  g.track = make_test_track(tp);
  g.derivs = differentiate_ribbon(g.track);
  return g;
}

Grid fixture(TrackKind kind, std::size_t samples) {
  TestTrackParams tp;
  tp.kind = kind;
  tp.samples = samples;
  return fixture(tp);
}

double peak(const std::vector<double>& k) {
  double m = 0.0;
  for (double x : k) m = std::max(m, std::abs(x));
  return m;
}

std::vector<double> uniform_s(std::size_t rows, double ds) {
  std::vector<double> s(rows);
  for (std::size_t i = 0; i < rows; ++i) s[i] = ds * static_cast<double>(i);
  return s;
}

// Largest |(v1^2 - v0^2) / 2 ds| excess over the ggv limits along a profile.
double worst_accel_excess(const SpeedProfile& prof, const std::vector<double>& kappa,
                          const VehicleParams& p) {
  double worst = 0.0;
  for (std::size_t i = 0; i + 1 < prof.v.size(); ++i) {
    const double v0 = prof.v[i], v1 = prof.v[i + 1];
    const double a = (v1 * v1 - v0 * v0) / (2.0 * (prof.s[i + 1] - prof.s[i]));
    const double vm = 0.5 * (v0 + v1);
    const double ay = vm * vm * 0.5 * (std::abs(kappa[i]) + std::abs(kappa[i + 1]));
    const auto hi = max_longitudinal_accel(p, vm, ay);
    const auto lo = min_longitudinal_accel(p, vm, ay);
    if (hi) worst = std::max(worst, a - *hi);
    if (lo) worst = std::max(worst, *lo - a);
  }
  return worst;
}

}  // namespace

TEST(MinCurvature, StraightStaysOnCentreline) {
  const Grid g = fixture(TrackKind::straight, 200);
  const PathState n = min_curvature_line(g.track, g.derivs, 2.0);
  ASSERT_EQ(n.size(), g.track.size());
  for (std::size_t i = 0; i < n.size(); ++i) {
    EXPECT_NEAR(n.n[i], 0.0, 1e-5);
    EXPECT_NEAR(n.ddn[i], 0.0, 1e-6);
  }
}

TEST(MinCurvature, ArcPeakDropsAndCorridorHolds) {
  TestTrackParams tp;
  tp.kind = TrackKind::s_bend;
  tp.samples = 400;
  tp.arc_deg = 90.0;
  tp.half_width = 10.0;
  const Grid g = fixture(tp);
  const PathState n = min_curvature_line(g.track, g.derivs, 2.0);
  const LineGeometry centre = line_geometry(g.track, g.derivs, PathState::zeros(g.track.size()));
  const LineGeometry mc = line_geometry(g.track, g.derivs, n);
  EXPECT_LT(peak(mc.kappa), peak(centre.kappa));
  std::vector<double> bent;
  for (double k : centre.kappa) {
    if (std::abs(k) > 0.005) bent.push_back(std::abs(k));
  }
  std::nth_element(bent.begin(), bent.begin() + static_cast<std::ptrdiff_t>(bent.size() / 2),
                   bent.end());
  EXPECT_NEAR(bent[bent.size() / 2], 0.01, 1e-5);
  for (std::size_t i = 0; i < n.size(); ++i) {
    EXPECT_GE(n.n[i], g.track.n_min[i] + 1.0 - 1e-6);
    EXPECT_LE(n.n[i], g.track.n_max[i] - 1.0 + 1e-6);
  }
  EXPECT_THROW(min_curvature_line(g.track, g.derivs, 25.0), std::exception);
}

TEST(MinCurvature, ClosedLineIsPeriodic) {
  const Grid g = fixture(TrackKind::oval, 300);
  const PathState n = min_curvature_line(g.track, g.derivs, 2.0);
  ASSERT_EQ(n.size(), g.track.size() - 1);
  const LineGeometry centre = line_geometry(g.track, g.derivs, PathState::zeros(n.size()));
  const LineGeometry mc = line_geometry(g.track, g.derivs, n);
  EXPECT_LT(peak(mc.kappa), peak(centre.kappa));
  EXPECT_NEAR(mc.kappa.front(), mc.kappa.back(), 1e-6);
}

TEST(ApexProfile, CircleRunsAtSteadyCorneringSpeed) {
  const VehicleParams p;
  const std::size_t rows = 401;
  const std::vector<double> kappa(rows, 0.01);
  const SpeedProfile prof =
      apex_speed_profile(kappa, uniform_s(rows, 2.0 * M_PI * 100.0 / 400.0), true, p);
  const double v_ref = steady_cornering_speed(p, 0.01);
  // Independent check against the envelope: the pure-cornering point has a_x = 0.
  const auto ay = max_lateral_accel(p, v_ref, 0.0);
  ASSERT_TRUE(ay.has_value());
  EXPECT_NEAR(*ay, v_ref * v_ref * 0.01, 5e-3 * *ay);
  for (std::size_t i = 0; i < rows; ++i) {
    EXPECT_NEAR(prof.v[i], v_ref, 5e-3 * v_ref);
    EXPECT_EQ(prof.regime[i], Regime::corner_apex);
    EXPECT_FALSE(prof.flagged[i]);
  }
  EXPECT_NEAR(prof.lap_time, 2.0 * M_PI * 100.0 / v_ref, 1e-3);
}

TEST(ApexProfile, StraightIsFullAcceleration) {
  const VehicleParams p;
  const std::size_t rows = 501;
  const std::vector<double> kappa(rows, 0.0);
  ApexOptions opt;
  opt.entry_speed = 20.0;
  const SpeedProfile prof = apex_speed_profile(kappa, uniform_s(rows, 1.0), false, p, opt);
  EXPECT_DOUBLE_EQ(prof.v.front(), 20.0);
  for (std::size_t i = 1; i < rows; ++i) {
    ASSERT_GT(prof.v[i], prof.v[i - 1]);
    const double a = (prof.v[i] * prof.v[i] - prof.v[i - 1] * prof.v[i - 1]) / 2.0;
    const double vm = 0.5 * (prof.v[i] + prof.v[i - 1]);
    EXPECT_NEAR(a, *max_longitudinal_accel(p, vm, 0.0), 1e-2 * std::abs(a));
    EXPECT_NE(prof.regime[i], Regime::braking);
  }
}

TEST(ApexProfile, MinCompositionAndAccelerationLimits) {
  const VehicleParams p;
  const Grid g = fixture(TrackKind::s_bend, 800);
  const LineGeometry line = line_geometry(g.track, g.derivs, PathState::zeros(g.track.size()));
  const SpeedProfile prof = apex_speed_profile(line.kappa, line.s, false, p);
  bool braked = false;
  for (std::size_t i = 0; i < prof.v.size(); ++i) {
    EXPECT_GT(prof.v[i], 0.0);
    EXPECT_LE(prof.v[i], prof.limit[i] * (1.0 + 1e-12));
    braked = braked || prof.regime[i] == Regime::braking;
  }
  EXPECT_TRUE(braked);
  // The second-order passes may overshoot the local limit slightly at a step.
  const double amax = *max_longitudinal_accel(p, 30.0, 0.0);
  EXPECT_LT(worst_accel_excess(prof, line.kappa, p), 0.02 * amax);
}

TEST(ApexProfile, ClosedProfileIsPeriodic) {
  const VehicleParams p;
  const Grid g = fixture(TrackKind::oval, 600);
  const LineGeometry line = line_geometry(g.track, g.derivs, PathState::zeros(g.track.size() - 1));
  const SpeedProfile prof = apex_speed_profile(line.kappa, line.s, true, p);
  EXPECT_DOUBLE_EQ(prof.v.front(), prof.v.back());
  EXPECT_LT(worst_accel_excess(prof, line.kappa, p), 0.02 * *max_longitudinal_accel(p, 30.0, 0.0));
}

TEST(ApexProfile, RefinementChangesLapTimeLittle) {
  const VehicleParams p;
  for (TrackKind kind : {TrackKind::s_bend, TrackKind::oval}) {
    double t[2];
    int k = 0;
    for (std::size_t samples : {1000u, 2000u}) {
      const Grid g = fixture(kind, samples);
      const std::size_t pts = g.track.closed ? g.track.size() - 1 : g.track.size();
      const LineGeometry line = line_geometry(g.track, g.derivs, PathState::zeros(pts));
      t[k++] = apex_speed_profile(line.kappa, line.s, g.track.closed, p).lap_time;
    }
    EXPECT_LT(std::abs(t[1] - t[0]) / t[1], 2e-3) << to_string(kind);
  }
}

TEST(ApexProfile, SerialMatchesParallel) {
  const VehicleParams p;
  const Grid g = fixture(TrackKind::oval, 400);
  const LineGeometry line = line_geometry(g.track, g.derivs, PathState::zeros(g.track.size() - 1));
  ApexOptions a, b;
  a.exec = Exec::serial;
  b.exec = Exec::parallel;
  const SpeedProfile pa = apex_speed_profile(line.kappa, line.s, true, p, a);
  const SpeedProfile pb = apex_speed_profile(line.kappa, line.s, true, p, b);
  EXPECT_EQ(pa.v, pb.v);
  EXPECT_EQ(pa.regime, pb.regime);
  EXPECT_EQ(pa.lap_time, pb.lap_time);
}

TEST(ApexProfile, RejectsBadInput) {
  const VehicleParams p;
  EXPECT_THROW(apex_speed_profile({0.0, 0.0}, {0.0, 1.0}, false, p), std::invalid_argument);
  EXPECT_THROW(apex_speed_profile({0.0, 0.0, 0.0}, {0.0, 1.0, 1.0}, false, p),
               std::invalid_argument);
  EXPECT_THROW(apex_speed_profile({0.0, NAN, 0.0}, {0.0, 1.0, 2.0}, false, p),
               std::invalid_argument);
}

TEST(ApexProfile, UnreachableCornerIsFlagged) {
  const VehicleParams p;
  std::vector<double> kappa(101, 0.0);
  kappa[50] = 1000.0;
  const SpeedProfile prof = apex_speed_profile(kappa, uniform_s(101, 1.0), false, p);
  EXPECT_TRUE(prof.flagged[50]);
  EXPECT_EQ(std::count(prof.flagged.begin(), prof.flagged.end(), true), 1);
  EXPECT_GT(prof.v[50], 0.0);
}

class SBendLines : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    grid_ = new Grid(fixture(TrackKind::s_bend, 400));
    SCPConfig cfg;
    free_ = new SolveReport(solve_min_lap_time(grid_->track, {}, cfg));
    mc_ = new PathState(min_curvature_line(free_->track, free_->derivs, 2.0));
    fixed_ = new SolveReport(solve_fixed_trajectory(free_->track, {}, cfg, *mc_));
  }
  static void TearDownTestSuite() {
    delete grid_;
    delete free_;
    delete mc_;
    delete fixed_;
  }
  static Grid* grid_;
  static SolveReport* free_;
  static PathState* mc_;
  static SolveReport* fixed_;
};

Grid* SBendLines::grid_ = nullptr;
SolveReport* SBendLines::free_ = nullptr;
PathState* SBendLines::mc_ = nullptr;
SolveReport* SBendLines::fixed_ = nullptr;

TEST_F(SBendLines, ShortPeaksAgainstSustainedCurvature) {
  ASSERT_EQ(free_->status, SCPStatus::converged);
  const LineGeometry mt = line_geometry(free_->track, free_->derivs, free_->final_iterate.path);
  const LineGeometry mc = line_geometry(free_->track, free_->derivs, *mc_);
  const double pk_mt = peak(mt.kappa), pk_mc = peak(mc.kappa);
  const CurvatureStats smt = curvature_stats(mt, 0.5 * pk_mt);
  const CurvatureStats smc = curvature_stats(mc, 0.5 * pk_mt);
  std::printf("peak mt %.5f mc %.5f, dwell above %.5f: mt %.1f m, mc %.1f m\n", pk_mt, pk_mc,
              0.5 * pk_mt, smt.dwell, smc.dwell);
  EXPECT_GE(pk_mc, pk_mt);
  EXPECT_GE(smt.dwell, smc.dwell);
  EXPECT_DOUBLE_EQ(smt.peak, pk_mt);
}

TEST_F(SBendLines, CorneringPotentialNotExploited) {
  ASSERT_EQ(fixed_->status, SCPStatus::converged);
  const VehicleParams p;
  const LineGeometry mt = line_geometry(free_->track, free_->derivs, free_->final_iterate.path);
  const LineGeometry mc = line_geometry(free_->track, free_->derivs, *mc_);
  const SpeedProfile pmt = apex_speed_profile(mt.kappa, mt.s, false, p);
  const SpeedProfile pmc = apex_speed_profile(mc.kappa, mc.s, false, p);
  // Somewhere in the corners the min-curvature line can corner faster ...
  double gain = 0.0;
  for (std::size_t i = 0; i < pmt.limit.size(); ++i) {
    const double level = 0.5 * peak(mt.kappa);
    if (std::abs(mt.kappa[i]) < level || std::abs(mc.kappa[i]) < level) continue;
    gain = std::max(gain, pmc.limit[i] - pmt.limit[i]);
  }
  EXPECT_GT(gain, 0.0);
  // ... yet the lap is slower.
  EXPECT_GT(fixed_->t_lap(), free_->t_lap());
  std::printf("cornering gain %.3f m/s; lap %.4f s vs %.4f s\n", gain, fixed_->t_lap(),
              free_->t_lap());
}

TEST_F(SBendLines, ApexOnOptimalLineAgreesWithSCP) {
  const VehicleParams p;
  const LineGeometry mt = line_geometry(free_->track, free_->derivs, free_->final_iterate.path);
  ApexOptions opt;
  opt.entry_speed = 30.0;
  const SpeedProfile prof = apex_speed_profile(mt.kappa, mt.s, false, p, opt);
  const double rel = prof.lap_time / free_->t_lap() - 1.0;
  std::printf("apex %.4f s vs SCP %.4f s (%+.2f%%)\n", prof.lap_time, free_->t_lap(),
              100.0 * rel);
  RecordProperty("apex_vs_scp_percent", std::to_string(100.0 * rel));
  EXPECT_GE(rel, -0.01);
  EXPECT_LE(rel, 0.03);
}
