#include "apexcvx/report.hpp"
#include "apexcvx/svg_plot.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <regex>

using namespace apexcvx;
using apexcvx::testing::slurp;
using apexcvx::testing::spit;
using apexcvx::testing::TempDir;

namespace {

class SolvedRuns : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    SCPConfig cfg;
    cfg.samples = 200;
    TestTrackParams tp;
    tp.samples = 200;
    tp.kind = TrackKind::oval;
    closed_ = new SolveReport(solve_min_lap_time(make_test_track(tp), {}, cfg));
    tp.kind = TrackKind::s_bend;
    open_ = new SolveReport(solve_min_lap_time(make_test_track(tp), {}, cfg));
  }
  static void TearDownTestSuite() {
    delete closed_;
    delete open_;
  }
  static SolveReport* closed_;
  static SolveReport* open_;
};

SolveReport* SolvedRuns::closed_ = nullptr;
SolveReport* SolvedRuns::open_ = nullptr;

int count(const std::string& hay, const std::string& needle) {
  int n = 0;
  for (std::size_t at = hay.find(needle); at != std::string::npos; at = hay.find(needle, at + 1)) {
    ++n;
  }
  return n;
}

}  // namespace

TEST(Csv, RoundTripAndStableBytes) {
  TempDir dir("csv");
  ChannelTable t;
  t.add("s", "m", "distance", {0.0, 1.5, 3.0});
  t.add("v", "m/s", "speed", {10.0, 1.0 / 3.0, -2.5e-7});
  t.add_text("regime", "limit", {"grip", "power", "braking"});
  write_csv(t, dir / "a.csv");
  write_csv(t, dir / "b.csv");
  EXPECT_EQ(slurp(dir / "a.csv"), slurp(dir / "b.csv"));
  const ChannelTable back = read_csv(dir / "a.csv");
  ASSERT_EQ(back.rows(), 3u);
  EXPECT_NEAR(back.at("v").values[1], 1.0 / 3.0, 1e-9);
  EXPECT_NEAR(back.at("v").values[2], -2.5e-7, 1e-12);
  EXPECT_EQ(back.at("regime").text[2], "braking");
  EXPECT_EQ(back.find("missing"), nullptr);
  EXPECT_THROW(back.at("missing"), std::exception);
}

TEST(Csv, RejectsBrokenFiles) {
  TempDir dir("csvbad");
  EXPECT_THROW(read_csv(dir / "none.csv"), std::runtime_error);
  spit(dir / "empty.csv", "");
  EXPECT_THROW(read_csv(dir / "empty.csv"), std::runtime_error);
  spit(dir / "ragged.csv", "a,b\n1,2\n3\n");
  EXPECT_THROW(read_csv(dir / "ragged.csv"), std::runtime_error);
}

TEST_F(SolvedRuns, ChannelsAreConsistent) {
  const VehicleParams p;
  for (const SolveReport* rep : {closed_, open_}) {
    const ChannelTable t = solution_channels(*rep, p);
    const std::size_t pts = rep->final_iterate.size();
    // Closed laps repeat the first point at the end.
    EXPECT_EQ(t.rows(), rep->track.closed ? pts + 1 : pts);
    const auto& s = t.at("s").values;
    const auto& v = t.at("v").values;
    for (std::size_t i = 0; i < t.rows(); ++i) {
      if (i > 0) {
        EXPECT_GT(s[i], s[i - 1]);
      }
      EXPECT_NEAR(t.at("v_kmh").values[i], 3.6 * v[i], 1e-9);
      EXPECT_NEAR(t.at("a_y").values[i], v[i] * v[i] * t.at("kappa").values[i], 1e-6);
    }
    if (rep->track.closed) {
      EXPECT_EQ(t.at("n").values.front(), t.at("n").values.back());
      EXPECT_NEAR(t.at("s_ref").values.back(), rep->track.length(), 1e-9);
    }
    // Trapezoid time along the line against the Simpson lap time.
    EXPECT_NEAR(elapsed_time(t).back(), rep->t_lap(), 1e-3 * rep->t_lap());
    for (const auto& c : t.columns) EXPECT_EQ(c.size(), t.rows()) << c.name;
  }
}

TEST_F(SolvedRuns, CompareIdenticalRunsIsZero) {
  const ChannelTable a = solution_channels(*open_, {});
  const ChannelTable c = compare_channels(a, a);
  for (double d : c.at("dt").values) EXPECT_EQ(d, 0.0);
  for (double d : c.at("dv").values) EXPECT_EQ(d, 0.0);
  const ChannelTable other = solution_channels(*closed_, {});
  EXPECT_THROW(compare_channels(a, other), std::invalid_argument);
}

TEST_F(SolvedRuns, ReportJsonCarriesHistory) {
  const nlohmann::json j = nlohmann::json::parse(report_json(*open_, {}));
  EXPECT_DOUBLE_EQ(j.at("t_lap").get<double>(), open_->t_lap());
  EXPECT_EQ(j.at("history").size(), open_->history.size());
  EXPECT_EQ(j.at("status").get<std::string>(), "converged");
  const ChannelTable conv = convergence_table(*open_);
  EXPECT_EQ(conv.rows(), open_->history.size());
  EXPECT_DOUBLE_EQ(conv.at("t_lap").values.back(), open_->t_lap());
}

TEST_F(SolvedRuns, ManifestListsUnits) {
  const ChannelTable t = solution_channels(*open_, {});
  const nlohmann::json j = nlohmann::json::parse(manifest_json({{"channels.csv", &t}}));
  const auto& cols = j.at("channels.csv");
  ASSERT_EQ(cols.size(), t.columns.size());
  bool found = false;
  for (const auto& c : cols) {
    if (c.at("name") == "v") {
      EXPECT_EQ(c.at("unit"), "m/s");
      found = true;
    }
  }
  EXPECT_TRUE(found);
}

TEST_F(SolvedRuns, ApexProfileChannels) {
  const SolveReport& rep = *open_;
  const LineGeometry g = line_geometry(rep.track, rep.derivs, rep.final_iterate.path);
  const SpeedProfile prof = apex_speed_profile(g.kappa, g.s, false, {});
  const ChannelTable t = profile_channels(rep.track, rep.derivs, rep.final_iterate.path, prof);
  EXPECT_EQ(t.rows(), rep.track.size());
  EXPECT_EQ(t.at("v").values, prof.v);
  EXPECT_NE(t.find("v_corner"), nullptr);
}

TEST(Svg, RendersSeriesAndEscapesText) {
  Plot plot;
  plot.title = "speed <raw> & more";
  plot.xlabel = "s [m]";
  plot.ylabel = "v [m/s]";
  Series a{"free", {0, 1, 2, 3}, {10, 20, 15, 25}};
  Series b{"fixed", {0, 1, 2}, {12, NAN, 14}};
  b.color = palette(1);
  Series c{"ggv", {0.5, 1.5}, {0.2, 0.4}};
  c.markers = true;
  plot.series = {a, b, c};
  const std::string svg = render_svg(plot);
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  EXPECT_NE(svg.find("speed &lt;raw&gt; &amp; more"), std::string::npos);
  EXPECT_EQ(svg.find("<raw>"), std::string::npos);
  EXPECT_EQ(count(svg, "<polyline"), 2);
  EXPECT_EQ(count(svg, "<circle"), 2);
  EXPECT_NE(svg.find(">free<"), std::string::npos);
  EXPECT_NE(svg.find(">fixed<"), std::string::npos);
  EXPECT_EQ(svg.find("nan"), std::string::npos);
  EXPECT_NE(palette(0), palette(1));
}

TEST(Svg, DegenerateDataStillRenders) {
  Plot plot;
  plot.series = {Series{"flat", {1, 1}, {2, 2}}, Series{"empty", {}, {}}};
  plot.equal_aspect = true;
  const std::string svg = render_svg(plot);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  EXPECT_EQ(svg.find("nan"), std::string::npos);
  EXPECT_EQ(svg.find("inf"), std::string::npos);
  TempDir dir("svg");
  write_svg(plot, dir / "p.svg");
  EXPECT_EQ(slurp(dir / "p.svg"), svg);
}
