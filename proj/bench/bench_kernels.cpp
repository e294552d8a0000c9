// Serial reference loops against their OpenMP counterparts.

#include "apexcvx/baseline.hpp"
#include "apexcvx/cone_kernels.hpp"
#include "apexcvx/track.hpp"
#include "apexcvx/vehicle.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace apexcvx;
using apexcvx::kernels::ConeLayout;

namespace {

// Orthant block plus 3- and 4-dimensional cones, the mix a subproblem has.
struct ConeCase {
  ConeLayout k;
  Eigen::VectorXd s, z, dx;

  explicit ConeCase(int points) {
    ConeDims dims;
    dims.l = 6 * points;
    for (int i = 0; i < points; ++i) {
      dims.q.push_back(3);
      dims.q.push_back(4);
      dims.q.push_back(3);
    }
    k = ConeLayout(dims);
    s = kernels::cone_identity(k);
    z = kernels::cone_identity(k);
    dx = Eigen::VectorXd(k.total);
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(-0.3, 0.3);
    for (int i = 0; i < k.total; ++i) {
      s[i] += u(rng);
      z[i] += u(rng);
      dx[i] = u(rng);
    }
  }
};

void nt_scaling(benchmark::State& state, Exec exec) {
  const ConeCase c(static_cast<int>(state.range(0)));
  const kernels::Kernels ops{exec};
  kernels::NtScaling w;
  for (auto _ : state) {
    benchmark::DoNotOptimize(ops.nt_scaling(c.k, c.s, c.z, w));
  }
}

void apply_and_step(benchmark::State& state, Exec exec) {
  const ConeCase c(static_cast<int>(state.range(0)));
  const kernels::Kernels ops{exec};
  kernels::NtScaling w;
  ops.nt_scaling(c.k, c.s, c.z, w);
  Eigen::VectorXd out(c.k.total);
  for (auto _ : state) {
    ops.apply_W(c.k, w, c.dx, out);
    ops.jordan_product(c.k, w.lambda, out, out);
    benchmark::DoNotOptimize(ops.max_step(c.k, c.s, c.dx));
  }
}

void ggv(benchmark::State& state, Exec exec) {
  const VehicleParams p;
  std::vector<double> speeds;
  for (int i = 0; i < state.range(0); ++i) speeds.push_back(10.0 + 80.0 * i / state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(ggv_envelope(p, speeds, 21, exec));
  }
}

void apex(benchmark::State& state, Exec exec) {
  TestTrackParams tp;
  tp.kind = TrackKind::corners;
  tp.samples = static_cast<std::size_t>(state.range(0));
  const TrackRibbon t = make_test_track(tp);
  const RibbonDerivatives d = differentiate_ribbon(t);
  const LineGeometry g = line_geometry(t, d, PathState::zeros(t.size()));
  const VehicleParams p;
  ApexOptions opt;
  opt.exec = exec;
  for (auto _ : state) {
    benchmark::DoNotOptimize(apex_speed_profile(g.kappa, g.s, true, p, opt));
  }
}

}  // namespace

BENCHMARK_CAPTURE(nt_scaling, serial, Exec::serial)->Arg(2000)->Arg(20000);
BENCHMARK_CAPTURE(nt_scaling, parallel, Exec::parallel)->Arg(2000)->Arg(20000);
BENCHMARK_CAPTURE(apply_and_step, serial, Exec::serial)->Arg(2000)->Arg(20000);
BENCHMARK_CAPTURE(apply_and_step, parallel, Exec::parallel)->Arg(2000)->Arg(20000);
BENCHMARK_CAPTURE(ggv, serial, Exec::serial)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(ggv, parallel, Exec::parallel)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(apex, serial, Exec::serial)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(apex, parallel, Exec::parallel)->Arg(1000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
