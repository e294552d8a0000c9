#include "apexcvx/cone_kernels.hpp"
#include "apexcvx/conic_program.hpp"
#include "apexcvx/socp_solver.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <limits>
#include <sstream>

using namespace apexcvx;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

SolverSettings serial_settings() {
  SolverSettings s;
  s.exec = Exec::serial;
  return s;
}

}  // namespace

TEST(Solver, NormOfConstantVector) {
  ProgramBuilder pb;
  const int x = pb.add_variable("x");
  pb.add_objective(LinExpr::var(x));
  pb.add_soc(LinExpr::var(x), {LinExpr(1.0), LinExpr(1.0)});
  const auto res = conic_solve(pb.build());
  ASSERT_EQ(res.status, SolveStatus::optimal);
  EXPECT_NEAR(res.x[0], std::sqrt(2.0), 1e-7);
}

TEST(Solver, LethargyGadgetInvertsFixedSpeed) {
  // lambda + v >= |(2, lambda - v)|  <=>  lambda v >= 1
  ProgramBuilder pb;
  const int lam = pb.add_variable("lambda");
  const int v = pb.add_variable("v");
  pb.add_objective(LinExpr::var(lam));
  pb.add_equality(LinExpr({{v, 1.0}}, -50.0));
  pb.add_soc(LinExpr({{lam, 1.0}, {v, 1.0}}), {LinExpr(2.0), LinExpr({{lam, 1.0}, {v, -1.0}})});
  const auto res = conic_solve(pb.build());
  ASSERT_EQ(res.status, SolveStatus::optimal);
  EXPECT_NEAR(res.x[lam], 0.02, 1e-8);
}

TEST(Solver, SmallLinearProgram) {
  // max x + y s.t. x + 2y <= 4, 3x + y <= 6, x, y >= 0  ->  (1.6, 1.2)
  ProgramBuilder pb;
  const int x = pb.add_variable();
  const int y = pb.add_variable();
  pb.add_objective(LinExpr({{x, -1.0}, {y, -1.0}}));
  pb.add_nonneg(LinExpr({{x, -1.0}, {y, -2.0}}, 4.0));
  pb.add_nonneg(LinExpr({{x, -3.0}, {y, -1.0}}, 6.0));
  pb.add_bounds(x, 0.0, kInf);
  pb.add_bounds(y, 0.0, kInf);
  const auto res = conic_solve(pb.build());
  ASSERT_EQ(res.status, SolveStatus::optimal);
  EXPECT_NEAR(res.x[x], 1.6, 1e-7);
  EXPECT_NEAR(res.x[y], 1.2, 1e-7);
}

TEST(Solver, RotatedConeBoundsProduct) {
  // min x s.t. 2 x y >= 9, y = 1.5  ->  x = 3
  ProgramBuilder pb;
  const int x = pb.add_variable();
  const int y = pb.add_variable();
  pb.add_objective(LinExpr::var(x));
  pb.add_equality(LinExpr({{y, 1.0}}, -1.5));
  pb.add_rotated_soc(LinExpr::var(x), LinExpr::var(y), {LinExpr(3.0)});
  const auto res = conic_solve(pb.build());
  ASSERT_EQ(res.status, SolveStatus::optimal);
  EXPECT_NEAR(res.x[x], 3.0, 1e-7);
}

TEST(Solver, DetectsPrimalInfeasibility) {
  ProgramBuilder pb;
  const int x = pb.add_variable();
  pb.add_objective(LinExpr::var(x));
  pb.add_bounds(x, 1.0, 0.0);
  const auto res = conic_solve(pb.build());
  EXPECT_EQ(res.status, SolveStatus::primal_infeasible);
}

TEST(Solver, DetectsUnboundedness) {
  ProgramBuilder pb;
  const int x = pb.add_variable();
  const int y = pb.add_variable();
  pb.add_objective(LinExpr::var(x));
  pb.add_soc(LinExpr({{y, 1.0}}, 1.0), {LinExpr::var(y)});
  pb.add_bounds(x, -kInf, 1.0);
  const auto res = conic_solve(pb.build());
  EXPECT_EQ(res.status, SolveStatus::dual_infeasible);
}

// Builds a random SOCP whose optimum is known by construction: pick a primal
// point x*, slacks s* and multipliers z* that are complementary cone by cone,
// then choose c so that the dual equations hold.
struct Constructed {
  ConicProgram program;
  Eigen::VectorXd x_star;
  double objective = 0.0;
};

Constructed make_constructed_socp(std::uint32_t seed, int n, int p, int num_cones) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> N01(0.0, 1.0);
  std::uniform_int_distribution<int> dim(2, 5);
  std::uniform_real_distribution<double> U(0.5, 2.0);

  ConeDims dims;
  dims.l = n;
  for (int i = 0; i < num_cones; ++i) dims.q.push_back(dim(rng));
  const int m = dims.total();

  Eigen::VectorXd s(m), z(m);
  for (int i = 0; i < dims.l; ++i) {
    // Half the orthant rows active.
    if (i % 2 == 0) {
      s[i] = 0.0;
      z[i] = U(rng);
    } else {
      s[i] = U(rng);
      z[i] = 0.0;
    }
  }
  int off = dims.l;
  for (std::size_t c = 0; c < dims.q.size(); ++c) {
    const int q = dims.q[c];
    Eigen::VectorXd u(q - 1);
    for (int i = 0; i < q - 1; ++i) u[i] = N01(rng);
    u.normalize();
    const double a = U(rng), bsc = U(rng);
    // Boundary pair: s = a (1, u), z = b (1, -u), so s'z = 0.
    s[off] = a;
    s.segment(off + 1, q - 1) = a * u;
    z[off] = bsc;
    z.segment(off + 1, q - 1) = -bsc * u;
    off += q;
  }

  Eigen::MatrixXd Ad(p, n), Gd(m, n);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < n; ++j) Ad(i, j) = N01(rng);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) Gd(i, j) = N01(rng);
  Eigen::VectorXd x(n), y(p);
  for (int j = 0; j < n; ++j) x[j] = N01(rng);
  for (int i = 0; i < p; ++i) y[i] = N01(rng);

  Constructed out;
  auto& P = out.program;
  P.num_vars = n;
  P.A = Ad.sparseView();
  P.G = Gd.sparseView();
  P.b = Ad * x;
  P.h = Gd * x + s;
  P.c = -Ad.transpose() * y - Gd.transpose() * z;
  P.cones = dims;
  out.x_star = x;
  out.objective = P.c.dot(x);
  return out;
}

class ConstructedSocp : public ::testing::TestWithParam<std::uint32_t> {};

TEST_P(ConstructedSocp, RecoversConstructedOptimum) {
  const auto cons = make_constructed_socp(GetParam(), 12, 3, 10);
  for (Exec exec : {Exec::serial, Exec::parallel}) {
    SolverSettings set;
    set.exec = exec;
    const auto res = conic_solve(cons.program, set);
    ASSERT_EQ(res.status, SolveStatus::optimal);
    const double scale = std::max(1.0, std::abs(cons.objective));
    EXPECT_NEAR(res.primal_objective, cons.objective, 1e-6 * scale);
    EXPECT_LT((res.x - cons.x_star).lpNorm<Eigen::Infinity>(), 1e-6);
    EXPECT_LT(cons.program.cone_violation(res.x), 1e-7);
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, ConstructedSocp, ::testing::Range<std::uint32_t>(1, 21));

TEST(Solver, SerialAndParallelAgree) {
  const auto cons = make_constructed_socp(99, 20, 4, 25);
  const auto a = conic_solve(cons.program, serial_settings());
  SolverSettings par;
  par.exec = Exec::parallel;
  const auto b = conic_solve(cons.program, par);
  ASSERT_EQ(a.status, SolveStatus::optimal);
  ASSERT_EQ(b.status, SolveStatus::optimal);
  EXPECT_EQ(a.iterations, b.iterations);
  EXPECT_LT((a.x - b.x).lpNorm<Eigen::Infinity>(), 1e-12);
}

// ---- cone kernels ----

namespace {

struct RandomCone {
  ConeDims dims;
  Eigen::VectorXd s, z, v;
};

RandomCone random_interior(std::uint32_t seed, int l, int soc) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> N01(0.0, 1.0);
  std::uniform_int_distribution<int> dim(2, 6);
  RandomCone rc;
  rc.dims.l = l;
  for (int i = 0; i < soc; ++i) rc.dims.q.push_back(dim(rng));
  const int m = rc.dims.total();
  auto interior = [&](Eigen::VectorXd& x) {
    x.resize(m);
    for (int i = 0; i < l; ++i) x[i] = std::exp(N01(rng));
    int off = l;
    for (int q : rc.dims.q) {
      double nrm = 0.0;
      for (int i = 1; i < q; ++i) {
        x[off + i] = N01(rng);
        nrm += x[off + i] * x[off + i];
      }
      x[off] = std::sqrt(nrm) + std::exp(N01(rng));
      off += q;
    }
  };
  interior(rc.s);
  interior(rc.z);
  rc.v.resize(m);
  for (int i = 0; i < m; ++i) rc.v[i] = N01(rng);
  return rc;
}

}  // namespace

TEST(ConeKernels, ScalingMapsZToLambdaAndSToLambda) {
  const auto rc = random_interior(3, 7, 40);
  const kernels::ConeLayout k(rc.dims);
  kernels::NtScaling w;
  ASSERT_TRUE(kernels::serial::nt_scaling(k, rc.s, rc.z, w));
  Eigen::VectorXd winv_s;
  kernels::serial::apply_Winv(k, w, rc.s, winv_s);
  // W symmetric, so W^{-T} s = W^{-1} s must equal lambda = W z.
  EXPECT_LT((winv_s - w.lambda).lpNorm<Eigen::Infinity>(), 1e-10 * (1.0 + w.lambda.norm()));
  Eigen::VectorXd back, fwd;
  kernels::serial::apply_W(k, w, rc.v, fwd);
  kernels::serial::apply_Winv(k, w, fwd, back);
  EXPECT_LT((back - rc.v).lpNorm<Eigen::Infinity>(), 1e-10);
}

TEST(ConeKernels, DivideInvertsProduct) {
  const auto rc = random_interior(4, 5, 30);
  const kernels::ConeLayout k(rc.dims);
  Eigen::VectorXd prod, quo;
  kernels::serial::jordan_product(k, rc.s, rc.v, prod);
  kernels::serial::jordan_divide(k, rc.s, prod, quo);
  EXPECT_LT((quo - rc.v).lpNorm<Eigen::Infinity>(), 1e-9);
}

TEST(ConeKernels, MaxStepLandsOnBoundary) {
  const auto rc = random_interior(5, 0, 50);
  const kernels::ConeLayout k(rc.dims);
  Eigen::VectorXd d = -3.0 * rc.z;
  d += rc.v;
  const double a = kernels::serial::max_step(k, rc.s, d);
  ASSERT_TRUE(std::isfinite(a));
  const Eigen::VectorXd edge = rc.s + a * d;
  EXPECT_NEAR(kernels::serial::min_eigenvalue(k, edge), 0.0, 1e-9);
  const Eigen::VectorXd inside = rc.s + 0.999 * a * d;
  EXPECT_GT(kernels::serial::min_eigenvalue(k, inside), 0.0);
}

TEST(ConeKernels, SerialAndOpenMpDriversAgreeExactly) {
  const auto rc = random_interior(6, 300, 500);
  const kernels::ConeLayout k(rc.dims);
  kernels::NtScaling ws, wp;
  ASSERT_TRUE(kernels::serial::nt_scaling(k, rc.s, rc.z, ws));
  ASSERT_TRUE(kernels::omp::nt_scaling(k, rc.s, rc.z, wp));
  EXPECT_EQ(ws.lambda, wp.lambda);
  EXPECT_EQ(ws.wbar, wp.wbar);
  Eigen::VectorXd a, b;
  kernels::serial::apply_W(k, ws, rc.v, a);
  kernels::omp::apply_W(k, wp, rc.v, b);
  EXPECT_EQ(a, b);
  kernels::serial::apply_Winv(k, ws, rc.v, a);
  kernels::omp::apply_Winv(k, wp, rc.v, b);
  EXPECT_EQ(a, b);
  kernels::serial::jordan_product(k, rc.s, rc.v, a);
  kernels::omp::jordan_product(k, rc.s, rc.v, b);
  EXPECT_EQ(a, b);
  kernels::serial::jordan_divide(k, rc.s, rc.v, a);
  kernels::omp::jordan_divide(k, rc.s, rc.v, b);
  EXPECT_EQ(a, b);
  EXPECT_EQ(kernels::serial::max_step(k, rc.s, rc.v), kernels::omp::max_step(k, rc.s, rc.v));
  EXPECT_EQ(kernels::serial::min_eigenvalue(k, rc.v), kernels::omp::min_eigenvalue(k, rc.v));
  std::vector<int> slots(static_cast<std::size_t>(k.kkt_slots));
  for (std::size_t i = 0; i < slots.size(); ++i) slots[i] = static_cast<int>(i);
  std::vector<double> va(slots.size()), vb(slots.size());
  kernels::serial::fill_kkt_scaling(k, ws, 1e-8, va.data(), slots);
  kernels::omp::fill_kkt_scaling(k, wp, 1e-8, vb.data(), slots);
  EXPECT_EQ(va, vb);
}

TEST(ProgramBuilder, CanonicalLayoutAndTextDump) {
  ProgramBuilder pb;
  const int x = pb.add_variables(3, "x");
  pb.add_soc(LinExpr::var(x), {LinExpr::var(x + 1)}, "cone");
  pb.add_nonneg(LinExpr({{x + 2, 1.0}}, 1.0), "row");
  pb.add_equality(LinExpr({{x, 1.0}, {x + 1, 2.0}}, -3.0), "eq");
  const auto P = pb.build();
  EXPECT_EQ(P.cones.l, 1);
  ASSERT_EQ(P.cones.q.size(), 1u);
  EXPECT_EQ(P.cones.q[0], 2);
  EXPECT_EQ(P.G.rows(), 3);
  EXPECT_DOUBLE_EQ(P.h[0], 1.0);
  EXPECT_DOUBLE_EQ(P.G.coeff(0, 2), -1.0);
  EXPECT_DOUBLE_EQ(P.b[0], 3.0);
  std::ostringstream os;
  write_program_text(P, os);
  EXPECT_NE(os.str().find("conic_program 3 1 1 1"), std::string::npos);
  EXPECT_NE(os.str().find("tag soc 0 cone"), std::string::npos);
  EXPECT_NO_THROW(P.validate());
}
