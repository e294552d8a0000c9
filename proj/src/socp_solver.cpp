#include "apexcvx/socp_solver.hpp"

#include "apexcvx/cone_kernels.hpp"
#include "log.hpp"
#include "sparse_ldl.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>

namespace apexcvx {

std::string to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::optimal_inaccurate: return "optimal_inaccurate";
    case SolveStatus::primal_infeasible: return "primal_infeasible";
    case SolveStatus::dual_infeasible: return "dual_infeasible";
    case SolveStatus::numerical_failure: return "numerical_failure";
    case SolveStatus::iteration_limit: return "iteration_limit";
  }
  return "unknown";
}

bool is_success(SolveStatus status) {
  return status == SolveStatus::optimal || status == SolveStatus::optimal_inaccurate;
}

namespace {

using Eigen::VectorXd;
using kernels::ConeLayout;
using kernels::Kernels;
using kernels::NtScaling;

// Ruiz equilibration: A~ = E A D, G~ = F G D with a single factor for all
// rows of a second-order cone.
struct Equilibration {
  VectorXd D, E, F;
};

Equilibration equilibrate(SparseMatrix& A, SparseMatrix& G, const ConeLayout& k, int iters) {
  const auto n = A.cols();
  Equilibration eq{VectorXd::Ones(n), VectorXd::Ones(A.rows()), VectorXd::Ones(G.rows())};
  constexpr double kMin = 1e-4, kMax = 1e4;
  for (int it = 0; it < iters; ++it) {
    VectorXd col = VectorXd::Zero(n);
    VectorXd rowA = VectorXd::Zero(A.rows());
    VectorXd rowG = VectorXd::Zero(G.rows());
    for (int j = 0; j < A.outerSize(); ++j) {
      for (SparseMatrix::InnerIterator itA(A, j); itA; ++itA) {
        const double v = std::abs(itA.value());
        col[j] = std::max(col[j], v);
        rowA[itA.row()] = std::max(rowA[itA.row()], v);
      }
      for (SparseMatrix::InnerIterator itG(G, j); itG; ++itG) {
        const double v = std::abs(itG.value());
        col[j] = std::max(col[j], v);
        rowG[itG.row()] = std::max(rowG[itG.row()], v);
      }
    }
    for (int c = 0; c < k.num_soc(); ++c) {
      const int off = k.offset[static_cast<std::size_t>(c)];
      const int q = k.q[static_cast<std::size_t>(c)];
      rowG.segment(off, q).setConstant(rowG.segment(off, q).maxCoeff());
    }
    auto step = [&](double norm, double current) {
      if (!(norm > 0.0)) return 1.0;
      const double f = 1.0 / std::sqrt(norm);
      return std::clamp(current * f, kMin, kMax) / current;
    };
    VectorXd dcol(n), drA(A.rows()), drG(G.rows());
    for (Eigen::Index j = 0; j < n; ++j) dcol[j] = step(col[j], eq.D[j]);
    for (Eigen::Index i = 0; i < A.rows(); ++i) drA[i] = step(rowA[i], eq.E[i]);
    for (Eigen::Index i = 0; i < G.rows(); ++i) drG[i] = step(rowG[i], eq.F[i]);
    A = drA.asDiagonal() * A * dcol.asDiagonal();
    G = drG.asDiagonal() * G * dcol.asDiagonal();
    eq.D.array() *= dcol.array();
    eq.E.array() *= drA.array();
    eq.F.array() *= drG.array();
  }
  return eq;
}

// Reduced KKT matrix [reg I, A', G'; A, -reg I, 0; G, 0, -W^2 - reg I],
// stored as its lower triangle with a fixed pattern.
class KktSystem {
 public:
  KktSystem(const SparseMatrix& A, const SparseMatrix& G, const ConeLayout& k, double reg,
            int refinement_steps)
      : n_(static_cast<int>(A.cols())),
        p_(static_cast<int>(A.rows())),
        m_(static_cast<int>(G.rows())),
        reg_(reg),
        refine_(refinement_steps) {
    const int N = n_ + p_ + m_;
    std::vector<Triplet> trips;
    std::vector<double> vals;
    trips.reserve(static_cast<std::size_t>(n_ + p_ + A.nonZeros() + G.nonZeros() + k.kkt_slots));
    auto add = [&](int r, int c, double v) {
      trips.emplace_back(r, c, static_cast<double>(trips.size() + 1));
      vals.push_back(v);
    };
    for (int i = 0; i < n_; ++i) add(i, i, reg);
    for (int j = 0; j < n_; ++j) {
      for (SparseMatrix::InnerIterator it(A, j); it; ++it) {
        add(n_ + static_cast<int>(it.row()), j, it.value());
      }
      for (SparseMatrix::InnerIterator it(G, j); it; ++it) {
        add(n_ + p_ + static_cast<int>(it.row()), j, it.value());
      }
    }
    for (int i = 0; i < p_; ++i) add(n_ + i, n_ + i, -reg);
    const int zoff = n_ + p_;
    const auto first_scaling = trips.size();
    for (int i = 0; i < k.l; ++i) add(zoff + i, zoff + i, -1.0 - reg);
    for (int c = 0; c < k.num_soc(); ++c) {
      const int off = k.offset[static_cast<std::size_t>(c)];
      const int q = k.q[static_cast<std::size_t>(c)];
      for (int j = 0; j < q; ++j) {
        for (int i = j; i < q; ++i) add(zoff + off + i, zoff + off + j, i == j ? -1.0 - reg : 0.0);
      }
    }
    K_.resize(N, N);
    K_.setFromTriplets(trips.begin(), trips.end());
    // Values currently hold 1-based triplet ids; map them to storage slots.
    std::vector<int> slot_of(trips.size());
    for (Eigen::Index s = 0; s < K_.nonZeros(); ++s) {
      slot_of[static_cast<std::size_t>(K_.valuePtr()[s]) - 1] = static_cast<int>(s);
    }
    for (std::size_t t = 0; t < trips.size(); ++t) {
      K_.valuePtr()[slot_of[t]] = vals[t];
    }
    scaling_slots_.assign(slot_of.begin() + static_cast<std::ptrdiff_t>(first_scaling),
                          slot_of.end());
    reg_diag_.resize(N);
    reg_diag_.head(n_).setConstant(reg);
    reg_diag_.tail(p_ + m_).setConstant(-reg);
    std::vector<int> signs(static_cast<std::size_t>(N), -1);
    std::fill(signs.begin(), signs.begin() + n_, 1);
    ldl_.analyze(K_, signs);
  }

  bool factor(const Kernels& kern, const ConeLayout& k, const NtScaling& w) {
    kern.fill_kkt_scaling(k, w, reg_, K_.valuePtr(), scaling_slots_);
    ldl_.factorize(K_, 1e-13, dynamic_reg_);
    return true;
  }

  // Iterative refinement against the unregularised matrix; stops as soon as
  // a correction fails to shrink the residual and keeps the best solution.
  VectorXd solve(const VectorXd& rhs) const {
    VectorXd sol = ldl_.solve(rhs);
    const double scale = 1.0 + rhs.lpNorm<Eigen::Infinity>();
    VectorXd res = rhs - apply_unregularized(sol);
    double err = res.lpNorm<Eigen::Infinity>();
    for (int r = 0; r < refine_ && err > 1e-14 * scale; ++r) {
      const VectorXd trial = sol + ldl_.solve(res);
      VectorXd trial_res = rhs - apply_unregularized(trial);
      const double trial_err = trial_res.lpNorm<Eigen::Infinity>();
      if (!(trial_err < err)) break;
      sol = trial;
      res.swap(trial_res);
      err = trial_err;
    }
    return sol;
  }

 private:
  VectorXd apply_unregularized(const VectorXd& v) const {
    VectorXd out = K_.selfadjointView<Eigen::Lower>() * v;
    out.array() -= reg_diag_.array() * v.array();
    return out;
  }

  int n_, p_, m_;
  double reg_;
  int refine_;
  SparseMatrix K_;
  std::vector<int> scaling_slots_;
  VectorXd reg_diag_;
  double dynamic_reg_ = 2e-7;
  detail::QuasiDefiniteLdl ldl_;
};

NtScaling identity_scaling(const ConeLayout& k) {
  NtScaling w;
  w.d = VectorXd::Ones(k.l);
  w.wbar = VectorXd::Zero(k.total - k.l);
  for (int off : k.offset) w.wbar[off - k.l] = 1.0;
  w.eta = VectorXd::Ones(k.num_soc());
  w.lambda = VectorXd::Zero(k.total);
  return w;
}

struct Stats {
  double pres = 0.0, dres = 0.0, pcost = 0.0, dcost = 0.0, gap = 0.0, relgap = 0.0;
  double pinf = std::numeric_limits<double>::infinity();
  double dinf = std::numeric_limits<double>::infinity();
};

}  // namespace

SolveResult conic_solve(const ConicProgram& prog, const SolverSettings& set) {
  const auto t_start = std::chrono::steady_clock::now();
  prog.validate();
  const ConeLayout k(prog.cones);
  const Kernels kern{set.exec};
  const int n = prog.num_vars;
  const auto p = static_cast<int>(prog.A.rows());
  const int m = k.total;

  SparseMatrix A = prog.A;
  SparseMatrix G = prog.G;
  const Equilibration eq = equilibrate(A, G, k, set.equilibration_iters);
  const VectorXd c = eq.D.cwiseProduct(prog.c);
  const VectorXd b = eq.E.cwiseProduct(prog.b);
  const VectorXd h = eq.F.cwiseProduct(prog.h);
  const SparseMatrix At = A.transpose();
  const SparseMatrix Gt = G.transpose();
  const double bnorm = std::max(1.0, b.norm());
  const double hnorm = std::max(1.0, h.norm());
  const double cnorm = std::max(1.0, c.norm());

  KktSystem kkt(A, G, k, set.static_reg, set.refinement_steps);
  const VectorXd e = kernels::cone_identity(k);

  SolveResult result;
  auto finish = [&](SolveStatus status, const VectorXd& x, const VectorXd& y,
                    const VectorXd& z, const VectorXd& s, double tau, int iters) {
    result.status = status;
    const bool certificate =
        status == SolveStatus::primal_infeasible || status == SolveStatus::dual_infeasible;
    const double div = certificate ? 1.0 : tau;
    result.x = eq.D.cwiseProduct(x) / div;
    result.y = eq.E.cwiseProduct(y) / div;
    result.z = eq.F.cwiseProduct(z) / div;
    result.s = s.cwiseQuotient(eq.F) / div;
    result.iterations = iters;
    result.primal_objective = prog.objective(result.x);
    result.dual_objective = -prog.b.dot(result.y) - prog.h.dot(result.z) + prog.c_offset;
    double pr = 0.0;
    if (p > 0) pr = (prog.A * result.x - prog.b).lpNorm<Eigen::Infinity>();
    if (m > 0) {
      pr = std::max(pr, (prog.G * result.x + result.s - prog.h).lpNorm<Eigen::Infinity>());
    }
    result.primal_residual = pr;
    VectorXd dr = prog.c;
    if (p > 0) dr += prog.A.transpose() * result.y;
    if (m > 0) dr += prog.G.transpose() * result.z;
    result.dual_residual = dr.lpNorm<Eigen::Infinity>();
    result.gap = result.s.dot(result.z);
    result.solve_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    detail::log().debug("conic_solve: {} after {} iterations, obj {:.10g}, {:.3f} s",
                        to_string(status), iters, result.primal_objective,
                        result.solve_seconds);
    return result;
  };

  // Initial point from two least-squares style solves with W = I.
  NtScaling w = identity_scaling(k);
  if (!kkt.factor(kern, k, w)) {
    return finish(SolveStatus::numerical_failure, VectorXd::Zero(n), VectorXd::Zero(p),
                  VectorXd::Zero(m), VectorXd::Zero(m), 1.0, 0);
  }
  VectorXd rhs(n + p + m);
  rhs << VectorXd::Zero(n), b, h;
  VectorXd sol = kkt.solve(rhs);
  VectorXd x = sol.head(n);
  VectorXd s = -sol.tail(m);
  rhs << -c, VectorXd::Zero(p), VectorXd::Zero(m);
  sol = kkt.solve(rhs);
  VectorXd y = sol.segment(n, p);
  VectorXd z = sol.tail(m);
  auto push_inside = [&](VectorXd& v) {
    const double alpha = -kern.min_eigenvalue(k, v);
    if (alpha >= -1e-8) v += (1.0 + alpha) * e;
  };
  push_inside(s);
  push_inside(z);
  double tau = 1.0, kappa = 1.0;

  VectorXd rx(n), ry(p), rz(m), tmp(m), tmp2(m), ds_rhs(m), dsa(m), dza(m);
  VectorXd u1(n + p + m), u2(n + p + m);
  const int deg = k.degree();

  auto dot3 = [&](const VectorXd& u) {
    return c.dot(u.head(n)) + b.dot(u.segment(n, p)) + h.dot(u.tail(m));
  };

  Stats st;
  int iter = 0;
  // Best iterate meeting the reduced tolerances, returned when the method
  // stalls later on.
  struct Snapshot {
    VectorXd x, y, z, s;
    double tau = 1.0;
    double merit = std::numeric_limits<double>::infinity();
    int iter = -1;
  } best;
  auto fallback = [&](SolveStatus status) {
    if (best.iter >= 0) {
      return finish(SolveStatus::optimal_inaccurate, best.x, best.y, best.z, best.s, best.tau,
                    iter);
    }
    return finish(status, x, y, z, s, tau, iter);
  };
  for (;; ++iter) {
    // Residuals of the embedding.
    rx = c * tau;
    if (p > 0) rx.noalias() += At * y;
    if (m > 0) rx.noalias() += Gt * z;
    ry = -b * tau;
    if (p > 0) ry.noalias() += A * x;
    rz = s - h * tau;
    if (m > 0) rz.noalias() += G * x;
    const double cx = c.dot(x), by = b.dot(y), hz = h.dot(z);
    const double rtau = kappa + cx + by + hz;

    st.pcost = cx / tau;
    st.dcost = -(by + hz) / tau;
    st.gap = s.dot(z) / (tau * tau);
    const double rel_den = std::min(std::abs(st.pcost), std::abs(st.dcost));
    st.relgap = rel_den > 0.0 ? st.gap / rel_den : std::numeric_limits<double>::infinity();
    {
      VectorXd rya = ry + b * tau;  // A x
      VectorXd rza = rz + h * tau - s;  // G x
      st.pres = std::max(ry.norm() / (bnorm * tau), rz.norm() / (hnorm * tau));
      st.dres = rx.norm() / (cnorm * tau);
      const VectorXd ag = rx - c * tau;  // A'y + G'z
      st.pinf = (by + hz) < 0.0 ? ag.norm() / (-(by + hz)) : std::numeric_limits<double>::infinity();
      st.dinf = cx < 0.0 ? std::max(rya.norm(), (rza + s).norm()) / (-cx)
                         : std::numeric_limits<double>::infinity();
    }
    detail::log().trace("ipm {:3d} pcost {:+.8e} dcost {:+.8e} gap {:.2e} pres {:.2e} dres {:.2e} "
                        "k/t {:.2e}",
                        iter, st.pcost, st.dcost, st.gap, st.pres, st.dres, kappa / tau);

    if (st.pres < set.feastol && st.dres < set.feastol &&
        (st.gap < set.abstol || st.relgap < set.reltol)) {
      return finish(SolveStatus::optimal, x, y, z, s, tau, iter);
    }
    if (st.pinf < set.feastol && tau < kappa) {
      return finish(SolveStatus::primal_infeasible, x, y, z, s, tau, iter);
    }
    if (st.dinf < set.feastol && tau < kappa) {
      return finish(SolveStatus::dual_infeasible, x, y, z, s, tau, iter);
    }
    auto inaccurate_ok = [&] {
      return st.pres < set.feastol_inacc && st.dres < set.feastol_inacc &&
             (st.gap < set.abstol_inacc || st.relgap < set.reltol_inacc);
    };
    if (inaccurate_ok()) {
      const double merit = std::max({st.pres, st.dres, std::min(st.gap, st.relgap)});
      if (merit < best.merit) best = {x, y, z, s, tau, merit, iter};
    }
    if (iter >= set.max_iters) {
      return fallback(SolveStatus::iteration_limit);
    }

    if (!kern.nt_scaling(k, s, z, w) || !kkt.factor(kern, k, w)) {
      detail::log().debug("conic_solve: scaling or factorization failed at iteration {}", iter);
      return fallback(SolveStatus::numerical_failure);
    }

    rhs << -c, b, h;
    u1 = kkt.solve(rhs);
    const double den = dot3(u1) - kappa / tau;

    // Solves the Newton system for complementarity target (dsc, dk) with the
    // linear residuals scaled by `keep`.
    struct Dir {
      VectorXd dx, dy, dz, ds;
      double dtau = 0.0, dkappa = 0.0;
    };
    auto direction = [&](const VectorXd& dsc, double dk, double keep) {
      kern.jordan_divide(k, w.lambda, dsc, tmp);  // lambda \ d_s
      kern.apply_W(k, w, tmp, tmp2);              // W (lambda \ d_s)
      rhs << -keep * rx, -keep * ry, -keep * rz - tmp2;
      u2 = kkt.solve(rhs);
      Dir d;
      d.dtau = (-keep * rtau - dk / tau - dot3(u2)) / den;
      d.dx = u2.head(n) + d.dtau * u1.head(n);
      d.dy = u2.segment(n, p) + d.dtau * u1.segment(n, p);
      d.dz = u2.tail(m) + d.dtau * u1.tail(m);
      kern.apply_W(k, w, d.dz, tmp2);
      tmp -= tmp2;
      kern.apply_W(k, w, tmp, d.ds);
      d.dkappa = (dk - kappa * d.dtau) / tau;
      return d;
    };
    auto step_length = [&](const Dir& d) {
      double a = std::min(kern.max_step(k, s, d.ds), kern.max_step(k, z, d.dz));
      if (d.dtau < 0.0) a = std::min(a, -tau / d.dtau);
      if (d.dkappa < 0.0) a = std::min(a, -kappa / d.dkappa);
      return a;
    };

    kern.jordan_product(k, w.lambda, w.lambda, ds_rhs);
    const Dir aff = direction(-ds_rhs, -tau * kappa, 1.0);
    const double alpha_aff = std::min(1.0, step_length(aff));
    const double sigma = std::clamp(std::pow(1.0 - alpha_aff, 3), 0.0, 1.0);
    const double mu = (s.dot(z) + tau * kappa) / (deg + 1);

    kern.apply_Winv(k, w, aff.ds, dsa);
    kern.apply_W(k, w, aff.dz, dza);
    kern.jordan_product(k, dsa, dza, tmp);
    VectorXd dsc = -ds_rhs - tmp + sigma * mu * e;
    const double dk = -tau * kappa - aff.dtau * aff.dkappa + sigma * mu;
    const Dir d = direction(dsc, dk, 1.0 - sigma);
    const double alpha = std::min(1.0, 0.99 * step_length(d));
    if (!(alpha > 1e-10)) {
      detail::log().debug("conic_solve: step length {:.3e} at iteration {}", alpha, iter);
      return fallback(SolveStatus::numerical_failure);
    }
    x += alpha * d.dx;
    y += alpha * d.dy;
    z += alpha * d.dz;
    s += alpha * d.ds;
    tau += alpha * d.dtau;
    kappa += alpha * d.dkappa;
    result.iterations = iter + 1;
  }
}

}  // namespace apexcvx
