#include "apexcvx/cone_kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace apexcvx::kernels {

ConeLayout::ConeLayout(const ConeDims& dims) : l(dims.l), q(dims.q) {
  offset.reserve(q.size());
  kkt_slot.reserve(q.size());
  int off = l;
  int slot = l;
  for (int qi : q) {
    offset.push_back(off);
    kkt_slot.push_back(slot);
    off += qi;
    slot += qi * (qi + 1) / 2;
  }
  total = off;
  kkt_slots = slot;
}

Eigen::VectorXd cone_identity(const ConeLayout& k) {
  Eigen::VectorXd e = Eigen::VectorXd::Zero(k.total);
  e.head(k.l).setOnes();
  for (int off : k.offset) e[off] = 1.0;
  return e;
}

namespace {

constexpr double kNoLimit = std::numeric_limits<double>::infinity();

// ---- per-block helpers shared by both drivers ----

bool soc_scaling(int n, const double* s, const double* z, double* wbar, double& eta) {
  double s1 = 0.0, z1 = 0.0;
  for (int i = 1; i < n; ++i) {
    s1 += s[i] * s[i];
    z1 += z[i] * z[i];
  }
  s1 = std::sqrt(s1);
  z1 = std::sqrt(z1);
  const double sres = (s[0] - s1) * (s[0] + s1);
  const double zres = (z[0] - z1) * (z[0] + z1);
  if (!(s[0] > 0.0) || !(z[0] > 0.0) || !(sres > 0.0) || !(zres > 0.0)) return false;
  const double sn = std::sqrt(sres);
  const double zn = std::sqrt(zres);
  double dot = 0.0;
  for (int i = 0; i < n; ++i) dot += (s[i] / sn) * (z[i] / zn);
  const double gamma = std::sqrt(0.5 * (1.0 + dot));
  wbar[0] = (s[0] / sn + z[0] / zn) / (2.0 * gamma);
  for (int i = 1; i < n; ++i) wbar[i] = (s[i] / sn - z[i] / zn) / (2.0 * gamma);
  eta = std::sqrt(sn / zn);
  return true;
}

void soc_apply_W(int n, const double* w, double eta, const double* x, double* out) {
  double a = 0.0;
  for (int i = 1; i < n; ++i) a += w[i] * x[i];
  const double c = x[0] + a / (1.0 + w[0]);
  out[0] = eta * (w[0] * x[0] + a);
  for (int i = 1; i < n; ++i) out[i] = eta * (x[i] + c * w[i]);
}

void soc_apply_Winv(int n, const double* w, double eta, const double* x, double* out) {
  double a = 0.0;
  for (int i = 1; i < n; ++i) a += w[i] * x[i];
  const double c = -x[0] + a / (1.0 + w[0]);
  out[0] = (w[0] * x[0] - a) / eta;
  for (int i = 1; i < n; ++i) out[i] = (x[i] + c * w[i]) / eta;
}

void soc_product(int n, const double* u, const double* v, double* out) {
  double dot = 0.0;
  for (int i = 0; i < n; ++i) dot += u[i] * v[i];
  for (int i = 1; i < n; ++i) out[i] = u[0] * v[i] + v[0] * u[i];
  out[0] = dot;
}

void soc_divide(int n, const double* lam, const double* d, double* out) {
  double l1 = 0.0, ld = 0.0;
  for (int i = 1; i < n; ++i) {
    l1 += lam[i] * lam[i];
    ld += lam[i] * d[i];
  }
  const double u0 = (lam[0] * d[0] - ld) / (lam[0] * lam[0] - l1);
  for (int i = 1; i < n; ++i) out[i] = (d[i] - u0 * lam[i]) / lam[0];
  out[0] = u0;
}

double soc_max_step(int n, const double* x, const double* dx) {
  double x1 = 0.0;
  for (int i = 1; i < n; ++i) x1 += x[i] * x[i];
  const double res = x[0] * x[0] - x1;
  if (!(res > 0.0) || !(x[0] > 0.0)) return 0.0;
  // Normalized so that the constant term of the quadratic is one.
  double d1 = 0.0, xd = 0.0;
  for (int i = 1; i < n; ++i) {
    d1 += dx[i] * dx[i];
    xd += x[i] * dx[i];
  }
  const double a = (dx[0] * dx[0] - d1) / res;
  const double b = 2.0 * (x[0] * dx[0] - xd) / res;
  const double disc = b * b - 4.0 * a;
  if (std::abs(a) <= 1e-15 * std::max(1.0, b * b)) {
    return b < 0.0 ? -1.0 / b : kNoLimit;
  }
  if (disc < 0.0) return kNoLimit;
  const double sq = std::sqrt(disc);
  const double qv = -0.5 * (b + std::copysign(sq, b));
  double best = kNoLimit;
  for (double r : {qv / a, qv != 0.0 ? 1.0 / qv : kNoLimit}) {
    if (r > 0.0) best = std::min(best, r);
  }
  return best;
}

double soc_min_eig(int n, const double* x) {
  double x1 = 0.0;
  for (int i = 1; i < n; ++i) x1 += x[i] * x[i];
  return x[0] - std::sqrt(x1);
}

void soc_fill_kkt(int n, const double* w, double eta, double reg, double* values,
                  const int* slots) {
  const double e2 = eta * eta;
  int k = 0;
  for (int j = 0; j < n; ++j) {
    for (int i = j; i < n; ++i, ++k) {
      double w2 = 2.0 * w[i] * w[j];
      if (i == j) w2 += (i == 0) ? -1.0 : 1.0;
      values[slots[k]] = -e2 * w2 - (i == j ? reg : 0.0);
    }
  }
}

double orthant_step(double x, double dx) { return dx < 0.0 ? -x / dx : kNoLimit; }

}  // namespace

namespace serial {

bool nt_scaling(const ConeLayout& k, const Eigen::VectorXd& s, const Eigen::VectorXd& z,
                NtScaling& w) {
  w.d.resize(k.l);
  w.wbar.resize(k.total - k.l);
  w.eta.resize(k.num_soc());
  w.lambda.resize(k.total);
  for (int i = 0; i < k.l; ++i) {
    if (!(s[i] > 0.0) || !(z[i] > 0.0)) return false;
    w.d[i] = std::sqrt(s[i] / z[i]);
    w.lambda[i] = std::sqrt(s[i] * z[i]);
  }
  for (int c = 0; c < k.num_soc(); ++c) {
    const int off = k.offset[static_cast<std::size_t>(c)];
    const int n = k.q[static_cast<std::size_t>(c)];
    double* wb = w.wbar.data() + (off - k.l);
    if (!soc_scaling(n, s.data() + off, z.data() + off, wb, w.eta[c])) return false;
    soc_apply_W(n, wb, w.eta[c], z.data() + off, w.lambda.data() + off);
  }
  return true;
}

void apply_W(const ConeLayout& k, const NtScaling& w, const Eigen::VectorXd& x,
             Eigen::VectorXd& out) {
  out.resize(k.total);
  for (int i = 0; i < k.l; ++i) out[i] = w.d[i] * x[i];
  for (int c = 0; c < k.num_soc(); ++c) {
    const int off = k.offset[static_cast<std::size_t>(c)];
    soc_apply_W(k.q[static_cast<std::size_t>(c)], w.wbar.data() + (off - k.l), w.eta[c],
                x.data() + off, out.data() + off);
  }
}

void apply_Winv(const ConeLayout& k, const NtScaling& w, const Eigen::VectorXd& x,
                Eigen::VectorXd& out) {
  out.resize(k.total);
  for (int i = 0; i < k.l; ++i) out[i] = x[i] / w.d[i];
  for (int c = 0; c < k.num_soc(); ++c) {
    const int off = k.offset[static_cast<std::size_t>(c)];
    soc_apply_Winv(k.q[static_cast<std::size_t>(c)], w.wbar.data() + (off - k.l), w.eta[c],
                   x.data() + off, out.data() + off);
  }
}

void jordan_product(const ConeLayout& k, const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                    Eigen::VectorXd& out) {
  out.resize(k.total);
  for (int i = 0; i < k.l; ++i) out[i] = u[i] * v[i];
  for (int c = 0; c < k.num_soc(); ++c) {
    const int off = k.offset[static_cast<std::size_t>(c)];
    soc_product(k.q[static_cast<std::size_t>(c)], u.data() + off, v.data() + off,
                out.data() + off);
  }
}

void jordan_divide(const ConeLayout& k, const Eigen::VectorXd& lambda,
                   const Eigen::VectorXd& d, Eigen::VectorXd& out) {
  out.resize(k.total);
  for (int i = 0; i < k.l; ++i) out[i] = d[i] / lambda[i];
  for (int c = 0; c < k.num_soc(); ++c) {
    const int off = k.offset[static_cast<std::size_t>(c)];
    soc_divide(k.q[static_cast<std::size_t>(c)], lambda.data() + off, d.data() + off,
               out.data() + off);
  }
}

double max_step(const ConeLayout& k, const Eigen::VectorXd& x, const Eigen::VectorXd& dx) {
  double alpha = kNoLimit;
  for (int i = 0; i < k.l; ++i) alpha = std::min(alpha, orthant_step(x[i], dx[i]));
  for (int c = 0; c < k.num_soc(); ++c) {
    const int off = k.offset[static_cast<std::size_t>(c)];
    alpha = std::min(alpha, soc_max_step(k.q[static_cast<std::size_t>(c)], x.data() + off,
                                         dx.data() + off));
  }
  return alpha;
}

double min_eigenvalue(const ConeLayout& k, const Eigen::VectorXd& x) {
  double m = kNoLimit;
  for (int i = 0; i < k.l; ++i) m = std::min(m, x[i]);
  for (int c = 0; c < k.num_soc(); ++c) {
    const int off = k.offset[static_cast<std::size_t>(c)];
    m = std::min(m, soc_min_eig(k.q[static_cast<std::size_t>(c)], x.data() + off));
  }
  return m;
}

void fill_kkt_scaling(const ConeLayout& k, const NtScaling& w, double reg, double* values,
                      const std::vector<int>& slots) {
  for (int i = 0; i < k.l; ++i) values[slots[static_cast<std::size_t>(i)]] = -w.d[i] * w.d[i] - reg;
  for (int c = 0; c < k.num_soc(); ++c) {
    const int off = k.offset[static_cast<std::size_t>(c)];
    soc_fill_kkt(k.q[static_cast<std::size_t>(c)], w.wbar.data() + (off - k.l), w.eta[c], reg,
                 values, slots.data() + k.kkt_slot[static_cast<std::size_t>(c)]);
  }
}

}  // namespace serial

namespace omp {

bool nt_scaling(const ConeLayout& k, const Eigen::VectorXd& s, const Eigen::VectorXd& z,
                NtScaling& w) {
  w.d.resize(k.l);
  w.wbar.resize(k.total - k.l);
  w.eta.resize(k.num_soc());
  w.lambda.resize(k.total);
  bool ok = true;
#pragma omp parallel for reduction(&& : ok) schedule(static)
  for (int i = 0; i < k.l; ++i) {
    if (!(s[i] > 0.0) || !(z[i] > 0.0)) {
      ok = false;
      continue;
    }
    w.d[i] = std::sqrt(s[i] / z[i]);
    w.lambda[i] = std::sqrt(s[i] * z[i]);
  }
  if (!ok) return false;
  const int m = k.num_soc();
#pragma omp parallel for reduction(&& : ok) schedule(static)
  for (int c = 0; c < m; ++c) {
    const int off = k.offset[static_cast<std::size_t>(c)];
    const int n = k.q[static_cast<std::size_t>(c)];
    double* wb = w.wbar.data() + (off - k.l);
    if (!soc_scaling(n, s.data() + off, z.data() + off, wb, w.eta[c])) {
      ok = false;
      continue;
    }
    soc_apply_W(n, wb, w.eta[c], z.data() + off, w.lambda.data() + off);
  }
  return ok;
}

void apply_W(const ConeLayout& k, const NtScaling& w, const Eigen::VectorXd& x,
             Eigen::VectorXd& out) {
  out.resize(k.total);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < k.l; ++i) out[i] = w.d[i] * x[i];
  const int m = k.num_soc();
#pragma omp parallel for schedule(static)
  for (int c = 0; c < m; ++c) {
    const int off = k.offset[static_cast<std::size_t>(c)];
    soc_apply_W(k.q[static_cast<std::size_t>(c)], w.wbar.data() + (off - k.l), w.eta[c],
                x.data() + off, out.data() + off);
  }
}

void apply_Winv(const ConeLayout& k, const NtScaling& w, const Eigen::VectorXd& x,
                Eigen::VectorXd& out) {
  out.resize(k.total);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < k.l; ++i) out[i] = x[i] / w.d[i];
  const int m = k.num_soc();
#pragma omp parallel for schedule(static)
  for (int c = 0; c < m; ++c) {
    const int off = k.offset[static_cast<std::size_t>(c)];
    soc_apply_Winv(k.q[static_cast<std::size_t>(c)], w.wbar.data() + (off - k.l), w.eta[c],
                   x.data() + off, out.data() + off);
  }
}

void jordan_product(const ConeLayout& k, const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                    Eigen::VectorXd& out) {
  out.resize(k.total);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < k.l; ++i) out[i] = u[i] * v[i];
  const int m = k.num_soc();
#pragma omp parallel for schedule(static)
  for (int c = 0; c < m; ++c) {
    const int off = k.offset[static_cast<std::size_t>(c)];
    soc_product(k.q[static_cast<std::size_t>(c)], u.data() + off, v.data() + off,
                out.data() + off);
  }
}

void jordan_divide(const ConeLayout& k, const Eigen::VectorXd& lambda,
                   const Eigen::VectorXd& d, Eigen::VectorXd& out) {
  out.resize(k.total);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < k.l; ++i) out[i] = d[i] / lambda[i];
  const int m = k.num_soc();
#pragma omp parallel for schedule(static)
  for (int c = 0; c < m; ++c) {
    const int off = k.offset[static_cast<std::size_t>(c)];
    soc_divide(k.q[static_cast<std::size_t>(c)], lambda.data() + off, d.data() + off,
               out.data() + off);
  }
}

double max_step(const ConeLayout& k, const Eigen::VectorXd& x, const Eigen::VectorXd& dx) {
  double alpha = kNoLimit;
#pragma omp parallel for reduction(min : alpha) schedule(static)
  for (int i = 0; i < k.l; ++i) alpha = std::min(alpha, orthant_step(x[i], dx[i]));
  const int m = k.num_soc();
#pragma omp parallel for reduction(min : alpha) schedule(static)
  for (int c = 0; c < m; ++c) {
    const int off = k.offset[static_cast<std::size_t>(c)];
    alpha = std::min(alpha, soc_max_step(k.q[static_cast<std::size_t>(c)], x.data() + off,
                                         dx.data() + off));
  }
  return alpha;
}

double min_eigenvalue(const ConeLayout& k, const Eigen::VectorXd& x) {
  double mval = kNoLimit;
#pragma omp parallel for reduction(min : mval) schedule(static)
  for (int i = 0; i < k.l; ++i) mval = std::min(mval, x[i]);
  const int m = k.num_soc();
#pragma omp parallel for reduction(min : mval) schedule(static)
  for (int c = 0; c < m; ++c) {
    const int off = k.offset[static_cast<std::size_t>(c)];
    mval = std::min(mval, soc_min_eig(k.q[static_cast<std::size_t>(c)], x.data() + off));
  }
  return mval;
}

void fill_kkt_scaling(const ConeLayout& k, const NtScaling& w, double reg, double* values,
                      const std::vector<int>& slots) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < k.l; ++i) values[slots[static_cast<std::size_t>(i)]] = -w.d[i] * w.d[i] - reg;
  const int m = k.num_soc();
#pragma omp parallel for schedule(static)
  for (int c = 0; c < m; ++c) {
    const int off = k.offset[static_cast<std::size_t>(c)];
    soc_fill_kkt(k.q[static_cast<std::size_t>(c)], w.wbar.data() + (off - k.l), w.eta[c], reg,
                 values, slots.data() + k.kkt_slot[static_cast<std::size_t>(c)]);
  }
}

}  // namespace omp

#define APEXCVX_DISPATCH(fn, ...) \
  return exec == Exec::parallel ? omp::fn(__VA_ARGS__) : serial::fn(__VA_ARGS__)

bool Kernels::nt_scaling(const ConeLayout& k, const Eigen::VectorXd& s, const Eigen::VectorXd& z,
                         NtScaling& w) const {
  APEXCVX_DISPATCH(nt_scaling, k, s, z, w);
}
void Kernels::apply_W(const ConeLayout& k, const NtScaling& w, const Eigen::VectorXd& x,
                      Eigen::VectorXd& out) const {
  APEXCVX_DISPATCH(apply_W, k, w, x, out);
}
void Kernels::apply_Winv(const ConeLayout& k, const NtScaling& w, const Eigen::VectorXd& x,
                         Eigen::VectorXd& out) const {
  APEXCVX_DISPATCH(apply_Winv, k, w, x, out);
}
void Kernels::jordan_product(const ConeLayout& k, const Eigen::VectorXd& u,
                             const Eigen::VectorXd& v, Eigen::VectorXd& out) const {
  APEXCVX_DISPATCH(jordan_product, k, u, v, out);
}
void Kernels::jordan_divide(const ConeLayout& k, const Eigen::VectorXd& lambda,
                            const Eigen::VectorXd& d, Eigen::VectorXd& out) const {
  APEXCVX_DISPATCH(jordan_divide, k, lambda, d, out);
}
double Kernels::max_step(const ConeLayout& k, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& dx) const {
  APEXCVX_DISPATCH(max_step, k, x, dx);
}
double Kernels::min_eigenvalue(const ConeLayout& k, const Eigen::VectorXd& x) const {
  APEXCVX_DISPATCH(min_eigenvalue, k, x);
}
void Kernels::fill_kkt_scaling(const ConeLayout& k, const NtScaling& w, double reg,
                               double* values, const std::vector<int>& slots) const {
  APEXCVX_DISPATCH(fill_kkt_scaling, k, w, reg, values, slots);
}

#undef APEXCVX_DISPATCH

}  // namespace apexcvx::kernels
