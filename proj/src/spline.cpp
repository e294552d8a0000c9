#include "apexcvx/spline.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_spline.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace apexcvx {

struct CubicSpline::Impl {
  gsl_spline* spline = nullptr;
  ~Impl() {
    if (spline) gsl_spline_free(spline);
  }
};

CubicSpline::CubicSpline(std::span<const double> x, std::span<const double> y,
                         bool periodic)
    : impl_(std::make_unique<Impl>()),
      x_(x.begin(), x.end()),
      y_(y.begin(), y.end()),
      periodic_(periodic) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("CubicSpline: x and y differ in length");
  }
  if (x.size() < 3) {
    throw std::invalid_argument("CubicSpline: need at least 3 samples");
  }
  if (periodic && std::abs(y.front() - y.back()) > 1e-9 * (1.0 + std::abs(y.front()))) {
    throw std::invalid_argument("CubicSpline: periodic data must close");
  }
  // GSL aborts through its default handler; errors are checked below.
  gsl_set_error_handler_off();
  const gsl_interp_type* type =
      periodic ? gsl_interp_cspline_periodic : gsl_interp_cspline;
  impl_->spline = gsl_spline_alloc(type, x_.size());
  if (periodic) y_.back() = y_.front();
  if (gsl_spline_init(impl_->spline, x_.data(), y_.data(), x_.size()) !=
      GSL_SUCCESS) {
    throw std::invalid_argument("CubicSpline: knots must be strictly increasing");
  }
}

CubicSpline::~CubicSpline() = default;
CubicSpline::CubicSpline(CubicSpline&&) noexcept = default;
CubicSpline& CubicSpline::operator=(CubicSpline&&) noexcept = default;

double CubicSpline::wrap(double x) const {
  const double lo = x_.front();
  const double hi = x_.back();
  if (periodic_) {
    const double period = hi - lo;
    double t = std::fmod(x - lo, period);
    if (t < 0.0) t += period;
    return lo + t;
  }
  return std::clamp(x, lo, hi);
}

double CubicSpline::operator()(double x) const {
  return gsl_spline_eval(impl_->spline, wrap(x), nullptr);
}

double CubicSpline::derivative(double x) const {
  return gsl_spline_eval_deriv(impl_->spline, wrap(x), nullptr);
}

double CubicSpline::second_derivative(double x) const {
  return gsl_spline_eval_deriv2(impl_->spline, wrap(x), nullptr);
}

}  // namespace apexcvx
