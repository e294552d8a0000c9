#pragma once

#include <memory>
#include <span>
#include <vector>

namespace apexcvx {

// C2 cubic spline through (x, y) samples, backed by GSL. Periodic splines
// require y.front() == y.back().
class CubicSpline {
 public:
  CubicSpline(std::span<const double> x, std::span<const double> y,
              bool periodic);
  ~CubicSpline();
  CubicSpline(CubicSpline&&) noexcept;
  CubicSpline& operator=(CubicSpline&&) noexcept;

  double operator()(double x) const;
  double derivative(double x) const;
  double second_derivative(double x) const;

  double x_min() const { return x_.front(); }
  double x_max() const { return x_.back(); }

 private:
  double wrap(double x) const;

  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::vector<double> x_;
  std::vector<double> y_;
  bool periodic_ = false;
};

}  // namespace apexcvx
