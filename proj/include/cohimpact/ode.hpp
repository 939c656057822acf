#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "cohimpact/errors.hpp"
#include "cohimpact/qops.hpp"

namespace cohimpact {

struct OdeOptions {
  double rtol = 1e-9;
  double atol = 1e-11;
  double h_max = std::numeric_limits<double>::infinity();
  long max_steps = 50'000'000;
};

struct OdeStats {
  long steps = 0;
  long rejected = 0;
  long evaluations = 0;
};

// Dormand-Prince 5(4) with FSAL for autonomous linear-or-not systems y' = f(y).
// f is called as f(const Vector& y, Vector& dy). Step size persists across
// successive advance() calls so dense output grids cost nothing extra.
template <class Rhs>
class Dopri5 {
 public:
  Dopri5(Rhs rhs, Index n, OdeOptions opt = {}) : f_(std::move(rhs)), opt_(opt) {
    for (auto* v : {&k1_, &k2_, &k3_, &k4_, &k5_, &k6_, &k7_, &tmp_, &ynew_}) v->resize(n);
  }

  const OdeStats& stats() const { return stats_; }

  void advance(Vector& y, double t0, double t1) {
    if (t1 < t0) throw NumericalError("integrator asked to run backwards");
    if (t1 == t0) return;
    double t = t0;
    f_(y, k1_);
    ++stats_.evaluations;
    if (h_ <= 0.0) h_ = initial_step(y);
    while (t < t1) {
      if (stats_.steps + stats_.rejected > opt_.max_steps)
        throw NumericalError("integrator exceeded its step budget");
      bool last = false;
      double h = std::min(h_, opt_.h_max);
      if (t + h >= t1 || t1 - (t + h) < 1e-12 * std::abs(t1)) {
        h = t1 - t;
        last = true;
      }
      const double err = attempt(y, h);
      if (!std::isfinite(err)) throw NumericalError("integrator produced a non-finite state");
      if (err <= 1.0) {
        ++stats_.steps;
        t = last ? t1 : t + h;
        y.swap(ynew_);
        k1_.swap(k7_);
        const double fac = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
        // The clipped final step says nothing about the natural step size.
        if (!last || h >= h_) h_ = h * fac;
      } else {
        ++stats_.rejected;
        h_ = h * std::max(0.2, 0.9 * std::pow(err, -0.2));
        if (h_ < 1e-14 * std::max(1.0, std::abs(t))) {
          std::ostringstream os;
          os << "integrator step size underflow at t=" << t;
          throw NumericalError(os.str());
        }
      }
    }
  }

 private:
  double initial_step(const Vector& y) {
    const double sc_y = scaled_norm(y, y);
    const double sc_f = scaled_norm(k1_, y);
    double h = (sc_y < 1e-5 || sc_f < 1e-5) ? 1e-6 : 0.01 * sc_y / sc_f;
    return std::min(h, opt_.h_max);
  }

  double scaled_norm(const Vector& v, const Vector& y) const {
    double s = 0.0;
    for (Index i = 0; i < v.size(); ++i) {
      const double sc = opt_.atol + opt_.rtol * std::abs(y(i));
      s += std::norm(v(i)) / (sc * sc);
    }
    return std::sqrt(s / std::max<Index>(1, v.size()));
  }

  // One trial step from y with k1 = f(y); leaves ynew and k7 = f(ynew).
  double attempt(const Vector& y, double h) {
    constexpr double a21 = 1.0 / 5.0;
    constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
    constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
    constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                     a54 = -212.0 / 729.0;
    constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                     a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
    constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0,
                     b5 = -2187.0 / 6784.0, b6 = 11.0 / 84.0;
    constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                     e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;

    tmp_ = y + (h * a21) * k1_;
    f_(tmp_, k2_);
    tmp_ = y + h * (a31 * k1_ + a32 * k2_);
    f_(tmp_, k3_);
    tmp_ = y + h * (a41 * k1_ + a42 * k2_ + a43 * k3_);
    f_(tmp_, k4_);
    tmp_ = y + h * (a51 * k1_ + a52 * k2_ + a53 * k3_ + a54 * k4_);
    f_(tmp_, k5_);
    tmp_ = y + h * (a61 * k1_ + a62 * k2_ + a63 * k3_ + a64 * k4_ + a65 * k5_);
    f_(tmp_, k6_);
    ynew_ = y + h * (b1 * k1_ + b3 * k3_ + b4 * k4_ + b5 * k5_ + b6 * k6_);
    f_(ynew_, k7_);
    stats_.evaluations += 6;
    tmp_ = h * (e1 * k1_ + e3 * k3_ + e4 * k4_ + e5 * k5_ + e6 * k6_ + e7 * k7_);

    double s = 0.0;
    for (Index i = 0; i < y.size(); ++i) {
      const double sc = opt_.atol + opt_.rtol * std::max(std::abs(y(i)), std::abs(ynew_(i)));
      s += std::norm(tmp_(i)) / (sc * sc);
    }
    return std::sqrt(s / std::max<Index>(1, y.size()));
  }

  Rhs f_;
  OdeOptions opt_;
  OdeStats stats_;
  double h_ = 0.0;
  Vector k1_, k2_, k3_, k4_, k5_, k6_, k7_, tmp_, ynew_;
};

}  // namespace cohimpact
