#pragma once

#include "combnls/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace combnls {

struct IntegratorOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  double max_step = std::numeric_limits<double>::infinity();
  /// 0 selects the step automatically from the initial derivative.
  double initial_step = 0.0;
  std::size_t max_steps = 200'000'000;
};

/// Raised when the step controller drives the step below the resolvable
/// time scale (singularity or excessive stiffness); carries the failing time.
struct IntegrationFailure : std::runtime_error {
  double t;
  explicit IntegrationFailure(double t_, const std::string& what)
      : std::runtime_error(what + " at t = " + std::to_string(t_)), t(t_) {}
};

/// Quartic interpolant over one accepted step [t0, t0+h] (h signed).
/// eval(t) reproduces the endpoint states exactly and is 4th-order accurate
/// in between.
struct DenseStep {
  double t0 = 0.0;
  double h = 0.0;
  ComplexVector r1, r2, r3, r4, r5;

  ComplexVector eval(double t) const {
    const double theta = (t - t0) / h;
    const double theta1 = 1.0 - theta;
    return r1 + theta * (r2 + theta1 * (r3 + theta * (r4 + theta1 * r5)));
  }
};

namespace detail {

// Dormand-Prince 5(4) tableau, error weights e = b5 - b4, and the dense
// output weights d (order-4 interpolant).
struct DP5Coefficients {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5,
                          c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                          a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                          a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113,
                          a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                          a76 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695,
                          e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;
  static constexpr double d1 = -12715105075.0 / 11282082432.0;
  static constexpr double d3 = 87487479700.0 / 32700410799.0;
  static constexpr double d4 = -10690763975.0 / 1880347072.0;
  static constexpr double d5 = 701980252875.0 / 199316789632.0;
  static constexpr double d6 = -1453857185.0 / 822651844.0;
  static constexpr double d7 = 69997945.0 / 29380423.0;
};

inline double scaled_rms(const ComplexVector& err, const ComplexVector& y0,
                         const ComplexVector& y1, double atol, double rtol) {
  const Eigen::Index n = err.size();
  if (n == 0) return 0.0;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double sc =
        atol + rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    const double q = std::abs(err[i]) / sc;
    acc += q * q;
  }
  return std::sqrt(acc / static_cast<double>(n));
}

} // namespace detail

/// Integrate dy/dt = rhs(t, y) from t0 to t1 (either direction) with the
/// embedded Dormand-Prince 5(4) pair, PI step control, and FSAL reuse.
///
/// `rhs(t, y, dydt)` fills a preallocated derivative vector.  After every
/// accepted step `on_step(dense, t_new, y_new)` is invoked; the DenseStep
/// reference is only valid during the call.  Throws IntegrationFailure on
/// step underflow.
template <typename RHS, typename StepCallback>
void integrate_dp5(RHS&& rhs, double t0, double t1, const ComplexVector& y0,
                   const IntegratorOptions& opts, StepCallback&& on_step) {
  using C = detail::DP5Coefficients;
  if (!(opts.rtol > 0.0) || !(opts.atol > 0.0)) {
    throw std::invalid_argument("integrate_dp5: tolerances must be positive");
  }
  if (t0 == t1) return;
  const double posneg = (t1 > t0) ? 1.0 : -1.0;
  const double hmax = std::min(opts.max_step, std::abs(t1 - t0));

  const Eigen::Index n = y0.size();
  ComplexVector y = y0, ytmp(n), ynew(n), yerr(n);
  ComplexVector k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n);
  DenseStep dense;
  dense.r1.resize(n);
  dense.r2.resize(n);
  dense.r3.resize(n);
  dense.r4.resize(n);
  dense.r5.resize(n);

  double t = t0;
  rhs(t, y, k1);

  // Automatic initial step (two-probe heuristic on the scaled derivative).
  double h = opts.initial_step;
  if (h == 0.0) {
    double d0 = detail::scaled_rms(y, y, y, opts.atol, opts.rtol);
    double d1 = detail::scaled_rms(k1, y, y, opts.atol, opts.rtol);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * (d0 / d1);
    h0 = std::min(h0, hmax);
    ytmp = y + posneg * h0 * k1;
    rhs(t + posneg * h0, ytmp, k2);
    double d2 =
        detail::scaled_rms(k2 - k1, y, y, opts.atol, opts.rtol) / h0;
    double h1;
    if (std::max(d1, d2) <= 1e-15) {
      h1 = std::max(1e-6, h0 * 1e-3);
    } else {
      h1 = std::pow(0.01 / std::max(d1, d2), 0.2);
    }
    h = std::min({100.0 * h0, h1, hmax});
  }
  h = std::abs(h) * posneg;

  constexpr double safe = 0.9, beta = 0.04, expo1 = 0.2 - beta * 0.75;
  constexpr double fac_shrink = 5.0, fac_grow = 0.1; // bounds on h/hnew
  double facold = 1e-4;
  bool reject = false;
  std::size_t n_steps = 0;

  while (posneg * (t1 - t) > 0.0) {
    if (++n_steps > opts.max_steps) {
      throw IntegrationFailure(t, "integrate_dp5: step budget exhausted");
    }
    if (std::abs(h) <= 16.0 * std::numeric_limits<double>::epsilon() *
                          std::max(1.0, std::abs(t))) {
      throw IntegrationFailure(t, "integrate_dp5: step size underflow");
    }
    if (std::abs(h) > hmax) h = posneg * hmax;
    // Land exactly on t1.
    if (posneg * (t + 1.01 * h - t1) > 0.0) h = t1 - t;

    ytmp = y + h * (C::a21 * k1);
    rhs(t + C::c2 * h, ytmp, k2);
    ytmp = y + h * (C::a31 * k1 + C::a32 * k2);
    rhs(t + C::c3 * h, ytmp, k3);
    ytmp = y + h * (C::a41 * k1 + C::a42 * k2 + C::a43 * k3);
    rhs(t + C::c4 * h, ytmp, k4);
    ytmp = y + h * (C::a51 * k1 + C::a52 * k2 + C::a53 * k3 + C::a54 * k4);
    rhs(t + C::c5 * h, ytmp, k5);
    ytmp = y + h * (C::a61 * k1 + C::a62 * k2 + C::a63 * k3 + C::a64 * k4 +
                    C::a65 * k5);
    rhs(t + h, ytmp, k6);
    ynew = y + h * (C::a71 * k1 + C::a73 * k3 + C::a74 * k4 + C::a75 * k5 +
                    C::a76 * k6);
    rhs(t + h, ynew, k7);
    yerr = h * (C::e1 * k1 + C::e3 * k3 + C::e4 * k4 + C::e5 * k5 +
                C::e6 * k6 + C::e7 * k7);

    const double err =
        detail::scaled_rms(yerr, y, ynew, opts.atol, opts.rtol);
    const double fac11 = std::pow(err, expo1);

    if (err <= 1.0) {
      // Accepted: report, then advance with FSAL reuse.
      facold = std::max(err, 1e-4);
      double fac = fac11 / std::pow(facold, beta);
      fac = std::max(fac_grow, std::min(fac_shrink, fac / safe));
      double hnew = h / fac;

      dense.t0 = t;
      dense.h = h;
      dense.r1 = y;
      dense.r2 = ynew - y;
      dense.r3 = h * k1 - dense.r2;
      dense.r4 = dense.r2 - h * k7 - dense.r3;
      dense.r5 = h * (C::d1 * k1 + C::d3 * k3 + C::d4 * k4 + C::d5 * k5 +
                      C::d6 * k6 + C::d7 * k7);

      t += h;
      y.swap(ynew);
      k1.swap(k7);
      on_step(dense, t, y);

      if (std::abs(hnew) > hmax) hnew = posneg * hmax;
      if (reject) hnew = posneg * std::min(std::abs(hnew), std::abs(h));
      reject = false;
      h = hnew;
    } else {
      h = h / std::min(fac_shrink, fac11 / safe);
      reject = true;
    }
  }
}

struct OdeSolution {
  std::vector<double> times;
  std::vector<ComplexVector> states;
};

/// Convenience wrapper: returns the solution at `sample_times` (must be
/// sorted in the direction of integration and lie within [t0, t1]), or at
/// every accepted step when `sample_times` is empty.  The initial point is
/// always included in step mode.
template <typename RHS>
OdeSolution solve_ode(RHS&& rhs, double t0, double t1, const ComplexVector& y0,
                      const IntegratorOptions& opts,
                      const std::vector<double>& sample_times = {}) {
  OdeSolution sol;
  if (sample_times.empty()) {
    sol.times.push_back(t0);
    sol.states.push_back(y0);
    integrate_dp5(rhs, t0, t1, y0, opts,
                  [&](const DenseStep&, double t, const ComplexVector& y) {
                    sol.times.push_back(t);
                    sol.states.push_back(y);
                  });
    return sol;
  }

  const double posneg = (t1 >= t0) ? 1.0 : -1.0;
  std::size_t next = 0;
  const auto emit_through = [&](const DenseStep& dense, double t_new,
                                const ComplexVector& y_new) {
    while (next < sample_times.size() &&
           posneg * (sample_times[next] - t_new) <= 0.0) {
      const double ts = sample_times[next];
      if (ts == t_new) {
        sol.states.push_back(y_new);
      } else {
        sol.states.push_back(dense.eval(ts));
      }
      sol.times.push_back(ts);
      ++next;
    }
  };
  // Samples at (or numerically before) the start point take the initial
  // state verbatim.
  while (next < sample_times.size() &&
         posneg * (sample_times[next] - t0) <= 0.0) {
    sol.times.push_back(sample_times[next]);
    sol.states.push_back(y0);
    ++next;
  }
  integrate_dp5(rhs, t0, t1, y0, opts, emit_through);
  if (next < sample_times.size()) {
    throw std::invalid_argument(
        "solve_ode: sample times extend beyond the integration interval");
  }
  return sol;
}

} // namespace combnls
