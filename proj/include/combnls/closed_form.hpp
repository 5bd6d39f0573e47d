#pragma once

#include "combnls/types.hpp"

#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

namespace combnls {

/// Truncation and tolerance knobs for the constant-data phase integral.
struct PhaseQuadratureConfig {
  /// Keep frequencies |m| <= M_max (even m only contribute).
  std::int64_t M_max = 4096;
  /// Truncate the remainder integral at T_max; 0 selects 1e4 * t.
  double T_max = 0.0;
  /// Certified truncation error above this raises ConvergenceFailure.
  double quad_tol = 1e-4;
};

/// Thrown when the certified truncation error cannot be brought below the
/// requested tolerance at the given settings.
struct ConvergenceFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PhaseIntegral {
  /// Phi(t) summed over |m| <= M_max.
  double value = 0.0;
  /// Rigorous bound on the dropped absolutely-convergent remainder pieces:
  /// the remainder integral beyond T_max plus, for the divisor-weighted
  /// series, the m > M_max remainder terms.  The boundary series itself is
  /// summed as given (its m-tail is conditionally convergent and carries no
  /// termwise certificate).
  double tail_bound = 0.0;
  /// |Im| accumulated while summing the +/-m pairs in complex arithmetic;
  /// the exact pair sums are real, so this measures rounding only.
  double im_residual = 0.0;
};

/// F(x) = int_x^inf sin(u)/u^2 du, the profile of the remainder integral
/// after one integration by parts.  |F(x)| <= 2/x^2.
double sine_tail_integral(double x);

/// Phi(t) = int_t^inf sum_{m != 0} r_m e^{-i m tau} / (8 pi tau) dtau with
/// r_m the divisor weight, truncated to |m| <= M_max.  Evaluated through
/// the integration-by-parts split
///
///   Phi(t) = -(1/4pi) sum_{m>0} r_m sin(mt)/(mt)
///            + (1/4pi) sum_{m>0} r_m [F(mt) - F(m T_max)]
///
/// with the certified bound on everything dropped returned alongside.
PhaseIntegral phase_integral(double t, const PhaseQuadratureConfig& cfg);

/// Same quantity for an explicit finite list of (positive even m, weight)
/// pairs, e.g. the multiplicity profile of a wrapped interaction table.
/// No frequency tail is added: the list is taken as the whole sum.
PhaseIntegral phase_integral_weighted(
    double t, const std::vector<std::pair<std::int64_t, double>>& weights,
    double T_max, double quad_tol);

/// Constant-data solution B(t) = alpha * e^{-i |alpha|^2 Phi(t)}.
Complex explicit_B(Complex alpha_const, double t,
                   const PhaseQuadratureConfig& cfg);

/// Integrate the reduced single-amplitude equation
///   i B' = -|alpha|^2 B sum_{m != 0, |m| <= M_max} r_m e^{-imt} / (8 pi t)
/// across t_span starting from the closed form at t_span.first, and return
/// the sup over samples of |B_numeric - B_closed| / |alpha|.  Both sides
/// share the same frequency truncation, so the result isolates integrator
/// and quadrature error.
double scalar_ode_check(Complex alpha_const, std::pair<double, double> t_span,
                        const PhaseQuadratureConfig& cfg, double rtol = 1e-10,
                        double atol = 1e-12);

} // namespace combnls
