#pragma once

#include <cmath>

namespace combnls {

inline constexpr double pi = 3.141592653589793238462643383279502884;

/// Smooth ramp: 0 for t <= 0, 1 for t >= pi, quintic smoothstep in between
/// (C^2 across the junctions, monotone).
inline double eta(double t) {
  double x = t / pi;
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return x * x * x * (10.0 + x * (-15.0 + 6.0 * x));
}

/// Ramp shifted to switch on over [pi*N, pi*(N+1)].
inline double eta_shifted(double t, int N) {
  return eta(t - pi * static_cast<double>(N));
}

/// Bump of the dyadic-style partition of unity: supported on
/// I_mu = [pi*mu, pi*(mu+2)], and sum_mu psi_mu == 1 on [pi*(mu0+1), inf)
/// when summed from any starting index mu0.
inline double psi_window(double t, int mu) {
  return eta_shifted(t, mu) - eta_shifted(t, mu + 1);
}

/// Extended window: identically 1 on I_nu = [pi*nu, pi*(nu+2)] and
/// supported on I^e_nu = [pi*(nu-1), pi*(nu+3)].  Equals the sum of the
/// three partition bumps psi_{nu-1} + psi_nu + psi_{nu+1}.
inline double psi_window_ext(double t, int nu) {
  return eta_shifted(t, nu - 1) - eta_shifted(t, nu + 2);
}

} // namespace combnls
