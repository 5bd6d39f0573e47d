#pragma once

#include "combnls/types.hpp"

#include <functional>
#include <utility>
#include <vector>

namespace combnls {

/// Discrete Fourier data of a 4*pi-periodic window extension.  Index i of
/// `coeffs` carries the integer mode n = i - size/2, i.e. the half-integer
/// frequency k = n/2.
struct HalfIntegerSpectrum {
  int q = 0; ///< coeffs.size() == 2^q
  ComplexVector coeffs;

  double frequency(std::int64_t index) const {
    return 0.5 * static_cast<double>(index - (std::int64_t{1} << (q - 1)));
  }
};

/// Evaluator for a family of mode amplitudes t -> R_k(t).
using ModeFunction = std::function<Complex(int k, double t)>;

/// Time window number nu: I = [pi nu, pi(nu+2)] inside the extended
/// window I_e = [pi(nu-1), pi(nu+3)] that carries the 4*pi-periodic grid.
double window_start(int nu);      ///< pi * nu
double window_ext_start(int nu);  ///< pi * (nu - 1)

/// Fourier coefficients of the 4*pi-periodic extension of `samples`, a
/// uniform grid of 2^q >= 256 points covering I_e (left endpoint included,
/// right endpoint excluded).  Phases are taken against absolute time, so a
/// pure wave e^{ikt} lands on the coefficient at frequency k regardless of
/// the window position.
HalfIntegerSpectrum window_spectrum(const std::vector<Complex>& samples, int nu);

/// ( sum_k <k>^{sp} |f_k|^p )^{1/p} with <k> = sqrt(1 + k^2) over the
/// half-integer frequencies of `spec`.
double tilde_hsp_norm(const HalfIntegerSpectrum& spec, double s, double p);

/// Upper bound for the extension-infimum norm of f given on I_nu: the
/// samples (2^{q-1}+1 points, both endpoints included) are reflected evenly
/// about the window edges to fill I_e, multiplied by the smooth window
/// psi^e_nu, and measured by tilde_hsp_norm.  The result bounds the true
/// infimum from above because the construction is one admissible extension.
double hsp_norm_estimate(const std::vector<Complex>& samples, double s,
                         double p, int nu);

/// sup over nu in [0, nu_max] of (nu+1) * ( sum_k norm_k^p )^{1/p} where
/// norm_k = hsp_norm_estimate of R_k on window nu.  Modes are sampled
/// through the evaluator on the window grids (2^q points per I_e).
double xsp_norm(const ModeFunction& modes, int k_min, int k_max, double s,
                double p, int nu_max, int q = 8);

/// Per-window profile of one map component: scaled_nu = (nu+1) * l^p-over-k
/// aggregate of the window norms, together with the least-squares slope of
/// log(scaled) against log(nu+1).  A bounded profile fits slope ~ 0; an
/// extra 1/(nu+1) decay fits slope ~ -1.
struct DecayProfile {
  std::vector<std::pair<int, double>> scaled; ///< (nu, scaled norm)
  double slope = 0.0;
};

DecayProfile decay_profile(const ModeFunction& component, int k_min, int k_max,
                           double s, double p, int nu_min, int nu_max,
                           int q = 8);

} // namespace combnls
