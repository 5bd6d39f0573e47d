#include "combnls/norms.hpp"

#include "combnls/cutoff.hpp"
#include "combnls/parallel.hpp"

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace combnls {
namespace {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

int log2_exact(std::size_t n) {
  int q = 0;
  while ((std::size_t{1} << q) < n) ++q;
  return q;
}

// In-place radix-2 decimation-in-time FFT, forward convention
// X_n = sum_j x_j e^{-2 pi i j n / N}.
void fft_forward(std::vector<Complex>& x) {
  const std::size_t n = x.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(x[i], x[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * pi / static_cast<double>(len);
    const Complex wl = std::polar(1.0, ang);
    for (std::size_t i = 0; i < n; i += len) {
      Complex w(1.0, 0.0);
      for (std::size_t j = 0; j < len / 2; ++j) {
        const Complex u = x[i + j];
        const Complex v = x[i + j + len / 2] * w;
        x[i + j] = u + v;
        x[i + j + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

double angle_bracket(double k) { return std::sqrt(1.0 + k * k); }

void validate_sp(double s, double p) {
  if (!std::isfinite(s) || s < 0.0)
    throw std::invalid_argument("norms: s must be finite and nonnegative");
  if (!std::isfinite(p) || p <= 1.0)
    throw std::invalid_argument("norms: p must lie in (1, inf)");
}

// Samples of f on the closed window I_nu (2^{q-1}+1 points) extended to the
// full 2^q grid of I_e by even reflection about both window edges, then
// shaped by the smooth cutoff psi^e_nu.
std::vector<Complex> canonical_extension(const std::vector<Complex>& samples,
                                         int nu) {
  const std::size_t half = samples.size() - 1; // 2^{q-1}
  if (!is_power_of_two(half) || 2 * half < 256)
    throw std::invalid_argument(
        "hsp_norm_estimate: need 2^{q-1}+1 window samples with 2^q >= 256");
  const std::size_t n = 2 * half;
  const std::size_t j0 = n / 4;     // index of pi*nu
  const std::size_t j1 = 3 * n / 4; // index of pi*(nu+2)
  std::vector<Complex> ext(n);
  for (std::size_t j = 0; j < n; ++j) {
    std::size_t src;
    if (j < j0)
      src = j0 - j;
    else if (j <= j1)
      src = j - j0;
    else
      src = 2 * j1 - j - j0;
    ext[j] = samples[src];
  }
  const double t0 = window_ext_start(nu);
  const double dt = 4.0 * pi / static_cast<double>(n);
  for (std::size_t j = 0; j < n; ++j)
    ext[j] *= psi_window_ext(t0 + dt * static_cast<double>(j), nu);
  return ext;
}

} // namespace

double window_start(int nu) { return pi * nu; }
double window_ext_start(int nu) { return pi * (nu - 1); }

HalfIntegerSpectrum window_spectrum(const std::vector<Complex>& samples, int nu) {
  const std::size_t n = samples.size();
  if (!is_power_of_two(n))
    throw std::invalid_argument("window_spectrum: grid size must be a power of two");
  if (n < 256)
    throw std::invalid_argument("window_spectrum: grid must hold at least 256 samples");

  std::vector<Complex> x = samples;
  fft_forward(x);

  HalfIntegerSpectrum spec;
  spec.q = log2_exact(n);
  spec.coeffs.resize(static_cast<Eigen::Index>(n));
  const double t0 = window_ext_start(nu);
  const double inv_n = 1.0 / static_cast<double>(n);
  const std::int64_t half = static_cast<std::int64_t>(n) / 2;
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
    const std::int64_t m = i - half; // integer mode on the 4 pi period
    const std::size_t bin = static_cast<std::size_t>(((m % static_cast<std::int64_t>(n)) +
                                                      static_cast<std::int64_t>(n)) %
                                                     static_cast<std::int64_t>(n));
    // Absolute-time phase: coefficients of e^{i (m/2) t} rather than of the
    // grid-relative wave, so spectra from different windows are comparable.
    const Complex twist = std::polar(1.0, -0.5 * static_cast<double>(m) * t0);
    spec.coeffs[static_cast<Eigen::Index>(i)] = x[bin] * inv_n * twist;
  }
  return spec;
}

double tilde_hsp_norm(const HalfIntegerSpectrum& spec, double s, double p) {
  validate_sp(s, p);
  double acc = 0.0;
  const std::int64_t n = spec.coeffs.size();
  for (std::int64_t i = 0; i < n; ++i) {
    const double mag = std::abs(spec.coeffs[static_cast<Eigen::Index>(i)]);
    if (mag == 0.0) continue;
    acc += std::pow(angle_bracket(spec.frequency(i)), s * p) * std::pow(mag, p);
  }
  return std::pow(acc, 1.0 / p);
}

double hsp_norm_estimate(const std::vector<Complex>& samples, double s,
                         double p, int nu) {
  validate_sp(s, p);
  return tilde_hsp_norm(window_spectrum(canonical_extension(samples, nu), nu),
                        s, p);
}

namespace {

// Window norms for modes k_min..k_max on window nu, each from fresh samples
// of the evaluator on the closed I_nu grid.
std::vector<double> window_mode_norms(const ModeFunction& modes, int k_min,
                                      int k_max, double s, double p, int nu,
                                      int q) {
  const std::size_t count = (std::size_t{1} << (q - 1)) + 1;
  const double t_start = window_start(nu);
  const double dt = 4.0 * pi / static_cast<double>(std::size_t{1} << q);
  std::vector<double> norms(static_cast<std::size_t>(k_max - k_min + 1), 0.0);
  parallel_for(norms.size(), [&](std::size_t idx) {
    const int k = k_min + static_cast<int>(idx);
    std::vector<Complex> samples(count);
    for (std::size_t j = 0; j < count; ++j)
      samples[j] = modes(k, t_start + dt * static_cast<double>(j));
    norms[idx] = hsp_norm_estimate(samples, s, p, nu);
  });
  return norms;
}

double aggregate_lp(const std::vector<double>& norms, double p) {
  double acc = 0.0;
  for (double v : norms) acc += std::pow(v, p);
  return std::pow(acc, 1.0 / p);
}

} // namespace

double xsp_norm(const ModeFunction& modes, int k_min, int k_max, double s,
                double p, int nu_max, int q) {
  validate_sp(s, p);
  if (k_min > k_max) throw std::invalid_argument("xsp_norm: empty mode range");
  if (nu_max < 0) throw std::invalid_argument("xsp_norm: nu_max must be >= 0");
  if (q < 8) throw std::invalid_argument("xsp_norm: window grid needs q >= 8");
  double sup = 0.0;
  for (int nu = 0; nu <= nu_max; ++nu) {
    const double agg =
        aggregate_lp(window_mode_norms(modes, k_min, k_max, s, p, nu, q), p);
    sup = std::max(sup, (nu + 1) * agg);
  }
  return sup;
}

DecayProfile decay_profile(const ModeFunction& component, int k_min, int k_max,
                           double s, double p, int nu_min, int nu_max, int q) {
  validate_sp(s, p);
  if (k_min > k_max || nu_min < 0 || nu_max < nu_min)
    throw std::invalid_argument("decay_profile: bad mode or window range");
  if (q < 8) throw std::invalid_argument("decay_profile: window grid needs q >= 8");

  DecayProfile out;
  for (int nu = nu_min; nu <= nu_max; ++nu) {
    const double agg =
        aggregate_lp(window_mode_norms(component, k_min, k_max, s, p, nu, q), p);
    out.scaled.emplace_back(nu, (nu + 1) * agg);
  }

  double xm = 0.0, ym = 0.0;
  std::size_t used = 0;
  for (const auto& [nu, v] : out.scaled)
    if (v > 0.0) {
      xm += std::log(nu + 1.0);
      ym += std::log(v);
      ++used;
    }
  if (used < 2) return out;
  xm /= static_cast<double>(used);
  ym /= static_cast<double>(used);
  double num = 0.0, den = 0.0;
  for (const auto& [nu, v] : out.scaled)
    if (v > 0.0) {
      const double dx = std::log(nu + 1.0) - xm;
      num += dx * (std::log(v) - ym);
      den += dx * dx;
    }
  out.slope = den > 0.0 ? num / den : 0.0;
  return out;
}

} // namespace combnls
