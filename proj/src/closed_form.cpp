#include "combnls/closed_form.hpp"

#include "combnls/cutoff.hpp"
#include "combnls/integrator.hpp"

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <utility>
#include <vector>

namespace combnls {
namespace {

constexpr double kAsymptoticCut = 40.0;

double osc_integrand(double u) { return std::sin(u) / (u * u); }

// F(x) for x >= kAsymptoticCut through the integration-by-parts series
//   F(x) = sum_{j>=0} (-1)^j [(2j+1)! cos(x)/x^{2j+2} + (2j+2)! sin(x)/x^{2j+3}]
// truncated after j = 7; the dropped remainder is below (16)!/x^17 < 2e-14.
double sine_tail_asymptotic(double x) {
  static constexpr double odd_fact[8] = {1.0,
                                         6.0,
                                         120.0,
                                         5040.0,
                                         362880.0,
                                         39916800.0,
                                         6227020800.0,
                                         1307674368000.0};
  static constexpr double even_fact[8] = {2.0,
                                          24.0,
                                          720.0,
                                          40320.0,
                                          3628800.0,
                                          479001600.0,
                                          87178291200.0,
                                          20922789888000.0};
  const double inv2 = 1.0 / (x * x);
  double pc = 0.0;
  double ps = 0.0;
  double p = 1.0;
  for (int j = 0; j < 8; ++j) {
    const double sgn = (j % 2 == 0) ? 1.0 : -1.0;
    pc += sgn * odd_fact[j] * p;
    ps += sgn * even_fact[j] * p;
    p *= inv2;
  }
  return std::cos(x) * pc * inv2 + std::sin(x) * ps * inv2 / x;
}

double adaptive_simpson(double a, double b, double fa, double fm, double fb,
                        double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = osc_integrand(lm);
  const double frm = osc_integrand(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return adaptive_simpson(a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

std::vector<std::int32_t> divisor_count_sieve(std::int64_t n) {
  std::vector<std::int32_t> d(static_cast<std::size_t>(n) + 1, 0);
  for (std::int64_t a = 1; a <= n; ++a)
    for (std::int64_t b = a; b <= n; b += a) d[static_cast<std::size_t>(b)] += 1;
  return d;
}

struct WeightedPhase {
  double boundary = 0.0;
  double remainder = 0.0;
  double tail_T = 0.0;
  double im_residual = 0.0;
};

// Shared evaluation of the split
//   sum_m w_m [boundary pair at t] + (1/4pi) sum_m w_m [F(mt) - F(m T_max)]
// over a finite list of (positive even m, weight) pairs.  The boundary pair
// is summed in complex arithmetic so the imaginary part left by rounding
// can be reported; the exact pair sums are real.
WeightedPhase phase_core(double t,
                         const std::vector<std::pair<std::int64_t, double>>& weights,
                         double T_max) {
  Complex boundary(0.0, 0.0);
  double remainder = 0.0;
  double tail_T = 0.0;
  for (const auto& mw : weights) {
    const double w = mw.second;
    if (w == 0.0) continue;
    const double m = static_cast<double>(mw.first);
    const double mt = m * t;
    const Complex e = std::polar(1.0, -mt);
    const Complex i_mt(0.0, mt);
    boundary += w * (e / i_mt - std::conj(e) / i_mt);
    remainder += w * (sine_tail_integral(mt) - sine_tail_integral(m * T_max));
    tail_T += w * 2.0 / ((m * T_max) * (m * T_max));
  }
  WeightedPhase out;
  out.boundary = boundary.real() / (8.0 * pi);
  out.im_residual = std::abs(boundary.imag()) / (8.0 * pi);
  out.remainder = remainder / (4.0 * pi);
  out.tail_T = tail_T / (4.0 * pi);
  return out;
}

void validate_common(double t, double T_max, double quad_tol) {
  if (!std::isfinite(t) || t <= 0.0)
    throw std::invalid_argument("phase_integral: t must be positive and finite");
  if (!std::isfinite(T_max) || T_max <= t)
    throw std::invalid_argument("phase_integral: T_max must be finite and exceed t");
  if (!(quad_tol > 0.0))
    throw std::invalid_argument("phase_integral: quad_tol must be positive");
}

[[noreturn]] void report_convergence_failure(double tail, double quad_tol,
                                             double t, std::int64_t M_max,
                                             double T_max) {
  std::ostringstream msg;
  msg << "phase_integral: certified tail " << tail << " exceeds quad_tol "
      << quad_tol << " (t=" << t << ", M_max=" << M_max << ", T_max=" << T_max
      << ")";
  throw ConvergenceFailure(msg.str());
}

} // namespace

double sine_tail_integral(double x) {
  if (!std::isfinite(x) || x <= 0.0)
    throw std::invalid_argument("sine_tail_integral: x must be positive and finite");
  if (x >= kAsymptoticCut) return sine_tail_asymptotic(x);
  const double fa = osc_integrand(x);
  const double fm = osc_integrand(0.5 * (x + kAsymptoticCut));
  const double fb = osc_integrand(kAsymptoticCut);
  const double whole = (kAsymptoticCut - x) / 6.0 * (fa + 4.0 * fm + fb);
  const double head = adaptive_simpson(x, kAsymptoticCut, fa, fm, fb, whole, 1e-14, 48);
  return head + sine_tail_asymptotic(kAsymptoticCut);
}

PhaseIntegral phase_integral(double t, const PhaseQuadratureConfig& cfg) {
  const double T_max = cfg.T_max == 0.0 ? 1e4 * t : cfg.T_max;
  validate_common(t, T_max, cfg.quad_tol);
  if (cfg.M_max < 2)
    throw std::invalid_argument("phase_integral: M_max must be at least 2");
  if (cfg.M_max > (std::int64_t{1} << 22))
    throw std::invalid_argument("phase_integral: M_max too large");

  const std::int64_t N = cfg.M_max / 2;
  const auto d = divisor_count_sieve(N);
  std::vector<std::pair<std::int64_t, double>> weights;
  weights.reserve(static_cast<std::size_t>(N));
  double cum_d = 0.0;
  for (std::int64_t n = 1; n <= N; ++n) {
    cum_d += d[static_cast<std::size_t>(n)];
    weights.emplace_back(2 * n, 2.0 * d[static_cast<std::size_t>(n)]);
  }
  const WeightedPhase core = phase_core(t, weights, T_max);

  // Frequencies beyond M_max drop remainder terms bounded by
  // 2 d(m/2) * 2/(mt)^2 / (4 pi) each; with n = m/2 that sums to
  // (1/4pi)(1/t^2) sum_{n>N} d(n)/n^2, which Abel summation against the
  // cumulative bound D(x) <= x log x + x (exact D(N) from the sieve)
  // turns into the closed expression below.
  const double dn = static_cast<double>(N);
  const double tail_m =
      (0.25 / pi) / (t * t) *
      std::max(0.0, 2.0 * (std::log(dn) + 2.0) / dn - cum_d / (dn * dn));

  PhaseIntegral out;
  out.value = core.boundary + core.remainder;
  out.im_residual = core.im_residual;
  out.tail_bound = core.tail_T + tail_m;
  if (out.tail_bound > cfg.quad_tol)
    report_convergence_failure(out.tail_bound, cfg.quad_tol, t, cfg.M_max, T_max);
  return out;
}

PhaseIntegral phase_integral_weighted(
    double t, const std::vector<std::pair<std::int64_t, double>>& weights,
    double T_max, double quad_tol) {
  validate_common(t, T_max, quad_tol);
  std::int64_t m_top = 0;
  for (const auto& mw : weights) {
    if (mw.first <= 0 || mw.first % 2 != 0)
      throw std::invalid_argument(
          "phase_integral_weighted: frequencies must be positive even integers");
    if (!std::isfinite(mw.second) || mw.second < 0.0)
      throw std::invalid_argument(
          "phase_integral_weighted: weights must be finite and nonnegative");
    m_top = std::max(m_top, mw.first);
  }
  const WeightedPhase core = phase_core(t, weights, T_max);
  PhaseIntegral out;
  out.value = core.boundary + core.remainder;
  out.im_residual = core.im_residual;
  out.tail_bound = core.tail_T;
  if (out.tail_bound > quad_tol)
    report_convergence_failure(out.tail_bound, quad_tol, t, m_top, T_max);
  return out;
}

Complex explicit_B(Complex alpha_const, double t, const PhaseQuadratureConfig& cfg) {
  const PhaseIntegral phi = phase_integral(t, cfg);
  return alpha_const * std::polar(1.0, -std::norm(alpha_const) * phi.value);
}

double scalar_ode_check(Complex alpha_const, std::pair<double, double> t_span,
                        const PhaseQuadratureConfig& cfg, double rtol,
                        double atol) {
  if (!std::isfinite(t_span.first) || !std::isfinite(t_span.second) ||
      t_span.first <= 0.0 || t_span.second <= t_span.first)
    throw std::invalid_argument("scalar_ode_check: need 0 < t0 < t1");
  if (cfg.M_max < 2 || cfg.M_max > (std::int64_t{1} << 22))
    throw std::invalid_argument("scalar_ode_check: M_max out of range");
  const double a2 = std::norm(alpha_const);
  if (a2 == 0.0) return 0.0;

  PhaseQuadratureConfig pcfg = cfg;
  if (pcfg.T_max == 0.0) pcfg.T_max = 1e4 * t_span.second;
  // Both sides of the comparison share the same frequency truncation, so
  // the dropped tail cancels and must not trip the convergence gate here.
  pcfg.quad_tol = std::numeric_limits<double>::infinity();

  const std::int64_t N = cfg.M_max / 2;
  const auto d = divisor_count_sieve(N);
  std::vector<double> r(static_cast<std::size_t>(N) + 1, 0.0);
  for (std::int64_t n = 1; n <= N; ++n)
    r[static_cast<std::size_t>(n)] = 2.0 * d[static_cast<std::size_t>(n)];

  // B' = i |alpha|^2 sigma(t) B / (8 pi t) with the real forcing
  // sigma(t) = sum_{0 < |m| <= M_max} r_m e^{-imt} = sum_n 2 r_{2n} cos(2nt),
  // evaluated by a renormalized phase recurrence.
  auto rhs = [&](double tt, const ComplexVector& y, ComplexVector& dy) {
    const Complex step = std::polar(1.0, -2.0 * tt);
    Complex e = step;
    double sigma = 0.0;
    for (std::int64_t n = 1; n <= N; ++n) {
      sigma += 2.0 * r[static_cast<std::size_t>(n)] * e.real();
      e *= step;
      if ((n & 63) == 0) e = std::polar(1.0, -2.0 * tt * static_cast<double>(n + 1));
    }
    dy.resize(1);
    dy[0] = Complex(0.0, a2 * sigma / (8.0 * pi * tt)) * y[0];
  };

  const int n_samples = 129;
  std::vector<double> samples(n_samples);
  for (int i = 0; i < n_samples; ++i)
    samples[static_cast<std::size_t>(i)] =
        t_span.first + (t_span.second - t_span.first) * i / (n_samples - 1);
  samples.back() = t_span.second;

  ComplexVector y0(1);
  y0[0] = alpha_const *
          std::polar(1.0, -a2 * phase_integral(t_span.first, pcfg).value);

  IntegratorOptions opts;
  opts.rtol = rtol;
  opts.atol = atol;
  const OdeSolution sol = solve_ode(rhs, t_span.first, t_span.second, y0, opts, samples);

  const double scale = std::sqrt(a2);
  double sup = 0.0;
  for (std::size_t i = 0; i < sol.times.size(); ++i) {
    const double phi = phase_integral(sol.times[i], pcfg).value;
    const Complex exact = alpha_const * std::polar(1.0, -a2 * phi);
    sup = std::max(sup, std::abs(sol.states[i][0] - exact) / scale);
  }
  return sup;
}

} // namespace combnls
