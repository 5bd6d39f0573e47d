#include "combnls/field.hpp"

#include "combnls/cutoff.hpp"
#include "combnls/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace combnls {

namespace {

void validate_grid(const FieldGrid& grid) {
  if (grid.q < 0 || grid.q > 24) {
    throw std::invalid_argument("FieldGrid: q must lie in [0, 24]");
  }
}

int half_width(const ComplexSequence& s) {
  return std::max(std::abs(s.k_min()), std::abs(s.k_max()));
}

void require_alias_free(const FieldGrid& grid, int K, const char* who) {
  if (4 * static_cast<std::size_t>(K) > grid.count()) {
    throw std::invalid_argument(std::string(who) + ": grid of " +
                                std::to_string(grid.count()) +
                                " points is too coarse for modes up to " +
                                std::to_string(K) + "; need at least 4K");
  }
}

// Serial synthesis into a preallocated buffer; the public entry point
// parallelizes over grid points, the residual loop over times.
void synth_into(const ComplexSequence& state, const FieldGrid& grid,
                std::size_t lo, std::size_t hi, ComplexVector& out) {
  for (std::size_t i = lo; i < hi; ++i) {
    const double xi = grid.x(i);
    Complex acc(0.0, 0.0);
    for (int k = state.k_min(); k <= state.k_max(); ++k) {
      acc += state[k] * std::polar(1.0, static_cast<double>(k) * xi);
    }
    out[static_cast<Eigen::Index>(i)] = acc;
  }
}

} // namespace

double FieldGrid::x(std::size_t i) const {
  return 2.0 * pi * static_cast<double>(i) / static_cast<double>(count());
}

ComplexVector synthesize_v(const ComplexSequence& state,
                           const FieldGrid& grid) {
  validate_grid(grid);
  require_alias_free(grid, half_width(state), "synthesize_v");
  const std::size_t n = grid.count();
  ComplexVector out = ComplexVector::Zero(static_cast<Eigen::Index>(n));
  parallel_for(n, [&](std::size_t i) { synth_into(state, grid, i, i + 1, out); });
  return out;
}

Complex pseudo_conformal_u(const std::function<Complex(double, double)>& v_at,
                           double t, double x) {
  if (!v_at) {
    throw std::invalid_argument("pseudo_conformal_u: missing field evaluator");
  }
  if (!std::isfinite(t) || t <= 0.0) {
    throw std::invalid_argument("pseudo_conformal_u: t must be positive");
  }
  return std::polar(1.0 / std::sqrt(t), x * x / (4.0 * t)) *
         std::conj(v_at(1.0 / t, x / t));
}

Complex free_comb(double t, double x, const ComplexSequence& alpha) {
  if (!std::isfinite(t) || t <= 0.0) {
    throw std::invalid_argument("free_comb: t must be positive");
  }
  const double amp = 1.0 / std::sqrt(t);
  Complex acc(0.0, 0.0);
  for (int k = alpha.k_min(); k <= alpha.k_max(); ++k) {
    const double d = x - static_cast<double>(k);
    acc += alpha[k] * std::polar(amp, d * d / (4.0 * t));
  }
  return acc;
}

ResidualReport vnls_residual(const Trajectory& traj, const FieldGrid& grid) {
  validate_grid(grid);
  const std::size_t n = traj.times.size();
  if (n < 3) {
    throw std::invalid_argument(
        "vnls_residual: need at least three time samples");
  }
  if (traj.states.size() != n) {
    throw std::invalid_argument(
        "vnls_residual: times and states disagree in length");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(traj.times[i]) || traj.times[i] <= 0.0 ||
        (i > 0 && traj.times[i] <= traj.times[i - 1])) {
      throw std::invalid_argument(
          "vnls_residual: times must be positive and strictly increasing");
    }
  }
  const int off = traj.states.front().offset;
  const int len = traj.states.front().size();
  for (const auto& s : traj.states) {
    if (s.offset != off || s.size() != len) {
      throw std::invalid_argument(
          "vnls_residual: states must share one mode window");
    }
  }
  require_alias_free(grid, half_width(traj.states.front()), "vnls_residual");

  // The background constant is fixed once from the initial state; mass is
  // conserved by the flow, so re-measuring it per sample would only fold
  // integrator drift into the residual.
  const double background = mass(traj.states.front());
  const std::size_t g = grid.count();

  ResidualReport report;
  report.mass_reference = background;
  report.times.assign(traj.times.begin() + 1, traj.times.end() - 1);
  report.values.assign(n - 2, 0.0);

  parallel_for(n - 2, [&](std::size_t j) {
    const std::size_t i = j + 1;
    const double ti = traj.times[i];
    const double span = traj.times[i + 1] - traj.times[i - 1];

    ComplexSequence rate;
    rate.offset = off;
    rate.values =
        (traj.states[i + 1].values - traj.states[i - 1].values) / span;

    ComplexSequence curvature;
    curvature.offset = off;
    curvature.values = ComplexVector::Zero(len);
    for (int k = off; k < off + len; ++k) {
      curvature[k] =
          -static_cast<double>(k) * static_cast<double>(k) * traj.states[i][k];
    }

    ComplexVector v = ComplexVector::Zero(static_cast<Eigen::Index>(g));
    ComplexVector vt = ComplexVector::Zero(static_cast<Eigen::Index>(g));
    ComplexVector vxx = ComplexVector::Zero(static_cast<Eigen::Index>(g));
    synth_into(traj.states[i], grid, 0, g, v);
    synth_into(rate, grid, 0, g, vt);
    synth_into(curvature, grid, 0, g, vxx);

    double sum = 0.0;
    for (std::size_t p = 0; p < g; ++p) {
      const Eigen::Index e = static_cast<Eigen::Index>(p);
      const Complex r = Complex(0.0, 1.0) * vt[e] + vxx[e] +
                        (std::norm(v[e]) - background) * v[e] / (2.0 * ti);
      sum += std::norm(r);
    }
    report.values[j] = std::sqrt(sum / static_cast<double>(g));
  });
  return report;
}

} // namespace combnls
