#pragma once

#include "combnls/types.hpp"

#include <cstddef>
#include <functional>
#include <vector>

namespace combnls {

/// Uniform spatial grid of 2^q points on [0, 2*pi).
struct FieldGrid {
  int q = 8;

  std::size_t count() const { return std::size_t{1} << q; }
  double x(std::size_t i) const;
};

/// Exact trigonometric synthesis v(x_i) = sum_k state_k e^{i k x_i} on the
/// grid.  The grid must hold at least 4K points for the state's stored
/// half-width K, so products of synthesized fields stay alias-free.
ComplexVector synthesize_v(const ComplexSequence& state, const FieldGrid& grid);

/// The time-inverting transform (T v)(t, x) = e^{i x^2/(4t)} / sqrt(t) *
/// conj(v(1/t, x/t)), evaluated pointwise through the caller's field
/// evaluator.  Rejects t <= 0.
Complex pseudo_conformal_u(const std::function<Complex(double, double)>& v_at,
                           double t, double x);

/// sum_k alpha_k e^{i (x-k)^2/(4t)} / sqrt(t) over the stored support of
/// alpha.  Rejects t <= 0.
Complex free_comb(double t, double x, const ComplexSequence& alpha);

/// Discrete L2 norms of i v_t + v_xx + (1/(2t)) (|v|^2 - M) v at the interior
/// times of a mode trajectory: time derivative by centered differences,
/// second spatial derivative spectrally, nonlinear term pointwise on the
/// grid.  M is fixed once from the first state's mass, not re-measured per
/// time.  Needs at least three times.
struct ResidualReport {
  std::vector<double> times; ///< interior trajectory times
  std::vector<double> values; ///< residual L2 norm at each interior time
  double mass_reference = 0.0;
};

ResidualReport vnls_residual(const Trajectory& traj, const FieldGrid& grid);

} // namespace combnls
