#pragma once

#include "combnls/integrator.hpp"
#include "combnls/resonance.hpp"
#include "combnls/types.hpp"

#include <vector>

namespace combnls {

/// Reusable right-hand-side evaluator for the truncated mode systems.
///
/// Both gauged systems share one skeleton: for each output mode k the table
/// supplies triples (j1, j2, j3) grouped by the even frequency m, and
///
///   S_k = sum over entries of  phase(m) * u_k * G_j1 * conj(G_j2) * G_j3,
///   D_k = (|y_k|^2 - |alpha_k|^2) * y_k,
///
/// where G_j = y_j * conj(u_j) and u_j carries the slow log-phase attached
/// to |alpha_j|^2.  The oscillatory factors phase(m) are generated from a
/// single complex exponential per call by an m/2-indexed recurrence with
/// periodic renormalization, so each evaluation costs O(#entries) complex
/// multiplies plus O(2K+1) transcendentals.
///
///   B variant:      i y' = -(1/8 pi t) S + (1/8 pi t) D
///                   with phase(m) = e^{-i m t},  u_j = e^{i|a_j|^2 log(4t)/(8 pi)}
///   A-tilde variant: i y' = +(1/8 pi t) S - (1/8 pi t) D
///                   with phase(m) = e^{-i m/(4t)}, u_j = e^{-i|a_j|^2 log(t)/(8 pi)}
class ModeSystem {
 public:
  ModeSystem(const ResonanceTable& table, VariableTag tag);

  int dimension() const { return n_; }
  VariableTag tag() const { return tag_; }

  /// dy/dt at time t > 0.  y and dy are dense vectors over [-K, K].
  void operator()(double t, const ComplexVector& y, ComplexVector& dy) const;

 private:
  struct PackedEntry {
    std::int32_t q; // m/2, signed
    std::int32_t j1, j2, j3; // 0-based storage indices
  };

  VariableTag tag_;
  int n_ = 0;
  std::int64_t q_max_ = 0;
  RealVector alpha_sq_;
  std::vector<PackedEntry> packed_;
  std::vector<std::size_t> mode_begin_;
  mutable ComplexVector u_, g_, phase_;
};

/// One-shot evaluation of the large-time system's right-hand side.
ComplexSequence rhs_B(double t, const ComplexSequence& B,
                      const ResonanceTable& table);

/// One-shot evaluation of the gauged small-time system's right-hand side.
ComplexSequence rhs_A_tilde(double t, const ComplexSequence& A_tilde,
                            const ResonanceTable& table);

/// Integrate the chosen system across config.t_span.
///
/// For the B system, state0 is the value at t_span.second (the system's
/// data lives at large time) and integration runs backward; for A and
/// A-tilde, state0 is the value at t_span.first.  The A system is served by
/// integrating A-tilde and attaching the gauge factor, which is exact.
/// Returned times are strictly increasing in all cases, at
/// config.sample_times when given and at accepted steps otherwise.
Trajectory integrate(VariableTag system, const ComplexSequence& state0,
                     const ResonanceTable& table, const SolverConfig& config);

/// A_k = e^{i |alpha_k|^2 log(t) / (8 pi)} * Atilde_k.
ComplexSequence gauge_apply(double t, const ComplexSequence& A_tilde,
                            const ComplexSequence& alpha);

/// Change of variables Atilde(s) = B(1/(4s)) applied to a sampled
/// trajectory; output times are 1/(4 t) in increasing order.
Trajectory time_inversion(const Trajectory& B_traj);

/// int (|v|^2 - c)^2 dx over one 2 pi period for the trigonometric
/// polynomial v with the state's coefficients, by a uniform grid fine
/// enough to be exact for the truncation.
double quartic_deviation(const ComplexSequence& state, double c);

/// E(t) = (1/2) * int |v_x|^2 dx - (theta/t) * int (|v|^2 - c)^2 dx over one
/// 2 pi period, where v is the trigonometric polynomial with the state's
/// coefficients.  The gradient term is evaluated spectrally.
/// c = config.energy_c, or total mass / (2 pi) when that is NaN.
double energy(const ComplexSequence& state, double t,
              const SolverConfig& config);

} // namespace combnls
