#pragma once

#include "combnls/resonance.hpp"
#include "combnls/types.hpp"

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace combnls {

/// Smooth switch-on profile: zero up to pi*N, one from pi*(N+1) on,
/// a fixed quintic smoothstep in between.
struct CutoffFamily {
  int N = 0;
  double operator()(double t) const;
};

/// Knobs for the oscillatory quadrature behind the integral map.
struct OscQuadrature {
  /// Gate for the certified tail estimate beyond the mesh horizon.
  double tol = 1e-4;
  /// Cap on the total mesh node count (panels are halved to fit).
  std::size_t max_nodes = 65537;
  /// Mesh panels per oscillation period of the fastest table phase.
  double nodes_per_wave = 8.0;
};

/// Perturbation amplitudes R_k sampled on a shared time mesh.  The mesh is
/// a sequence of symmetric three-node panels: even indices are panel
/// boundaries, odd indices their exact midpoints.
struct GridFunctionSequence {
  int K = 0;
  std::vector<double> times;
  std::vector<ComplexVector> states; ///< states[i] has 2K+1 entries, mode k at k+K

  /// Piecewise-linear sample of mode k; zero outside the mode range and
  /// outside the mesh span.
  Complex value(int k, double t) const;
};

/// Panel-boundary mesh on [pi*N, t_max], graded toward the left end and
/// sized to resolve oscillations up to |m| = max_abs_m, midpoints included.
std::vector<double> graded_mesh(int N, double t_max, std::int64_t max_abs_m,
                                const OscQuadrature& quad);

GridFunctionSequence zero_grid_sequence(int K, const std::vector<double>& mesh);

/// Which part of the integral map to evaluate: the full map, the
/// R-independent piece, the piece linear in R, or the rest.
enum class MapComponent { Full, T0, T1, T2 };

/// One application of the damped integral map to R: component `part` of
///   (T R)_k(t) = (i eta_N(t) / 8 pi) * int_t^inf (eta_N(tau)/tau)
///                [ D_k(tau) - S_k(tau) ] dtau
/// evaluated on R's own mesh.  The improper integral is truncated at the
/// mesh horizon with a one-step by-parts correction of the oscillatory
/// boundary; the remaining certified estimate is returned through
/// `tail_bound` (worst mode) and gated against quad.tol.
struct MapResult {
  GridFunctionSequence value;
  double tail_bound = 0.0;
};

MapResult apply_T(const GridFunctionSequence& R, const ComplexSequence& alpha,
                  const ResonanceTable& table, const CutoffFamily& cutoff,
                  const OscQuadrature& quad, MapComponent part = MapComponent::Full);

/// Thrown when Picard iteration sees three consecutive nondecreasing
/// difference norms (ratio >= 1).
struct PicardDivergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PicardResult {
  GridFunctionSequence solution;
  std::vector<double> ratios; ///< successive-gap ratios in the X norm
  std::size_t iterations = 0;
  double final_gap = 0.0;
  double residual = 0.0;   ///< ||R - T(R)|| in the X norm at the end
  double tail_bound = 0.0; ///< horizon-tail estimate of the final map
  bool converged = false;
};

/// Picard iteration R <- T(R) from R = 0 on [pi*N, t_max], stopping when
/// the successive-iterate X^{s,p} gap falls below tol or after max_iter
/// sweeps.  Ratios >= 1 three times in a row raise PicardDivergence.
PicardResult picard_solve(const ComplexSequence& alpha, const ResonanceTable& table,
                          int N, double s, double p, double t_max, double tol,
                          std::size_t max_iter, const OscQuadrature& quad);

/// ||R - T(R)|| in the X^{s,p} norm over the windows carried by R's mesh.
double residual_norm(const GridFunctionSequence& R, const ComplexSequence& alpha,
                     const ResonanceTable& table, const CutoffFamily& cutoff,
                     const OscQuadrature& quad, double s, double p);

} // namespace combnls
