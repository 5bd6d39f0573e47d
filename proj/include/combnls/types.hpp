#pragma once

#include <Eigen/Core>

#include <complex>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace combnls {

using Complex = std::complex<double>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using RealVector = Vector<double>;
using ComplexVector = Vector<Complex>;

/// A finitely supported two-sided sequence of complex amplitudes.
///
/// `values[i]` is the amplitude of mode `offset + i`; modes outside the
/// stored window are identically zero.  This is the common currency for
/// initial data, solver states, and file I/O.
struct ComplexSequence {
  int offset = 0;
  ComplexVector values;

  int size() const { return static_cast<int>(values.size()); }
  int k_min() const { return offset; }
  int k_max() const { return offset + size() - 1; }

  bool contains(int k) const { return k >= k_min() && k <= k_max(); }

  /// Amplitude of mode k, zero outside the stored window.
  Complex at(int k) const {
    return contains(k) ? values[k - offset] : Complex(0.0, 0.0);
  }

  Complex& operator[](int k) { return values[k - offset]; }
  Complex operator[](int k) const { return values[k - offset]; }
};

/// Sequence with window [-K, K] and all amplitudes zero.
inline ComplexSequence zero_sequence(int K) {
  ComplexSequence s;
  s.offset = -K;
  s.values = ComplexVector::Zero(2 * K + 1);
  return s;
}

/// Sum of |values|^2 over the stored window.
inline double mass(const ComplexSequence& s) {
  return s.values.squaredNorm();
}

/// Which unknown a trajectory records.  The three formulations are related
/// by explicit changes of variable (see dynamics.hpp).
enum class VariableTag { A, ATilde, B };

inline std::string to_string(VariableTag tag) {
  switch (tag) {
    case VariableTag::A: return "A";
    case VariableTag::ATilde: return "A_tilde";
    case VariableTag::B: return "B";
  }
  return "?";
}

/// Time samples of a mode-amplitude solution, times strictly increasing.
struct Trajectory {
  VariableTag variable_tag = VariableTag::B;
  std::vector<double> times;
  std::vector<ComplexSequence> states;
};

/// Tunable knobs shared by the mode-ODE solvers.
///
/// `energy_c` is the reference background used by the energy diagnostic;
/// NaN means "derive from the data" (total mass / (2*pi)).
struct SolverConfig {
  int K = 8;
  double rtol = 1e-10;
  double atol = 1e-12;
  std::pair<double, double> t_span{1.0, 10.0};
  double max_step = std::numeric_limits<double>::infinity();
  double energy_theta = 0.125;
  double energy_c = std::numeric_limits<double>::quiet_NaN();
  /// Requested dense-output times (strictly increasing, inside t_span).
  /// Empty: record accepted integrator steps instead.
  std::vector<double> sample_times;
};

} // namespace combnls
