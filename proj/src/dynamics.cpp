#include "combnls/dynamics.hpp"

#include "combnls/cutoff.hpp"
#include "combnls/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace combnls {

namespace {

constexpr double inv_8pi = 1.0 / (8.0 * pi);

ComplexVector to_dense(const ComplexSequence& s, int K, const char* who) {
  if (s.size() > 0 && (s.k_min() < -K || s.k_max() > K)) {
    throw std::invalid_argument(std::string(who) +
                                ": state support exceeds the table truncation");
  }
  ComplexVector y = ComplexVector::Zero(2 * K + 1);
  for (int k = s.k_min(); k <= s.k_max(); ++k) y[k + K] = s[k];
  return y;
}

ComplexSequence from_dense(const ComplexVector& y, int K) {
  ComplexSequence s;
  s.offset = -K;
  s.values = y;
  return s;
}

void require_positive_time(double t, const char* who) {
  if (!(t > 0.0)) {
    throw std::invalid_argument(std::string(who) + ": requires t > 0");
  }
}

} // namespace

ModeSystem::ModeSystem(const ResonanceTable& table, VariableTag tag)
    : tag_(tag), n_(2 * table.K + 1), alpha_sq_(table.alpha_sq) {
  if (tag == VariableTag::A) {
    throw std::invalid_argument(
        "ModeSystem: the ungauged A system has no direct evaluator; "
        "integrate A_tilde and attach the gauge factor");
  }
  const int K = table.K;
  std::size_t total = 0;
  for (const auto& list : table.entries) total += list.size();
  packed_.reserve(total);
  mode_begin_.resize(static_cast<std::size_t>(n_) + 1, 0);
  for (int i = 0; i < n_; ++i) {
    mode_begin_[static_cast<std::size_t>(i)] = packed_.size();
    for (const ResonanceEntry& e : table.entries[static_cast<std::size_t>(i)]) {
      const std::int64_t q = e.m / 2;
      if (std::llabs(q) > std::numeric_limits<std::int32_t>::max()) {
        throw std::domain_error(
            "ModeSystem: table frequency exceeds the packed index range");
      }
      packed_.push_back(PackedEntry{static_cast<std::int32_t>(q),
                                    e.j1 + K, e.j2 + K, e.j3 + K});
      q_max_ = std::max(q_max_, static_cast<std::int64_t>(std::llabs(q)));
    }
  }
  mode_begin_[static_cast<std::size_t>(n_)] = packed_.size();
  u_.resize(n_);
  g_.resize(n_);
  phase_.resize(q_max_ + 1);
}

void ModeSystem::operator()(double t, const ComplexVector& y,
                            ComplexVector& dy) const {
  require_positive_time(t, "ModeSystem");
  if (y.size() != n_) {
    throw std::invalid_argument("ModeSystem: state dimension mismatch");
  }
  const bool is_b = (tag_ == VariableTag::B);

  // Slow per-mode log phases and the gauged amplitudes G_j.
  const double L = is_b ? std::log(4.0 * t) * inv_8pi : -std::log(t) * inv_8pi;
  for (int j = 0; j < n_; ++j) {
    u_[j] = std::polar(1.0, alpha_sq_[j] * L);
    g_[j] = y[j] * std::conj(u_[j]);
  }

  // Oscillatory phases indexed by q = m/2: phase_[q] = e^{-i w q} with
  // w = 2t (B) or 1/(2t) (A-tilde).  Recurrence on the base rotation with
  // periodic exact renormalization to stop drift.
  const double w = is_b ? 2.0 * t : 0.5 / t;
  phase_[0] = Complex(1.0, 0.0);
  if (q_max_ >= 1) {
    const Complex base = std::polar(1.0, -w);
    for (std::int64_t q = 1; q <= q_max_; ++q) {
      if ((q & 127) == 0) {
        phase_[q] = std::polar(1.0, -w * static_cast<double>(q));
      } else {
        phase_[q] = phase_[q - 1] * base;
      }
    }
  }

  const Complex pref =
      Complex(0.0, is_b ? 1.0 : -1.0) * (inv_8pi / t);
  parallel_for(static_cast<std::size_t>(n_), [&](std::size_t i) {
    Complex acc(0.0, 0.0);
    const std::size_t lo = mode_begin_[i], hi = mode_begin_[i + 1];
    for (std::size_t e = lo; e < hi; ++e) {
      const PackedEntry& p = packed_[e];
      const Complex ph =
          p.q >= 0 ? phase_[p.q] : std::conj(phase_[-static_cast<std::int64_t>(p.q)]);
      acc += ph * (g_[p.j1] * std::conj(g_[p.j2]) * g_[p.j3]);
    }
    const Complex S = u_[static_cast<Eigen::Index>(i)] * acc;
    const Complex D =
        (std::norm(y[static_cast<Eigen::Index>(i)]) - alpha_sq_[static_cast<Eigen::Index>(i)]) *
        y[static_cast<Eigen::Index>(i)];
    dy[static_cast<Eigen::Index>(i)] = pref * (S - D);
  });
}

ComplexSequence rhs_B(double t, const ComplexSequence& B,
                      const ResonanceTable& table) {
  require_positive_time(t, "rhs_B");
  ModeSystem sys(table, VariableTag::B);
  ComplexVector y = to_dense(B, table.K, "rhs_B");
  ComplexVector dy(y.size());
  sys(t, y, dy);
  return from_dense(dy, table.K);
}

ComplexSequence rhs_A_tilde(double t, const ComplexSequence& A_tilde,
                            const ResonanceTable& table) {
  require_positive_time(t, "rhs_A_tilde");
  ModeSystem sys(table, VariableTag::ATilde);
  ComplexVector y = to_dense(A_tilde, table.K, "rhs_A_tilde");
  ComplexVector dy(y.size());
  sys(t, y, dy);
  return from_dense(dy, table.K);
}

Trajectory integrate(VariableTag system, const ComplexSequence& state0,
                     const ResonanceTable& table, const SolverConfig& config) {
  const int K = table.K;
  const auto [t0, t1] = config.t_span;
  if (!(t0 < t1)) {
    throw std::invalid_argument("integrate: t_span must satisfy t0 < t1");
  }
  require_positive_time(t0, "integrate");

  IntegratorOptions opts;
  opts.rtol = config.rtol;
  opts.atol = config.atol;
  opts.max_step = config.max_step;

  const bool backward = (system == VariableTag::B);
  const VariableTag eval_tag =
      (system == VariableTag::A) ? VariableTag::ATilde : system;
  ModeSystem sys(table, eval_tag);
  auto rhs = [&sys](double t, const ComplexVector& y, ComplexVector& dy) {
    sys(t, y, dy);
  };

  ComplexVector y0 = to_dense(state0, K, "integrate");
  if (system == VariableTag::A) {
    // Remove the gauge from the supplied A(t0) to get the evolved variable.
    const double L = std::log(t0) * inv_8pi;
    for (int j = 0; j < y0.size(); ++j) {
      y0[j] *= std::polar(1.0, -table.alpha_sq[j] * L);
    }
  }

  std::vector<double> samples = config.sample_times;
  if (!samples.empty()) {
    if (!std::is_sorted(samples.begin(), samples.end()) ||
        samples.front() < t0 || samples.back() > t1) {
      throw std::invalid_argument(
          "integrate: sample times must be ascending within t_span");
    }
    if (backward) std::reverse(samples.begin(), samples.end());
  }

  const double ta = backward ? t1 : t0;
  const double tb = backward ? t0 : t1;
  OdeSolution sol = solve_ode(rhs, ta, tb, y0, opts, samples);

  Trajectory out;
  out.variable_tag = system;
  const std::size_t n = sol.times.size();
  out.times.resize(n);
  out.states.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t src = backward ? n - 1 - i : i;
    double t = sol.times[src];
    ComplexVector y = std::move(sol.states[src]);
    if (system == VariableTag::A) {
      const double L = std::log(t) * inv_8pi;
      for (int j = 0; j < y.size(); ++j) {
        y[j] *= std::polar(1.0, table.alpha_sq[j] * L);
      }
    }
    out.times[i] = t;
    out.states.push_back(from_dense(y, K));
  }
  return out;
}

ComplexSequence gauge_apply(double t, const ComplexSequence& A_tilde,
                            const ComplexSequence& alpha) {
  require_positive_time(t, "gauge_apply");
  const double L = std::log(t) * inv_8pi;
  ComplexSequence out = A_tilde;
  for (int k = out.k_min(); k <= out.k_max(); ++k) {
    out[k] *= std::polar(1.0, std::norm(alpha.at(k)) * L);
  }
  return out;
}

Trajectory time_inversion(const Trajectory& B_traj) {
  if (B_traj.variable_tag != VariableTag::B) {
    throw std::invalid_argument("time_inversion: expects a B trajectory");
  }
  Trajectory out;
  out.variable_tag = VariableTag::ATilde;
  const std::size_t n = B_traj.times.size();
  out.times.resize(n);
  out.states.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = B_traj.times[i];
    if (!(t > 0.0)) {
      throw std::invalid_argument("time_inversion: requires positive times");
    }
    const std::size_t dst = n - 1 - i; // s = 1/(4t) reverses the order
    out.times[dst] = 1.0 / (4.0 * t);
    out.states[dst] = B_traj.states[i];
  }
  return out;
}

double quartic_deviation(const ComplexSequence& state, double c) {
  // Uniform periodic quadrature is exact once the grid resolves the
  // degree-4K trigonometric polynomial (|v|^2 - c)^2.
  const int deg = state.size() == 0
                      ? 0
                      : std::max(std::abs(state.k_min()),
                                 std::abs(state.k_max()));
  const int N = 4 * deg + 5;
  double Q = 0.0;
  for (int i = 0; i < N; ++i) {
    const double x = 2.0 * pi * i / N;
    Complex v(0.0, 0.0);
    for (int k = state.k_min(); k <= state.k_max(); ++k) {
      v += state[k] * std::polar(1.0, k * x);
    }
    const double dev = std::norm(v) - c;
    Q += dev * dev;
  }
  return Q * 2.0 * pi / N;
}

double energy(const ComplexSequence& state, double t,
              const SolverConfig& config) {
  require_positive_time(t, "energy");
  double grad = 0.0;
  for (int k = state.k_min(); k <= state.k_max(); ++k) {
    grad += static_cast<double>(k) * static_cast<double>(k) *
            std::norm(state[k]);
  }
  grad *= pi;

  double c = config.energy_c;
  if (std::isnan(c)) c = mass(state) / (2.0 * pi);

  return grad - config.energy_theta / t * quartic_deviation(state, c);
}

} // namespace combnls
