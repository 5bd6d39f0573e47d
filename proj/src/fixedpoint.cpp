#include "combnls/fixedpoint.hpp"

#include "combnls/closed_form.hpp"
#include "combnls/cutoff.hpp"
#include "combnls/norms.hpp"
#include "combnls/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <sstream>
#include <utility>

namespace combnls {

double CutoffFamily::operator()(double t) const { return eta_shifted(t, N); }

namespace {

constexpr double k_map_scale = 1.0 / (8.0 * pi);

void validate_quad(const OscQuadrature& quad) {
  if (!(quad.tol > 0.0))
    throw std::invalid_argument("OscQuadrature: tol must be positive");
  if (quad.max_nodes < 17)
    throw std::invalid_argument("OscQuadrature: max_nodes must be at least 17");
  if (!std::isfinite(quad.nodes_per_wave) || quad.nodes_per_wave < 1.0)
    throw std::invalid_argument("OscQuadrature: nodes_per_wave must be at least one");
}

void validate_grid(const GridFunctionSequence& R) {
  if (R.K < 0)
    throw std::invalid_argument("GridFunctionSequence: mode bound must be nonnegative");
  const std::size_t n = R.times.size();
  if (n < 3 || n % 2 == 0)
    throw std::invalid_argument(
        "GridFunctionSequence: mesh must hold an odd number of at least three nodes");
  if (R.states.size() != n)
    throw std::invalid_argument("GridFunctionSequence: one state per mesh node required");
  const auto width = static_cast<Eigen::Index>(2 * R.K + 1);
  for (const auto& st : R.states)
    if (st.size() != width)
      throw std::invalid_argument("GridFunctionSequence: state width must be 2K+1");
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(R.times[i]))
      throw std::invalid_argument("GridFunctionSequence: mesh nodes must be finite");
    if (i > 0 && !(R.times[i] > R.times[i - 1]))
      throw std::invalid_argument("GridFunctionSequence: mesh must be strictly increasing");
  }
  for (std::size_t j = 0; 2 * j + 2 < n; ++j) {
    const double a = R.times[2 * j], c = R.times[2 * j + 1], b = R.times[2 * j + 2];
    if (std::abs(c - 0.5 * (a + b)) > 1e-9 * (b - a))
      throw std::invalid_argument(
          "GridFunctionSequence: odd mesh nodes must bisect their panels");
  }
}

/// Moments J_p = int_0^1 xi^p e^{-i beta xi} d xi for p = 0, 1, 2, switching
/// to a short Taylor sum near beta = 0 where the closed forms cancel.
void one_sided_moments(double beta, Complex J[3]) {
  if (std::abs(beta) < 0.5) {
    const Complex u(0.0, -beta);
    J[0] = J[1] = J[2] = Complex(0.0, 0.0);
    Complex term(1.0, 0.0); // u^j / j!
    for (int j = 0; j <= 16; ++j) {
      J[0] += term / double(j + 1);
      J[1] += term / double(j + 2);
      J[2] += term / double(j + 3);
      term *= u / double(j + 1);
    }
    return;
  }
  const Complex u(0.0, -beta);
  const Complex eu(std::cos(beta), -std::sin(beta));
  J[0] = (eu - 1.0) / u;
  J[1] = (eu * (u - 1.0) + 1.0) / (u * u);
  J[2] = (eu * (u * u - 2.0 * u + 2.0) - 2.0) / (u * u * u);
}

/// Quadrature weights for one symmetric panel [c - H, c + H] against the
/// phase e^{-i m tau}: the quadratic through the three node values is
/// integrated exactly.  `full_*` covers the whole panel, `part_*` the right
/// half [c, c + H].  At m = 0 the full weights reduce to Simpson's rule.
struct PanelWeights {
  Complex full_a, full_c, full_b;
  Complex part_a, part_c, part_b;
};

PanelWeights panel_weights(double m, double c, double H) {
  Complex J[3];
  one_sided_moments(m * H, J);
  // Two-sided moments over [-1, 1] follow from the one-sided ones by the
  // xi -> -xi reflection: M_p = J_p + (-1)^p conj(J_p).
  const Complex M0(2.0 * J[0].real(), 0.0);
  const Complex M1(0.0, 2.0 * J[1].imag());
  const Complex M2(2.0 * J[2].real(), 0.0);
  const Complex ph = std::polar(H, -m * c);
  PanelWeights w;
  w.full_a = ph * (M2 - M1) * 0.5;
  w.full_c = ph * (M0 - M2);
  w.full_b = ph * (M2 + M1) * 0.5;
  w.part_a = ph * (J[2] - J[1]) * 0.5;
  w.part_c = ph * (J[0] - J[2]);
  w.part_b = ph * (J[2] + J[1]) * 0.5;
  return w;
}

struct Group {
  int k = 0;
  std::size_t lo = 0, hi = 0;
};

/// Table entries regrouped by phase frequency m, so panel weights are built
/// once per frequency and shared by every output mode.
std::map<std::int64_t, std::vector<Group>> group_by_frequency(const ResonanceTable& table) {
  std::map<std::int64_t, std::vector<Group>> by_m;
  for (int k = -table.K; k <= table.K; ++k) {
    const auto& es = table.for_mode(k);
    std::size_t i = 0;
    while (i < es.size()) {
      std::size_t j = i + 1;
      while (j < es.size() && es[j].m == es[i].m) ++j;
      by_m[es[i].m].push_back(Group{k, i, j});
      i = j;
    }
  }
  return by_m;
}

std::int64_t table_max_abs_m(const ResonanceTable& table) {
  std::int64_t top = 0;
  for (const auto& mode : table.entries)
    for (const auto& e : mode) top = std::max(top, std::abs(e.m));
  return top;
}

/// X^{s,p} norm of a mesh-backed sequence over every window its span covers.
double grid_xsp(const GridFunctionSequence& g, double s, double p) {
  int nu_max = static_cast<int>(std::floor(g.times.back() / pi + 1e-9)) - 3;
  if (nu_max < 0) nu_max = 0;
  const ModeFunction f = [&g](int k, double t) { return g.value(k, t); };
  return xsp_norm(f, -g.K, g.K, s, p, nu_max);
}

} // namespace

Complex GridFunctionSequence::value(int k, double t) const {
  if (k < -K || k > K || times.empty()) return Complex(0.0, 0.0);
  if (t < times.front() || t > times.back()) return Complex(0.0, 0.0);
  const auto row = static_cast<Eigen::Index>(k + K);
  if (t == times.back()) return states.back()[row];
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  const auto hi = static_cast<std::size_t>(it - times.begin());
  const std::size_t lo = hi - 1;
  const double w = (t - times[lo]) / (times[hi] - times[lo]);
  return (1.0 - w) * states[lo][row] + w * states[hi][row];
}

std::vector<double> graded_mesh(int N, double t_max, std::int64_t max_abs_m,
                                const OscQuadrature& quad) {
  validate_quad(quad);
  if (N < 0) throw std::invalid_argument("graded_mesh: N must be nonnegative");
  const double left = pi * N;
  if (!std::isfinite(t_max) || t_max <= left)
    throw std::invalid_argument("graded_mesh: horizon must lie beyond the switch-on point");
  const double span = t_max - left;
  const double m_eff = static_cast<double>(std::max<std::int64_t>(1, max_abs_m));
  const double want = std::ceil(span * m_eff * quad.nodes_per_wave / (2.0 * pi));
  const auto cap = (quad.max_nodes - 1) / 2;
  const auto panels = std::max<std::size_t>(
      8, static_cast<std::size_t>(std::min(want, static_cast<double>(cap))));
  std::vector<double> mesh(2 * panels + 1);
  for (std::size_t j = 0; j <= panels; ++j) {
    const double xi = static_cast<double>(j) / static_cast<double>(panels);
    mesh[2 * j] = left + span * std::pow(xi, 1.5);
  }
  mesh[0] = left;
  mesh[2 * panels] = t_max;
  for (std::size_t j = 0; j < panels; ++j)
    mesh[2 * j + 1] = 0.5 * (mesh[2 * j] + mesh[2 * j + 2]);
  return mesh;
}

GridFunctionSequence zero_grid_sequence(int K, const std::vector<double>& mesh) {
  GridFunctionSequence g;
  g.K = K;
  g.times = mesh;
  const ComplexVector zero = ComplexVector::Zero(2 * K + 1);
  g.states.assign(mesh.size(), zero);
  validate_grid(g);
  return g;
}

MapResult apply_T(const GridFunctionSequence& R, const ComplexSequence& alpha,
                  const ResonanceTable& table, const CutoffFamily& cutoff,
                  const OscQuadrature& quad, MapComponent part) {
  validate_quad(quad);
  validate_grid(R);
  if (R.K != table.K)
    throw std::invalid_argument(
        "apply_T: perturbation grid and table disagree on the mode range");
  if (cutoff.N < 0)
    throw std::invalid_argument("apply_T: cutoff index must be nonnegative");
  const int K = table.K;
  const std::size_t width = static_cast<std::size_t>(2 * K + 1);
  for (int k = -K; k <= K; ++k) {
    const double want = table.alpha_sq[k + K];
    const double got = std::norm(alpha.at(k));
    if (std::abs(want - got) > 1e-10 * (1.0 + std::abs(want)))
      throw std::invalid_argument(
          "apply_T: alpha amplitudes disagree with the table's reference sequence");
  }

  const std::size_t n = R.times.size();
  const std::size_t panels = (n - 1) / 2;
  const double horizon = R.times.back();

  std::vector<double> eta_n(n), weight(n, 0.0), logphase(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double tau = R.times[i];
    eta_n[i] = eta_shifted(tau, cutoff.N);
    if (tau > 0.0) {
      weight[i] = eta_n[i] / tau;
      logphase[i] = std::log(4.0 * tau) * k_map_scale;
    }
  }

  // Mode-major node arrays: WA and WR hold the constant and perturbation
  // fields with their amplitude-dependent log-time phases attached, FK the
  // conjugate output phase times the integrand weight.  Rotating every slot
  // this way turns the per-entry phase exp(i*lambda*log(4 tau)/(8 pi)) into
  // a plain product of per-mode factors.
  std::vector<Complex> WA(width * n), WR(width * n), FK(width * n);
  parallel_for(width, [&](std::size_t r) {
    const double a = table.alpha_sq[static_cast<Eigen::Index>(r)];
    const Complex av = alpha.at(static_cast<int>(r) - K);
    Complex* wa = &WA[r * n];
    Complex* wr = &WR[r * n];
    Complex* fk = &FK[r * n];
    const auto row = static_cast<Eigen::Index>(r);
    for (std::size_t i = 0; i < n; ++i) {
      const Complex u = std::polar(1.0, a * logphase[i]);
      wa[i] = u * av;
      wr[i] = u * R.states[i][row];
      fk[i] = weight[i] * std::conj(u);
    }
  });

  // Which slot substitutions build the requested component: 0 reads the
  // constant field, 1 the perturbation, 2 their sum.
  struct Sel {
    int s1, s2, s3;
  };
  std::vector<Sel> sels;
  switch (part) {
    case MapComponent::Full: sels = {Sel{2, 2, 2}}; break;
    case MapComponent::T0: sels = {Sel{0, 0, 0}}; break;
    case MapComponent::T1: sels = {Sel{1, 0, 0}, Sel{0, 1, 0}, Sel{0, 0, 1}}; break;
    case MapComponent::T2:
      sels = {Sel{1, 1, 0}, Sel{1, 0, 1}, Sel{0, 1, 1}, Sel{1, 1, 1}};
      break;
  }

  std::vector<Complex> acc_all(width * n, Complex(0.0, 0.0));
  std::vector<Complex> tail_correction(width, Complex(0.0, 0.0));
  std::vector<double> tail_estimate(width, 0.0);

  const auto groups = group_by_frequency(table);
  std::vector<PanelWeights> pw(panels);
  for (const auto& kv : groups) {
    const double mf = static_cast<double>(kv.first);
    for (std::size_t j = 0; j < panels; ++j) {
      const double c = R.times[2 * j + 1];
      pw[j] = panel_weights(mf, c, c - R.times[2 * j]);
    }
    parallel_for(kv.second.size(), [&](std::size_t gi) {
      const Group& g = kv.second[gi];
      const std::size_t row = static_cast<std::size_t>(g.k + K);
      const auto& es = table.for_mode(g.k);
      std::vector<Complex> gb(n, Complex(0.0, 0.0));
      for (std::size_t e = g.lo; e < g.hi; ++e) {
        const Complex* a1 = &WA[static_cast<std::size_t>(es[e].j1 + K) * n];
        const Complex* a2 = &WA[static_cast<std::size_t>(es[e].j2 + K) * n];
        const Complex* a3 = &WA[static_cast<std::size_t>(es[e].j3 + K) * n];
        const Complex* r1 = &WR[static_cast<std::size_t>(es[e].j1 + K) * n];
        const Complex* r2 = &WR[static_cast<std::size_t>(es[e].j2 + K) * n];
        const Complex* r3 = &WR[static_cast<std::size_t>(es[e].j3 + K) * n];
        for (const Sel& s : sels) {
          for (std::size_t i = 0; i < n; ++i) {
            const Complex v1 = s.s1 == 0 ? a1[i] : s.s1 == 1 ? r1[i] : a1[i] + r1[i];
            const Complex v2 = s.s2 == 0 ? a2[i] : s.s2 == 1 ? r2[i] : a2[i] + r2[i];
            const Complex v3 = s.s3 == 0 ? a3[i] : s.s3 == 1 ? r3[i] : a3[i] + r3[i];
            gb[i] += v1 * std::conj(v2) * v3;
          }
        }
      }
      const Complex* fk = &FK[row * n];
      for (std::size_t i = 0; i < n; ++i) gb[i] *= fk[i];

      // Suffix sums of panel integrals give int_t^horizon at every node in
      // one right-to-left sweep; the interaction sum enters with a minus.
      Complex* acc = &acc_all[row * n];
      Complex suffix(0.0, 0.0);
      for (std::size_t j = panels; j-- > 0;) {
        const Complex g0 = gb[2 * j], g1 = gb[2 * j + 1], g2 = gb[2 * j + 2];
        const Complex full = pw[j].full_a * g0 + pw[j].full_c * g1 + pw[j].full_b * g2;
        const Complex half = pw[j].part_a * g0 + pw[j].part_c * g1 + pw[j].part_b * g2;
        acc[2 * j + 1] -= half + suffix;
        suffix += full;
        acc[2 * j] -= suffix;
      }

      // One integration by parts estimates the dropped [horizon, inf) piece;
      // the first neglected term sizes the certificate.
      const Complex g_end = gb[n - 1];
      tail_correction[row] -= std::polar(1.0, -mf * horizon) * g_end / Complex(0.0, mf);
      tail_estimate[row] += std::abs(g_end) * 3.0 / (horizon * mf * mf);
    });
  }

  // Phase-free diagonal part, integrated by the same panel rule at m = 0
  // (plain Simpson).  The component splits mirror the cubic expansion of
  // (|R+alpha|^2 - |alpha|^2)(R+alpha).
  if (part != MapComponent::T0) {
    std::vector<PanelWeights> pw0(panels);
    for (std::size_t j = 0; j < panels; ++j) {
      const double c = R.times[2 * j + 1];
      pw0[j] = panel_weights(0.0, c, c - R.times[2 * j]);
    }
    parallel_for(width, [&](std::size_t row) {
      const int k = static_cast<int>(row) - K;
      const Complex av = alpha.at(k);
      const double ak = table.alpha_sq[static_cast<Eigen::Index>(row)];
      const auto col = static_cast<Eigen::Index>(row);
      std::vector<Complex> db(n);
      for (std::size_t i = 0; i < n; ++i) {
        const Complex r = R.states[i][col];
        Complex d;
        switch (part) {
          case MapComponent::T1: d = ak * r + av * av * std::conj(r); break;
          case MapComponent::T2:
            d = std::conj(av) * r * r + 2.0 * av * std::norm(r) + std::norm(r) * r;
            break;
          default: {
            const Complex y = r + av;
            d = (std::norm(y) - ak) * y;
            break;
          }
        }
        db[i] = weight[i] * d;
      }
      Complex* acc = &acc_all[row * n];
      Complex suffix(0.0, 0.0);
      for (std::size_t j = panels; j-- > 0;) {
        const Complex g0 = db[2 * j], g1 = db[2 * j + 1], g2 = db[2 * j + 2];
        const Complex full = pw0[j].full_a * g0 + pw0[j].full_c * g1 + pw0[j].full_b * g2;
        const Complex half = pw0[j].part_a * g0 + pw0[j].part_c * g1 + pw0[j].part_b * g2;
        acc[2 * j + 1] += half + suffix;
        suffix += full;
        acc[2 * j] += suffix;
      }
      // No oscillation to play against here: model the integrand as decaying
      // like 1/tau^2 past the horizon and charge the full extrapolation.
      tail_estimate[row] += std::abs(db[n - 1]) * horizon;
    });
  }

  MapResult out;
  out.value.K = K;
  out.value.times = R.times;
  {
    const ComplexVector zero = ComplexVector::Zero(static_cast<Eigen::Index>(width));
    out.value.states.assign(n, zero);
  }
  double worst = 0.0;
  std::size_t worst_row = 0;
  for (std::size_t row = 0; row < width; ++row) {
    const double b = tail_estimate[row] * k_map_scale;
    if (b > worst) {
      worst = b;
      worst_row = row;
    }
  }
  out.tail_bound = worst;
  if (worst > quad.tol) {
    std::ostringstream os;
    os << "apply_T: horizon tail estimate " << worst << " for mode "
       << (static_cast<int>(worst_row) - K) << " exceeds the quadrature tolerance "
       << quad.tol << "; extend the horizon or relax the gate";
    throw ConvergenceFailure(os.str());
  }
  for (std::size_t i = 0; i < n; ++i) {
    const Complex pre = Complex(0.0, k_map_scale) * eta_n[i];
    ComplexVector& st = out.value.states[i];
    for (std::size_t row = 0; row < width; ++row)
      st[static_cast<Eigen::Index>(row)] = pre * (acc_all[row * n + i] + tail_correction[row]);
  }
  return out;
}

PicardResult picard_solve(const ComplexSequence& alpha, const ResonanceTable& table,
                          int N, double s, double p, double t_max, double tol,
                          std::size_t max_iter, const OscQuadrature& quad) {
  if (!(tol > 0.0))
    throw std::invalid_argument("picard_solve: tol must be positive");
  const CutoffFamily cutoff{N};
  const std::vector<double> mesh = graded_mesh(N, t_max, table_max_abs_m(table), quad);
  GridFunctionSequence R = zero_grid_sequence(table.K, mesh);

  PicardResult res;
  double prev_gap = 0.0;
  int stalled = 0;
  for (std::size_t it = 1; it <= max_iter; ++it) {
    MapResult mapped = apply_T(R, alpha, table, cutoff, quad, MapComponent::Full);
    GridFunctionSequence diff = mapped.value;
    for (std::size_t i = 0; i < diff.states.size(); ++i) diff.states[i] -= R.states[i];
    const double gap = grid_xsp(diff, s, p);
    if (it >= 2 && prev_gap > 0.0) {
      const double ratio = gap / prev_gap;
      res.ratios.push_back(ratio);
      if (ratio >= 1.0) {
        if (++stalled >= 3) {
          std::ostringstream os;
          os << "picard_solve: difference norms stopped contracting (last ratios";
          const std::size_t shown = std::min<std::size_t>(3, res.ratios.size());
          for (std::size_t i = res.ratios.size() - shown; i < res.ratios.size(); ++i)
            os << ' ' << res.ratios[i];
          os << "); the data appear to be outside the small-solution regime";
          throw PicardDivergence(os.str());
        }
      } else {
        stalled = 0;
      }
    }
    R = std::move(mapped.value);
    res.iterations = it;
    res.final_gap = gap;
    res.tail_bound = mapped.tail_bound;
    prev_gap = gap;
    if (gap < tol) {
      res.converged = true;
      break;
    }
  }

  MapResult last = apply_T(R, alpha, table, cutoff, quad, MapComponent::Full);
  GridFunctionSequence diff = last.value;
  for (std::size_t i = 0; i < diff.states.size(); ++i) diff.states[i] -= R.states[i];
  res.residual = grid_xsp(diff, s, p);
  res.tail_bound = last.tail_bound;
  res.solution = std::move(R);
  return res;
}

double residual_norm(const GridFunctionSequence& R, const ComplexSequence& alpha,
                     const ResonanceTable& table, const CutoffFamily& cutoff,
                     const OscQuadrature& quad, double s, double p) {
  MapResult mapped = apply_T(R, alpha, table, cutoff, quad, MapComponent::Full);
  GridFunctionSequence diff = mapped.value;
  for (std::size_t i = 0; i < diff.states.size(); ++i) diff.states[i] -= R.states[i];
  return grid_xsp(diff, s, p);
}

} // namespace combnls
