#include <doctest.h>

#include "combnls/closed_form.hpp"
#include "combnls/cutoff.hpp"
#include "combnls/fixedpoint.hpp"
#include "combnls/resonance.hpp"
#include "combnls/types.hpp"

#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <random>
#include <vector>

using namespace combnls;

namespace {

ComplexSequence constant_sequence(int K, Complex value) {
  ComplexSequence s = zero_sequence(K);
  for (int k = -K; k <= K; ++k) s[k] = value;
  return s;
}

ComplexSequence random_sequence(int K, double l2_norm, unsigned seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  ComplexSequence s = zero_sequence(K);
  for (int k = -K; k <= K; ++k) s[k] = Complex(dist(gen), dist(gen));
  const double have = std::sqrt(mass(s));
  for (int k = -K; k <= K; ++k) s[k] *= l2_norm / have;
  return s;
}

GridFunctionSequence random_grid(int K, const std::vector<double>& mesh, double scale,
                                 unsigned seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  GridFunctionSequence g = zero_grid_sequence(K, mesh);
  for (auto& st : g.states)
    for (Eigen::Index r = 0; r < st.size(); ++r)
      st[r] = scale * Complex(dist(gen), dist(gen));
  return g;
}

/// Positive-frequency multiplicities of a constant-data table, checking the
/// +/- symmetry that the pairing below relies on.
std::vector<std::pair<std::int64_t, double>> table_weights(const ResonanceTable& table) {
  std::map<std::int64_t, double> count;
  for (const auto& e : table.for_mode(0)) count[e.m] += 1.0;
  std::vector<std::pair<std::int64_t, double>> weights;
  for (const auto& kv : count) {
    if (kv.first <= 0) continue;
    REQUIRE(count.at(-kv.first) == kv.second);
    weights.emplace_back(kv.first, kv.second);
  }
  return weights;
}

} // namespace

TEST_CASE("graded meshes bisect their panels and respect the caps") {
  OscQuadrature quad;
  const std::vector<double> mesh = graded_mesh(1, 8.0 * pi, 32, quad);
  REQUIRE(mesh.size() % 2 == 1);
  REQUIRE(mesh.size() >= 17);
  CHECK(mesh.front() == doctest::Approx(pi).epsilon(1e-15));
  CHECK(mesh.back() == 8.0 * pi);
  for (std::size_t i = 1; i < mesh.size(); ++i) CHECK(mesh[i] > mesh[i - 1]);
  for (std::size_t j = 0; 2 * j + 2 < mesh.size(); ++j)
    CHECK(std::abs(mesh[2 * j + 1] - 0.5 * (mesh[2 * j] + mesh[2 * j + 2])) <=
          1e-12 * (mesh[2 * j + 2] - mesh[2 * j]));
  // graded toward the left end: the first panel is the narrowest
  const double first = mesh[2] - mesh[0];
  const double last = mesh[mesh.size() - 1] - mesh[mesh.size() - 3];
  CHECK(first < last);

  OscQuadrature tight = quad;
  tight.max_nodes = 41;
  const std::vector<double> capped = graded_mesh(0, 100.0, 4096, tight);
  CHECK(capped.size() == 41);

  CHECK_THROWS_AS(graded_mesh(-1, 10.0, 8, quad), std::invalid_argument);
  CHECK_THROWS_AS(graded_mesh(2, 2.0 * pi, 8, quad), std::invalid_argument);
  OscQuadrature bad = quad;
  bad.tol = 0.0;
  CHECK_THROWS_AS(graded_mesh(0, 10.0, 8, bad), std::invalid_argument);
  bad = quad;
  bad.max_nodes = 8;
  CHECK_THROWS_AS(graded_mesh(0, 10.0, 8, bad), std::invalid_argument);
  bad = quad;
  bad.nodes_per_wave = 0.5;
  CHECK_THROWS_AS(graded_mesh(0, 10.0, 8, bad), std::invalid_argument);
}

TEST_CASE("grid sequences interpolate linearly and vanish outside their span") {
  GridFunctionSequence g;
  g.K = 1;
  g.times = {0.0, 0.5, 1.0};
  ComplexVector a = ComplexVector::Zero(3), b = ComplexVector::Zero(3), c = ComplexVector::Zero(3);
  a[1] = Complex(0.0, 0.0);
  b[1] = Complex(0.5, -0.5);
  c[1] = Complex(1.0, -1.0);
  a[2] = Complex(2.0, 0.0);
  b[2] = Complex(2.0, 0.0);
  c[2] = Complex(2.0, 0.0);
  g.states = {a, b, c};

  CHECK(std::abs(g.value(0, 0.25) - Complex(0.25, -0.25)) <= 1e-15);
  CHECK(g.value(0, 1.0) == Complex(1.0, -1.0));
  CHECK(g.value(0, 0.0) == Complex(0.0, 0.0));
  CHECK(g.value(1, 0.73) == Complex(2.0, 0.0));
  CHECK(g.value(0, -0.1) == Complex(0.0, 0.0));
  CHECK(g.value(0, 1.1) == Complex(0.0, 0.0));
  CHECK(g.value(2, 0.5) == Complex(0.0, 0.0));

  CHECK_THROWS_AS(zero_grid_sequence(1, std::vector<double>{0.0, 1.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(zero_grid_sequence(1, std::vector<double>{0.0, 0.4, 1.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(zero_grid_sequence(1, std::vector<double>{0.0, -0.5, -1.0}),
                  std::invalid_argument);
}

TEST_CASE("constant-data map head matches an independent phase integral") {
  const int K = 2;
  const Complex a0(0.3, 0.0);
  const ComplexSequence alpha = constant_sequence(K, a0);
  TableOptions opts;
  opts.mode = TruncationMode::Wrap;
  const ResonanceTable table = build_table(K, alpha, opts);
  const auto weights = table_weights(table);
  REQUIRE(!weights.empty());

  const double t_max = 12.0 * pi;
  OscQuadrature quad;
  std::int64_t top_m = 0;
  for (const auto& w : weights) top_m = std::max(top_m, w.first);
  const std::vector<double> mesh = graded_mesh(0, t_max, top_m, quad);
  const GridFunctionSequence zero = zero_grid_sequence(K, mesh);
  const MapResult head = apply_T(zero, alpha, table, CutoffFamily{0}, quad, MapComponent::T0);
  CHECK(head.tail_bound > 0.0);
  CHECK(head.tail_bound < 1e-4);

  // With translation-invariant truncation and constant data every mode sees
  // the same sum; pin that down before comparing against the scalar oracle.
  const std::size_t n = mesh.size();
  for (std::size_t i = 0; i < n; i += n / 7) {
    for (int k = -K; k <= K; ++k)
      CHECK(std::abs(head.value.states[i][k + K] - head.value.states[i][0]) <= 1e-13);
  }

  const double cubed = std::abs(a0) * std::abs(a0) * std::abs(a0);
  double worst = 0.0;
  for (std::size_t i = n / 3; i < n; i += n / 9) {
    const double t = mesh[i];
    if (t < pi) continue;
    const PhaseIntegral ph = phase_integral_weighted(t, weights, 1e8, 1.0);
    const Complex expected = Complex(0.0, -1.0) * cubed * ph.value;
    worst = std::max(worst, std::abs(head.value.states[i][K] - expected));
  }
  MESSAGE("constant-data head worst deviation: " << worst
                                                 << " (tail bound " << head.tail_bound << ")");
  CHECK(worst <= 5.0 * (head.tail_bound + 1e-8));
}

TEST_CASE("map output vanishes through the switch-on point") {
  const int K = 2;
  const ComplexSequence alpha = constant_sequence(K, Complex(0.2, 0.1));
  TableOptions opts;
  opts.mode = TruncationMode::Wrap;
  const ResonanceTable table = build_table(K, alpha, opts);
  OscQuadrature quad;
  quad.tol = 1e9;
  const std::vector<double> mesh = graded_mesh(2, 6.0 * pi, 8, quad);
  const GridFunctionSequence R = random_grid(K, mesh, 0.05, 11);
  const MapResult out = apply_T(R, alpha, table, CutoffFamily{2}, quad);
  REQUIRE(out.value.times.front() == doctest::Approx(2.0 * pi).epsilon(1e-15));
  for (int k = -K; k <= K; ++k) {
    CHECK(out.value.states.front()[k + K] == Complex(0.0, 0.0));
    CHECK(out.value.value(k, pi) == Complex(0.0, 0.0));
  }
  // just inside the ramp the damping is strictly between zero and one
  CHECK(std::abs(out.value.states[1][K]) > 0.0);
}

TEST_CASE("component splitting adds up to the full map") {
  const int K = 3;
  const ComplexSequence alpha = random_sequence(K, 0.4, 5);
  const ResonanceTable table = build_table(K, alpha);
  OscQuadrature quad;
  quad.tol = 1e9;
  quad.max_nodes = 257;
  const std::vector<double> mesh = graded_mesh(0, 6.0 * pi, 72, quad);
  const GridFunctionSequence R = random_grid(K, mesh, 0.2, 7);
  const CutoffFamily cutoff{0};

  const MapResult full = apply_T(R, alpha, table, cutoff, quad, MapComponent::Full);
  const MapResult t0 = apply_T(R, alpha, table, cutoff, quad, MapComponent::T0);
  const MapResult t1 = apply_T(R, alpha, table, cutoff, quad, MapComponent::T1);
  const MapResult t2 = apply_T(R, alpha, table, cutoff, quad, MapComponent::T2);

  double worst = 0.0;
  for (std::size_t i = 0; i < mesh.size(); ++i)
    for (int k = -K; k <= K; ++k) {
      const Complex sum = t0.value.states[i][k + K] + t1.value.states[i][k + K] +
                          t2.value.states[i][k + K];
      const Complex whole = full.value.states[i][k + K];
      worst = std::max(worst, std::abs(sum - whole) / (1.0 + std::abs(whole)));
    }
  CHECK(worst <= 1e-13);
}

TEST_CASE("zero data leaves only the pure perturbation part") {
  const int K = 2;
  const ComplexSequence alpha = zero_sequence(K);
  const ResonanceTable table = build_table(K, alpha);
  OscQuadrature quad;
  quad.tol = 1e9;
  quad.max_nodes = 129;
  const std::vector<double> mesh = graded_mesh(0, 4.0 * pi, 32, quad);
  const GridFunctionSequence R = random_grid(K, mesh, 0.3, 3);
  const CutoffFamily cutoff{0};

  const MapResult t0 = apply_T(R, alpha, table, cutoff, quad, MapComponent::T0);
  const MapResult t1 = apply_T(R, alpha, table, cutoff, quad, MapComponent::T1);
  const MapResult t2 = apply_T(R, alpha, table, cutoff, quad, MapComponent::T2);
  const MapResult full = apply_T(R, alpha, table, cutoff, quad, MapComponent::Full);

  for (std::size_t i = 0; i < mesh.size(); ++i)
    for (int k = -K; k <= K; ++k) {
      CHECK(t0.value.states[i][k + K] == Complex(0.0, 0.0));
      CHECK(t1.value.states[i][k + K] == Complex(0.0, 0.0));
      CHECK(std::abs(t2.value.states[i][k + K] - full.value.states[i][k + K]) <= 1e-15);
    }
}

TEST_CASE("a single delta needs no perturbation at all") {
  const int K = 3;
  ComplexSequence alpha = zero_sequence(K);
  alpha[0] = Complex(0.5, 0.0);
  const ResonanceTable table = build_table(K, alpha);
  OscQuadrature quad;
  const PicardResult res =
      picard_solve(alpha, table, 0, 0.75, 2.0, 10.0 * pi, 1e-12, 5, quad);
  CHECK(res.converged);
  CHECK(res.iterations == 1);
  CHECK(res.final_gap == 0.0);
  CHECK(res.residual == 0.0);
  for (const auto& st : res.solution.states)
    for (Eigen::Index r = 0; r < st.size(); ++r) CHECK(st[r] == Complex(0.0, 0.0));
}

TEST_CASE("small data contracts to a fixed point with a tiny residual") {
  const int K = 3;
  const ComplexSequence alpha = random_sequence(K, 0.05, 17);
  const ResonanceTable table = build_table(K, alpha);
  OscQuadrature quad;
  const double s = 0.75, p = 2.0;
  const PicardResult res =
      picard_solve(alpha, table, 0, s, p, 8.0 * pi, 1e-10, 25, quad);
  CHECK(res.converged);
  REQUIRE(!res.ratios.empty());
  double top = 0.0;
  for (double r : res.ratios) top = std::max(top, r);
  MESSAGE("contraction ratios peak at " << top << " after " << res.iterations
                                        << " sweeps; residual " << res.residual);
  CHECK(top < 1.0);
  CHECK(res.final_gap < 1e-10);
  CHECK(res.residual < 1e-10);
  CHECK(res.tail_bound < 1e-4);

  const double again =
      residual_norm(res.solution, alpha, table, CutoffFamily{0}, quad, s, p);
  CHECK(std::abs(again - res.residual) <= 1e-12);
}

TEST_CASE("oversized data raises the divergence signal") {
  const int K = 2;
  const ComplexSequence alpha = constant_sequence(K, Complex(8.0, 0.0));
  TableOptions opts;
  opts.mode = TruncationMode::Wrap;
  const ResonanceTable table = build_table(K, alpha, opts);
  OscQuadrature quad;
  quad.tol = 1e9;
  quad.max_nodes = 2049;
  CHECK_THROWS_AS(picard_solve(alpha, table, 0, 0.75, 2.0, 6.0 * pi, 1e-12, 15, quad),
                  PicardDivergence);
}

TEST_CASE("the map validates grids, data, and quadrature settings") {
  const int K = 2;
  const ComplexSequence alpha = constant_sequence(K, Complex(0.3, 0.0));
  TableOptions opts;
  opts.mode = TruncationMode::Wrap;
  const ResonanceTable table = build_table(K, alpha, opts);
  OscQuadrature quad;
  const std::vector<double> mesh = graded_mesh(0, 4.0 * pi, 8, quad);
  const GridFunctionSequence zero = zero_grid_sequence(K, mesh);
  const CutoffFamily cutoff{0};

  // mode range mismatch
  const GridFunctionSequence narrow = zero_grid_sequence(1, mesh);
  CHECK_THROWS_AS(apply_T(narrow, alpha, table, cutoff, quad), std::invalid_argument);

  // amplitude mismatch against the table's cached reference
  const ComplexSequence other = constant_sequence(K, Complex(0.4, 0.0));
  CHECK_THROWS_AS(apply_T(zero, other, table, cutoff, quad), std::invalid_argument);

  // negative switch-on index
  CHECK_THROWS_AS(apply_T(zero, alpha, table, CutoffFamily{-1}, quad),
                  std::invalid_argument);

  // unusable quadrature settings
  OscQuadrature bad = quad;
  bad.tol = -1.0;
  CHECK_THROWS_AS(apply_T(zero, alpha, table, cutoff, bad), std::invalid_argument);

  // horizon too close for the requested certificate
  OscQuadrature strict = quad;
  strict.tol = 1e-15;
  CHECK_THROWS_AS(apply_T(zero, alpha, table, cutoff, strict), ConvergenceFailure);
}
