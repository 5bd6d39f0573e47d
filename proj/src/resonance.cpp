#include "combnls/resonance.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>

namespace combnls {

namespace {

// Largest index/frequency magnitude for which the quadratic form
// k^2 - j1^2 + j2^2 - j3^2 is evaluated without int64 overflow.
constexpr std::int64_t max_index_magnitude = std::int64_t(1) << 30;
constexpr std::int64_t max_frequency_magnitude = std::int64_t(1) << 62;

void check_index_range(std::int64_t v, const char* name) {
  if (std::llabs(v) > max_index_magnitude) {
    throw std::domain_error(std::string(name) +
                            " exceeds the supported integer range");
  }
}

std::vector<std::int64_t> positive_divisors(std::int64_t n) {
  std::vector<std::int64_t> small, large;
  for (std::int64_t d = 1; d * d <= n; ++d) {
    if (n % d == 0) {
      small.push_back(d);
      if (d != n / d) large.push_back(n / d);
    }
  }
  small.insert(small.end(), large.rbegin(), large.rend());
  return small;
}

} // namespace

std::vector<std::int64_t> divisor_set(std::int64_t m) {
  if (m == 0) {
    throw std::invalid_argument("divisor_set: m = 0 is resonant and excluded");
  }
  if (std::llabs(m) > max_frequency_magnitude) {
    throw std::domain_error("divisor_set: |m| exceeds the supported range");
  }
  if (m % 2 != 0) return {};
  const std::int64_t n = std::llabs(m) / 2;
  const auto pos = positive_divisors(n);
  std::vector<std::int64_t> out;
  out.reserve(2 * pos.size());
  for (auto it = pos.rbegin(); it != pos.rend(); ++it) out.push_back(-*it);
  out.insert(out.end(), pos.begin(), pos.end());
  return out;
}

std::int64_t divisor_count(std::int64_t m) {
  if (m == 0) {
    throw std::invalid_argument(
        "divisor_count: m = 0 is resonant and excluded");
  }
  if (m % 2 != 0) return 0;
  const std::int64_t n = std::llabs(m) / 2;
  std::int64_t count = 0;
  for (std::int64_t d = 1; d * d <= n; ++d) {
    if (n % d == 0) count += (d * d == n) ? 1 : 2;
  }
  return 2 * count;
}

Triple index_to_triple(std::int64_t k, std::int64_t m, std::int64_t z) {
  check_index_range(k, "index_to_triple: k");
  check_index_range(z, "index_to_triple: z");
  if (m == 0 || m % 2 != 0) {
    throw std::invalid_argument(
        "index_to_triple: m must be a nonzero even integer");
  }
  if (std::llabs(m) > max_frequency_magnitude) {
    throw std::domain_error("index_to_triple: |m| exceeds the supported range");
  }
  if (z == 0 || m % (2 * z) != 0) {
    throw std::invalid_argument("index_to_triple: 2z must divide m");
  }
  Triple t;
  t.j1 = k - z;
  t.j2 = t.j1 - m / (2 * z);
  t.j3 = k - t.j1 + t.j2;
  return t;
}

IndexPair triple_to_index(std::int64_t k, std::int64_t j1, std::int64_t j2,
                          std::int64_t j3) {
  check_index_range(k, "triple_to_index: k");
  check_index_range(j1, "triple_to_index: j1");
  check_index_range(j2, "triple_to_index: j2");
  check_index_range(j3, "triple_to_index: j3");
  if (k != j1 - j2 + j3) {
    throw MomentumMismatchError(
        "triple_to_index: momentum mismatch, k != j1 - j2 + j3");
  }
  const std::int64_t m = k * k - j1 * j1 + j2 * j2 - j3 * j3;
  if (m == 0) {
    throw ResonantTripleError(
        "triple_to_index: resonant triple, k^2 - j1^2 + j2^2 - j3^2 = 0");
  }
  return IndexPair{m, k - j1};
}

ResonanceTable build_table(int K, const ComplexSequence& alpha,
                           const TableOptions& options) {
  if (K < 0) throw std::invalid_argument("build_table: K must be >= 0");
  if (alpha.size() > 0 && (alpha.k_min() < -K || alpha.k_max() > K)) {
    throw std::invalid_argument(
        "build_table: alpha support exceeds the truncation radius");
  }

  const int n = 2 * K + 1;
  ResonanceTable table;
  table.K = K;
  table.mode = options.mode;
  table.max_abs_m = options.max_abs_m;
  table.alpha_sq = RealVector::Zero(n);
  for (int j = -K; j <= K; ++j) {
    table.alpha_sq[j + K] = std::norm(alpha.at(j));
  }
  table.entries.resize(static_cast<std::size_t>(n));

  const auto wrap_index = [K, n](std::int64_t j) {
    std::int64_t r = (j + K) % n;
    if (r < 0) r += n;
    return static_cast<int>(r - K);
  };

  for (int k = -K; k <= K; ++k) {
    auto& list = table.entries[static_cast<std::size_t>(k + K)];
    // Enumerate over z = k - j1 and w = j1 - j2, both nonzero, so that
    // m = 2zw is automatically nonzero and even.
    for (std::int64_t z = -2 * std::int64_t(K); z <= 2 * K; ++z) {
      if (z == 0) continue;
      const std::int64_t j1 = k - z;
      if (options.mode == TruncationMode::Hard && std::llabs(j1) > K) continue;
      if (options.mode == TruncationMode::Wrap && std::llabs(z) > K) continue;
      for (std::int64_t w = -2 * std::int64_t(K); w <= 2 * K; ++w) {
        if (w == 0) continue;
        if (options.mode == TruncationMode::Wrap && std::llabs(w) > K) continue;
        const std::int64_t j2 = j1 - w;
        const std::int64_t j3 = k - j1 + j2;
        if (options.mode == TruncationMode::Hard &&
            (std::llabs(j2) > K || std::llabs(j3) > K)) {
          continue;
        }
        const std::int64_t m = 2 * z * w;
        if (options.max_abs_m > 0 && std::llabs(m) > options.max_abs_m) {
          continue;
        }
        ResonanceEntry e;
        e.m = m;
        e.z = static_cast<std::int32_t>(z);
        if (options.mode == TruncationMode::Wrap) {
          e.j1 = wrap_index(j1);
          e.j2 = wrap_index(j2);
          e.j3 = wrap_index(j3);
        } else {
          e.j1 = static_cast<std::int32_t>(j1);
          e.j2 = static_cast<std::int32_t>(j2);
          e.j3 = static_cast<std::int32_t>(j3);
        }
        e.lambda = table.alpha_sq[k + K] - table.alpha_sq[e.j1 + K] +
                   table.alpha_sq[e.j2 + K] - table.alpha_sq[e.j3 + K];
        list.push_back(e);
      }
    }
    std::sort(list.begin(), list.end(),
              [](const ResonanceEntry& a, const ResonanceEntry& b) {
                return a.m != b.m ? a.m < b.m : a.z < b.z;
              });
  }
  return table;
}

DivisorStats divisor_stats(std::int64_t M_max) {
  if (M_max < 2) throw std::invalid_argument("divisor_stats: M_max must be >= 2");
  DivisorStats stats;
  stats.M_max = M_max;
  std::int64_t total = 0;
  std::int64_t n_values = 0;
  for (std::int64_t m = 2; m <= M_max; m += 2) {
    const std::int64_t r = divisor_count(m);
    total += r;
    ++n_values;
    if (r > stats.max) {
      stats.max = r;
      stats.argmax = m;
    }
  }
  stats.mean = static_cast<double>(total) / static_cast<double>(n_values);
  return stats;
}

} // namespace combnls
