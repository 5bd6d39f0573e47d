#pragma once

#include "combnls/types.hpp"

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace combnls {

/// Thrown by triple_to_index when k != j1 - j2 + j3.
struct MomentumMismatchError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Thrown by triple_to_index when the triple is resonant (m = 0).
struct ResonantTripleError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// One interacting triple (j1, j2, j3) for a fixed output mode k, stored in
/// the (m, z) coordinates of the enumeration bijection:
///
///   m = k^2 - j1^2 + j2^2 - j3^2 = 2*(k - j1)*(j1 - j2),   z = k - j1,
///
/// so m is a nonzero even integer with 2z | m, and j1 = k - z,
/// j2 = j1 - m/(2z), j3 = k - j1 + j2.  `lambda` caches the amplitude
/// combination |alpha_k|^2 - |alpha_j1|^2 + |alpha_j2|^2 - |alpha_j3|^2
/// for the table's reference sequence.
struct ResonanceEntry {
  std::int64_t m = 0;
  std::int32_t z = 0;
  std::int32_t j1 = 0;
  std::int32_t j2 = 0;
  std::int32_t j3 = 0;
  double lambda = 0.0;
};

enum class TruncationMode {
  /// Keep only triples with all of j1, j2, j3 in [-K, K].
  Hard,
  /// Keep all (m, z) with |z| <= K and |m/(2z)| <= K, reading amplitudes at
  /// indices folded into [-K, K] modulo 2K+1.  Preserves translation
  /// invariance on the periodized lattice; used by symmetry diagnostics.
  Wrap,
};

struct TableOptions {
  TruncationMode mode = TruncationMode::Hard;
  /// Drop entries with |m| > max_abs_m when positive; 0 keeps everything.
  std::int64_t max_abs_m = 0;
};

/// Immutable interaction table for modes |k| <= K.  entries[k + K] holds
/// the triples feeding mode k, sorted by (m, z) so that sums over the table
/// are deterministic.
struct ResonanceTable {
  int K = 0;
  TruncationMode mode = TruncationMode::Hard;
  std::int64_t max_abs_m = 0;
  /// |alpha_j|^2 for j in [-K, K] (index j + K).
  RealVector alpha_sq;
  std::vector<std::vector<ResonanceEntry>> entries;

  const std::vector<ResonanceEntry>& for_mode(int k) const {
    return entries[static_cast<std::size_t>(k + K)];
  }
};

/// All integers z with 2z | m, sorted ascending; empty iff m is odd.
/// m = 0 is rejected: every triple with m = 0 is resonant and excluded.
std::vector<std::int64_t> divisor_set(std::int64_t m);

/// |divisor_set(m)|, i.e. r_m: equals 2*d(|m|/2) for even m, 0 for odd.
std::int64_t divisor_count(std::int64_t m);

struct Triple {
  std::int64_t j1 = 0;
  std::int64_t j2 = 0;
  std::int64_t j3 = 0;
  bool operator==(const Triple&) const = default;
};

/// Inverse of the (m, z) enumeration: reconstructs the interacting triple.
/// Rejects m = 0, odd m, z = 0, and z with 2z not dividing m.
Triple index_to_triple(std::int64_t k, std::int64_t m, std::int64_t z);

struct IndexPair {
  std::int64_t m = 0;
  std::int64_t z = 0;
  bool operator==(const IndexPair&) const = default;
};

/// Forward direction of the enumeration: (m, z) coordinates of a triple.
/// Throws MomentumMismatchError if k != j1 - j2 + j3 and ResonantTripleError
/// if the triple has m = 0.
IndexPair triple_to_index(std::int64_t k, std::int64_t j1, std::int64_t j2,
                          std::int64_t j3);

/// Enumerate every admissible triple for each output mode k in [-K, K] and
/// cache the lambda phase data for `alpha`.  Entries are grouped by k and
/// sorted by (m, z).  alpha must be supported within [-K, K].
ResonanceTable build_table(int K, const ComplexSequence& alpha,
                           const TableOptions& options = {});

struct DivisorStats {
  std::int64_t M_max = 0;
  std::int64_t max = 0;
  std::int64_t argmax = 0;
  double mean = 0.0;
};

/// Empirical growth statistics of r_m over even 0 < m <= M_max; argmax is
/// the smallest maximizer.
DivisorStats divisor_stats(std::int64_t M_max);

} // namespace combnls
