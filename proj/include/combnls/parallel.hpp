#pragma once

#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace combnls {

namespace detail {
inline std::atomic<int>& thread_count_slot() {
  static std::atomic<int> n{1};
  return n;
}
} // namespace detail

/// Worker count used by parallel_for (the CLI --threads flag lands here).
inline void set_thread_count(int n) {
  detail::thread_count_slot().store(n < 1 ? 1 : n);
}

inline int thread_count() { return detail::thread_count_slot().load(); }

/// Run fn(i) for i in [0, n) across the configured worker count, in
/// contiguous chunks.  Results are bit-identical for any thread count as
/// long as iterations write to disjoint state, which is the only supported
/// use.  Falls back to a plain loop when one worker is configured.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const int workers = thread_count();
  if (workers <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::size_t n_chunks =
      std::min<std::size_t>(static_cast<std::size_t>(workers), n);
  std::vector<std::thread> pool;
  pool.reserve(n_chunks);
  for (std::size_t c = 0; c < n_chunks; ++c) {
    const std::size_t lo = n * c / n_chunks;
    const std::size_t hi = n * (c + 1) / n_chunks;
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

} // namespace combnls
