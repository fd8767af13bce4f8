#pragma once

#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace mcconv {

inline int hardware_threads() {
  unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

namespace detail {
inline std::atomic<int>& thread_count_slot() {
  static std::atomic<int> count{0};  // 0 = use hardware_threads()
  return count;
}
}  // namespace detail

inline void set_default_threads(int threads) {
  detail::thread_count_slot().store(threads > 0 ? threads : 0);
}

inline int default_threads() {
  int n = detail::thread_count_slot().load();
  return n > 0 ? n : hardware_threads();
}

// Splits [0, n) into exactly `threads` contiguous chunks and runs
// fn(begin, end, chunk_index) for each. The chunk boundaries depend only on
// (n, threads), so any reduction that merges per-chunk partials in chunk
// order is reproducible for a fixed thread count.
template <typename Fn>
void parallel_chunks(std::size_t n, int threads, Fn&& fn) {
  if (n == 0) return;
  if (threads < 1) threads = 1;
  std::size_t chunks = static_cast<std::size_t>(threads);
  if (chunks > n) chunks = n;
  if (chunks == 1) {
    fn(std::size_t{0}, n, 0);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(chunks - 1);
  std::size_t base = n / chunks;
  std::size_t rem = n % chunks;
  std::size_t begin = 0;
  for (std::size_t c = 0; c < chunks; ++c) {
    std::size_t len = base + (c < rem ? 1 : 0);
    std::size_t end = begin + len;
    if (c + 1 == chunks) {
      fn(begin, end, static_cast<int>(c));
    } else {
      pool.emplace_back([&fn, begin, end, c] { fn(begin, end, static_cast<int>(c)); });
    }
    begin = end;
  }
  for (auto& t : pool) t.join();
}

}  // namespace mcconv
