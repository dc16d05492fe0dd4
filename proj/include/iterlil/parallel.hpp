#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace iterlil {

inline unsigned resolve_workers(unsigned workers) {
  if (workers != 0) return workers;
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Calls fn(begin, end, worker) on contiguous blocks covering [0, n).
/// Blocks are fixed by (n, workers) and results are expected to be merged by
/// the caller in block order, so output is independent of scheduling. The
/// lowest-indexed block's exception, if any, is rethrown.
template <class Fn>
void parallel_blocks(std::size_t n, unsigned workers, Fn&& fn) {
  workers = resolve_workers(workers);
  const std::size_t blocks = std::min<std::size_t>(workers, n);
  if (blocks <= 1) {
    if (n) fn(std::size_t{0}, n, 0u);
    return;
  }
  std::vector<std::exception_ptr> errors(blocks);
  std::vector<std::thread> threads;
  threads.reserve(blocks);
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t begin = n * b / blocks;
    const std::size_t end = n * (b + 1) / blocks;
    threads.emplace_back([&, b, begin, end] {
      try {
        fn(begin, end, static_cast<unsigned>(b));
      } catch (...) {
        errors[b] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// Evaluates fn(i) for i in [0, n) and returns the results in index order.
template <class T, class Fn>
std::vector<T> parallel_map(std::size_t n, unsigned workers, Fn&& fn) {
  std::vector<T> out(n);
  parallel_blocks(n, workers, [&](std::size_t begin, std::size_t end, unsigned) {
    for (std::size_t i = begin; i < end; ++i) out[i] = fn(i);
  });
  return out;
}

}  // namespace iterlil
