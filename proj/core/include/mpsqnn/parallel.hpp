#pragma once

#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace mpsqnn {

/// Runs fn(0..n-1) on up to `threads` workers. Callers keep determinism by
/// writing into per-index slots and reducing in index order afterwards.
inline void parallel_for(long n, int threads, const std::function<void(long)>& fn) {
  if (n <= 0) return;
  if (threads <= 1 || n == 1) {
    for (long i = 0; i < n; ++i) fn(i);
    return;
  }
  const int workers = static_cast<int>(std::min<long>(threads, n));
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      try {
        for (long i = w; i < n; i += workers) fn(i);
      } catch (...) {
        errors[static_cast<size_t>(w)] = std::current_exception();
      }
    });
  }
  for (std::thread& t : pool) t.join();
  for (const std::exception_ptr& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace mpsqnn
