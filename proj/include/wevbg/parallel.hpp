#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <utility>
#include <vector>

namespace wevbg {

/// Worker cap: WEVBG_THREADS when set to a positive integer, otherwise the
/// number of available processors.
std::size_t worker_count();

namespace detail {
// Set on pool threads so nested parallel_for calls run inline.
inline bool& inside_pool() {
  thread_local bool flag = false;
  return flag;
}
}  // namespace detail

/// Runs body(i) for i in [0, count) on up to worker_count() threads. Each
/// index is processed exactly once; callers write results into slot i so the
/// merged output does not depend on scheduling. If any call throws, the
/// exception from the lowest failing index is rethrown.
template <typename Body>
void parallel_for(std::size_t count, Body&& body) {
  const std::size_t workers = detail::inside_pool() ? 1 : std::min(worker_count(), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  auto run = [&] {
    const bool was_inside = std::exchange(detail::inside_pool(), true);
    for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
    detail::inside_pool() = was_inside;
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace wevbg
