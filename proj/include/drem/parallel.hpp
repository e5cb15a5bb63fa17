#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <type_traits>
#include <vector>

namespace dprem {

/// Number of workers used when a caller passes 0.
inline std::size_t default_threads() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

/// Evaluates fn(0..count-1) on a pool of worker threads. Results are stored by index, so the
/// output does not depend on which worker finishes first. `order` optionally permutes the order
/// in which indices are handed out (used to check order independence). The first exception by
/// index is rethrown after all workers stop.
template <class Fn>
auto parallel_map(std::size_t count, std::size_t threads, Fn&& fn, const std::vector<std::size_t>* order = nullptr)
    -> std::vector<std::invoke_result_t<Fn&, std::size_t>> {
  using R = std::invoke_result_t<Fn&, std::size_t>;
  std::vector<R> out(count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    while (true) {
      const std::size_t slot = next.fetch_add(1);
      if (slot >= count) return;
      const std::size_t idx = order ? (*order)[slot] : slot;
      try {
        out[idx] = fn(idx);
      } catch (...) {
        errors[idx] = std::current_exception();
      }
    }
  };
  const std::size_t nt = std::max<std::size_t>(1, std::min(threads == 0 ? default_threads() : threads, count));
  if (nt == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(nt);
    for (std::size_t t = 0; t < nt; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace dprem
