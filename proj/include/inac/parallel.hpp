#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace inac {

namespace detail {
inline std::atomic<unsigned> forced_workers{0};
}

/// Worker count: hardware concurrency, capped by INAC_SIM_THREADS when set.
/// A live ScopedWorkerCount overrides both.
inline unsigned worker_count() {
  if (const unsigned forced = detail::forced_workers.load(); forced > 0) return forced;
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("INAC_SIM_THREADS"); env != nullptr) {
    try {
      const long cap = std::stol(env);
      if (cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
    } catch (const std::exception&) {
      // unparsable value: ignore the cap
    }
  }
  return n;
}

/// Forces the worker count while alive, even above the core count, so thread
/// independence can be checked on small machines. Not meant to be nested
/// across threads.
class ScopedWorkerCount {
 public:
  explicit ScopedWorkerCount(unsigned n) : previous_(detail::forced_workers.exchange(n)) {}
  ~ScopedWorkerCount() { detail::forced_workers.store(previous_); }
  ScopedWorkerCount(const ScopedWorkerCount&) = delete;
  ScopedWorkerCount& operator=(const ScopedWorkerCount&) = delete;

 private:
  unsigned previous_;
};

/// Runs body(i) for i in [0, n). Each index is visited exactly once; callers
/// write results into slot i and reduce afterwards in index order, so the
/// outcome does not depend on scheduling. The lowest-index exception is
/// rethrown after all workers finish.
template <class Body>
void parallel_for(std::size_t n, Body&& body) {
  const std::size_t workers = std::min<std::size_t>(worker_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::size_t> error_index(workers, n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      const std::size_t begin = n * w / workers;
      const std::size_t end = n * (w + 1) / workers;
      for (std::size_t i = begin; i < end; ++i) {
        try {
          body(i);
        } catch (...) {
          errors[w] = std::current_exception();
          error_index[w] = i;
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  std::size_t first = workers;
  for (std::size_t w = 0; w < workers; ++w) {
    if (errors[w] && (first == workers || error_index[w] < error_index[first])) first = w;
  }
  if (first != workers) std::rethrow_exception(errors[first]);
}

}  // namespace inac
