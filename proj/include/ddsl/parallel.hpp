#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ddsl {

// Knobs shared by the operations that fan work out over partitions.
// Results must not depend on `workers`; callers write into pre-sized slots
// indexed by task id and merge in task order.
struct ExecContext {
  int workers = 1;
};

template <typename Fn>
void parallel_for(const ExecContext& ctx, std::size_t tasks, Fn&& fn) {
  if (tasks == 0) return;
  std::size_t pool = ctx.workers > 1 ? std::min<std::size_t>(ctx.workers, tasks) : 1;
  if (pool <= 1) {
    for (std::size_t i = 0; i < tasks; ++i) fn(i);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= tasks) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  std::vector<std::thread> threads;
  threads.reserve(pool);
  for (std::size_t t = 0; t < pool; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace ddsl
