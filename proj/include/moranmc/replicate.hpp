#pragma once

// Deterministic replicate fan-out. Outcome i is a pure function of
// (master_seed, i), and every worker writes only its own slot, so the result
// vector is identical for any thread count and any scheduling order.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <type_traits>
#include <vector>

#include "moranmc/rng.hpp"

namespace moranmc {

inline unsigned resolve_threads(unsigned requested) noexcept {
  if (requested != 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

/// Runs `task(SeedSpec{master_seed, i})` for i in [0, n_replicates) and
/// returns the outcomes in replicate order. `threads == 0` means use the
/// hardware concurrency; per-replicate cutoff flags are data, never thrown.
template <class Task>
auto run_replicates(Task&& task, std::size_t n_replicates, std::uint64_t master_seed,
                    unsigned threads = 0)
    -> std::vector<std::decay_t<std::invoke_result_t<Task&, SeedSpec>>> {
  using Outcome = std::decay_t<std::invoke_result_t<Task&, SeedSpec>>;
  std::vector<Outcome> results(n_replicates);
  if (n_replicates == 0) return results;

  const unsigned n_threads =
      static_cast<unsigned>(std::min<std::size_t>(resolve_threads(threads), n_replicates));
  if (n_threads <= 1) {
    for (std::size_t i = 0; i < n_replicates; ++i) {
      results[i] = task(SeedSpec{master_seed, i});
    }
    return results;
  }

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= n_replicates || failed.load(std::memory_order_relaxed)) return;
      try {
        results[i] = task(SeedSpec{master_seed, i});
      } catch (...) {
        {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
        failed.store(true, std::memory_order_relaxed);
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(n_threads);
  for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return results;
}

}  // namespace moranmc
