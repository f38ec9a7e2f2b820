#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace rmp {

struct Exec {
  // 0 selects std::thread::hardware_concurrency().
  int threads = 0;
  // Replications per work item. Results depend on the chunk size (through the
  // order of floating-point sums) but never on the thread count.
  std::uint64_t chunk = 1u << 14;

  int resolved_threads() const noexcept {
    if (threads > 0) return threads;
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
  }
};

// Runs body(i) for i in [0, n) on a pool of threads. body must only write to
// state owned by index i.
template <class Body>
void parallel_for(std::size_t n, const Exec& exec, Body&& body) {
  const int nt = std::min<std::size_t>(static_cast<std::size_t>(exec.resolved_threads()), std::max<std::size_t>(n, 1));
  if (nt <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(n);
        return;
      }
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(static_cast<std::size_t>(nt));
  for (int t = 0; t < nt; ++t) pool.emplace_back(worker);
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

// Splits [0, n) into fixed-size chunks, evaluates chunk_fn(begin, end) -> Acc
// for each and folds the partial results with += in chunk order.
template <class Acc, class ChunkFn>
Acc parallel_reduce(std::uint64_t n, const Exec& exec, ChunkFn&& chunk_fn) {
  const std::uint64_t chunk = std::max<std::uint64_t>(exec.chunk, 1);
  const std::size_t n_chunks = static_cast<std::size_t>((n + chunk - 1) / chunk);
  std::vector<Acc> partial(n_chunks);
  parallel_for(n_chunks, exec, [&](std::size_t c) {
    const std::uint64_t begin = c * chunk;
    const std::uint64_t end = std::min(n, begin + chunk);
    partial[c] = chunk_fn(begin, end);
  });
  Acc total{};
  for (const auto& p : partial) total += p;
  return total;
}

}  // namespace rmp
