#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace bjext {

/// Worker count for internal loops. BJ_ORTHO_THREADS caps it; 0 or unset
/// means hardware concurrency.
inline unsigned worker_count() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("BJ_ORTHO_THREADS")) {
    try {
      const long requested = std::stol(env);
      if (requested > 0) return static_cast<unsigned>(std::min<long>(requested, 256));
    } catch (const std::exception&) {
      // unparsable value: fall back to auto
    }
  }
  return hw;
}

/// Runs body(i) for i in [0, count). Each index is handled by exactly one
/// worker, so writes into per-index slots are race free and results do not
/// depend on the thread count. The first exception thrown is rethrown.
template <class Body>
void parallel_for(std::size_t count, Body&& body, std::size_t min_chunk = 64) {
  const std::size_t workers =
      std::min<std::size_t>(worker_count(), (count + min_chunk - 1) / std::max<std::size_t>(min_chunk, 1));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (count + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&, begin, end] {
      try {
        for (std::size_t i = begin; i < end; ++i) body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace bjext
