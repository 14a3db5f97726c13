#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace curvedfield {

// Runs body(i) for i in [0, n). Each index is handled by exactly one worker, so
// results written per index do not depend on the thread count.
template <class Body>
void parallel_for(std::size_t n, unsigned threads, Body&& body) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  const std::size_t workers = std::min<std::size_t>(threads, n);
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

/// Thread count from CURVEDFIELD_THREADS, or `fallback` when unset or invalid.
inline unsigned threads_from_environment(unsigned fallback = 1) {
  const char* value = std::getenv("CURVEDFIELD_THREADS");
  if (value == nullptr) return fallback;
  try {
    const long parsed = std::stol(value);
    return parsed > 0 ? static_cast<unsigned>(parsed) : fallback;
  } catch (...) {
    return fallback;
  }
}

}  // namespace curvedfield
