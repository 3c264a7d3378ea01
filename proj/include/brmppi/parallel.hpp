#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace brmppi {

/// Worker count from the environment variable `name`, falling back to the
/// hardware concurrency.
inline int workers_from_env(const char* name = "TTPARK_WORKERS") {
  if (const char* v = std::getenv(name)) {
    try {
      const int n = std::stoi(v);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Calls fn(begin, end) on contiguous chunks of [0, n), one chunk per worker.
/// Chunk boundaries depend only on n and the worker count; the first
/// exception thrown by any chunk is rethrown on the calling thread.
template <class Fn>
void parallel_chunks(std::size_t n, int workers, Fn&& fn) {
  const std::size_t w = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), 1, std::max<std::size_t>(n, 1));
  if (w <= 1) {
    fn(std::size_t{0}, n);
    return;
  }
  std::exception_ptr err;
  std::mutex err_mutex;
  std::vector<std::thread> threads;
  threads.reserve(w - 1);
  auto run = [&](std::size_t b, std::size_t e) {
    try {
      fn(b, e);
    } catch (...) {
      std::lock_guard lock(err_mutex);
      if (!err) err = std::current_exception();
    }
  };
  const std::size_t chunk = (n + w - 1) / w;
  for (std::size_t i = 1; i < w; ++i) {
    const std::size_t b = i * chunk, e = std::min(n, b + chunk);
    if (b < e) threads.emplace_back(run, b, e);
  }
  run(0, std::min(n, chunk));
  for (auto& t : threads) t.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace brmppi
