#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace stvl {

/// Worker count: STVL_WORKERS if set, else the hardware concurrency.
inline unsigned default_workers() {
  if (const char* env = std::getenv("STVL_WORKERS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs body(block_index, begin, end) over fixed-size blocks of [0, n).
///
/// Block boundaries depend only on n and block_size, never on the worker
/// count; bodies that key their randomness on block_index therefore produce
/// identical results for any number of workers. The first exception thrown by
/// a body is rethrown after all workers join.
template <typename Body>
void parallel_blocks(std::size_t n, std::size_t block_size, unsigned workers, Body&& body) {
  if (n == 0) return;
  block_size = std::max<std::size_t>(1, block_size);
  const std::size_t n_blocks = (n + block_size - 1) / block_size;
  if (workers == 0) workers = default_workers();
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n_blocks));

  auto run_block = [&](std::size_t b) {
    const std::size_t begin = b * block_size;
    body(b, begin, std::min(n, begin + block_size));
  };
  if (workers <= 1) {
    for (std::size_t b = 0; b < n_blocks; ++b) run_block(b);
    return;
  }

  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t b = w; b < n_blocks; b += workers) {
        try {
          run_block(b);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace stvl
