// Copyright 2026 The IGW Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace igw {

/// out[i] = fn(i) for i < count, spread over `workers` threads.
/// Results land at their index, so the output never depends on scheduling.
template <class T, class F>
std::vector<T> parallel_map(std::size_t count, unsigned workers, F&& fn) {
  std::vector<T> out(count);
  if (workers <= 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) out[i] = fn(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        out[i] = fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = count;
      }
    }
  };
  std::vector<std::thread> pool;
  const unsigned n = workers < count ? workers : static_cast<unsigned>(count);
  pool.reserve(n);
  for (unsigned w = 0; w < n; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace igw
