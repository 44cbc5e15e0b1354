// Copyright 2026 PaxNet contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <exception>
#include <thread>
#include <vector>

namespace paxnet::detail {

// Runs fn(i) for i in [0, n). Work items must be independent; results should
// be written to preallocated slots so any thread count yields identical
// output. The lowest-index exception wins, matching serial behavior.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::size_t width =
      std::min(static_cast<std::size_t>(threads), n);
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  pool.reserve(width);
  for (std::size_t w = 0; w < width; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += width) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace paxnet::detail
