// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace iknet {

/// Calls fn(i) for i in [0, count) on up to `jobs` threads (strided), then
/// rethrows the first captured exception in worker order. Results must be
/// written by index for deterministic output.
template <class Fn>
void parallel_for(std::size_t count, std::size_t jobs, Fn&& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, count));
  std::vector<std::exception_ptr> errors(jobs);
  auto work = [&](std::size_t worker) {
    try {
      for (std::size_t i = worker; i < count; i += jobs) fn(i);
    } catch (...) {
      errors[worker] = std::current_exception();
    }
  };
  if (jobs == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < jobs; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace iknet
