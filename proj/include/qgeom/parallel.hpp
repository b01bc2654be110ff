#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <vector>

#include "qgeom/numerics.hpp"

namespace qgeom {

inline unsigned resolve_threads(unsigned requested) {
  if (requested != 0) {
    return requested;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs body(i) for i in [0, n) on up to `threads` workers (0 = hardware).
/// Each index writes only its own output slot, so results do not depend on
/// the schedule. If several indices throw, the exception of the lowest
/// index is rethrown.
template <typename Body>
void parallel_for(Index n, unsigned threads, Body&& body) {
  const auto workers = static_cast<Index>(std::min<Index>(resolve_threads(threads), std::max<Index>(n, 1)));
  if (workers <= 1) {
    for (Index i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<Index> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  auto work = [&] {
    for (Index i = next++; i < n; i = next++) {
      try {
        body(i);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  };
  std::vector<std::jthread> pool;
  for (Index w = 0; w < workers; ++w) pool.emplace_back(work);
  pool.clear();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace qgeom
