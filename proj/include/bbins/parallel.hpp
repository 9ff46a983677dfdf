#pragma once

#include <cstdint>
#include <exception>
#include <mutex>

namespace bbins {

/// Runs fn(i) for i in [0, count), under OpenMP when `parallel` is set. An exception thrown by
/// any iteration is carried out of the parallel region and rethrown after the join.
template <typename Fn>
void parallel_for(std::uint64_t count, bool parallel, Fn&& fn) {
  if (!parallel) {
    for (std::uint64_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::exception_ptr error;
  std::mutex guard;
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(count); ++i) {
    try {
      fn(static_cast<std::uint64_t>(i));
    } catch (...) {
      const std::lock_guard<std::mutex> lock(guard);
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace bbins
