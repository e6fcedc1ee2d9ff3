#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace iwalk::detail {

/// Splits [0, count) into contiguous chunks, runs work(begin, end, partial)
/// for each chunk on its own thread and returns the partials in chunk order.
/// Callers merge them in that order, so results do not depend on scheduling.
template <class Partial, class Work>
std::vector<Partial> run_chunks(std::size_t count, std::size_t min_chunk, Work work) {
  std::size_t threads = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  threads = std::min(threads, std::max<std::size_t>(1, count / std::max<std::size_t>(1, min_chunk)));
  std::vector<Partial> partials(threads);
  if (threads == 1) {
    work(std::size_t{0}, count, partials[0]);
    return partials;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    const std::size_t begin = count * t / threads;
    const std::size_t end = count * (t + 1) / threads;
    pool.emplace_back([&, t, begin, end] {
      try {
        work(begin, end, partials[t]);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return partials;
}

}  // namespace iwalk::detail
