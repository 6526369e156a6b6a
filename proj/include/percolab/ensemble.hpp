#pragma once

// Order-independent ensemble execution. Realization i is computed by a pure
// function of i; results are handed back (or folded) in index order, so the
// worker count never changes what the caller sees.

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace percolab {

inline int resolve_workers(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Computes produce(i) for i in [0, count) using up to `workers` threads and
/// calls consume(i, result) sequentially in increasing i. Each thread takes
/// `grain` consecutive items per round, so at most workers * grain results
/// are alive at a time.
template <typename Produce, typename Consume>
void parallel_fold(std::size_t count, int workers, Produce&& produce, Consume&& consume, std::size_t grain = 1) {
  using Result = decltype(produce(std::size_t{0}));
  const auto threads_wanted = static_cast<std::size_t>(std::max(1, resolve_workers(workers)));
  grain = std::max<std::size_t>(1, grain);
  const std::size_t chunk = threads_wanted * grain;
  std::vector<Result> results;
  for (std::size_t begin = 0; begin < count; begin += chunk) {
    const std::size_t end = std::min(count, begin + chunk);
    results.clear();
    results.resize(end - begin);
    auto run_block = [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) results[i - begin] = produce(i);
    };
    if (threads_wanted == 1 || end - begin <= grain) {
      run_block(begin, end);
    } else {
      std::vector<std::exception_ptr> errors;
      std::vector<std::thread> threads;
      for (std::size_t lo = begin; lo < end; lo += grain) {
        const std::size_t hi = std::min(end, lo + grain);
        errors.emplace_back();
        threads.emplace_back([&, lo, hi, slot = errors.size() - 1] {
          try {
            run_block(lo, hi);
          } catch (...) {
            errors[slot] = std::current_exception();
          }
        });
      }
      for (auto& t : threads) t.join();
      for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
      }
    }
    for (std::size_t i = begin; i < end; ++i) consume(i, std::move(results[i - begin]));
  }
}

template <typename Produce>
auto parallel_map(std::size_t count, int workers, Produce&& produce, std::size_t grain = 1) {
  using Result = decltype(produce(std::size_t{0}));
  std::vector<Result> out;
  out.reserve(count);
  parallel_fold(
      count, workers, produce, [&](std::size_t, Result&& r) { out.push_back(std::move(r)); }, grain);
  return out;
}

}  // namespace percolab
