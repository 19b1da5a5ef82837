#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace relaxbsde {

/// Upper bound on threads used by the engine. 0 resets to hardware concurrency.
void set_worker_count(unsigned workers);
unsigned worker_count();

/// Paths are processed in fixed chunks of this size. Chunk boundaries never
/// depend on the worker count, so chunked reductions are reproducible.
inline constexpr std::size_t kChunkSize = 512;

inline std::size_t chunk_count(std::size_t items, std::size_t chunk = kChunkSize) {
  return (items + chunk - 1) / chunk;
}

/// Runs fn(begin, end, chunk_index) over [0, items) split into fixed chunks.
/// If any invocation throws, the exception from the lowest chunk index is
/// rethrown after all workers finish.
void parallel_for(std::size_t items,
                  const std::function<void(std::size_t, std::size_t, std::size_t)>& fn,
                  std::size_t chunk = kChunkSize);

/// Sum of per-chunk partials in chunk order.
double ordered_sum(std::span<const double> partials);

/// Mean and standard error (sample std / sqrt(N)) of values, with a two-pass
/// chunked reduction that is independent of the worker count.
struct MeanStdError {
  double mean = 0.0;
  double std_error = 0.0;
};
MeanStdError mean_and_std_error(std::span<const double> values);

}  // namespace relaxbsde
