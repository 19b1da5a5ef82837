#include "relaxbsde/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace relaxbsde {
namespace {

std::atomic<unsigned> g_workers{0};

unsigned hardware_workers() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

}  // namespace

void set_worker_count(unsigned workers) { g_workers.store(workers); }

unsigned worker_count() {
  const unsigned w = g_workers.load();
  return w == 0 ? hardware_workers() : w;
}

void parallel_for(std::size_t items,
                  const std::function<void(std::size_t, std::size_t, std::size_t)>& fn,
                  std::size_t chunk) {
  const std::size_t chunks = chunk_count(items, chunk);
  if (chunks == 0) return;
  const std::size_t threads = std::min<std::size_t>(worker_count(), chunks);

  auto run_chunk = [&](std::size_t c) {
    const std::size_t begin = c * chunk;
    fn(begin, std::min(items, begin + chunk), c);
  };

  if (threads <= 1) {
    for (std::size_t c = 0; c < chunks; ++c) run_chunk(c);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  std::size_t first_error_chunk = chunks;

  auto worker = [&] {
    for (;;) {
      const std::size_t c = next.fetch_add(1);
      if (c >= chunks) return;
      try {
        run_chunk(c);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (c < first_error_chunk) {
          first_error_chunk = c;
          first_error = std::current_exception();
        }
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(threads - 1);
  for (std::size_t i = 0; i + 1 < threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

double ordered_sum(std::span<const double> partials) {
  double s = 0.0;
  for (double v : partials) s += v;
  return s;
}

MeanStdError mean_and_std_error(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n == 0) return {};
  std::vector<double> partial(chunk_count(n));
  parallel_for(n, [&](std::size_t b, std::size_t e, std::size_t c) {
    double s = 0.0;
    for (std::size_t i = b; i < e; ++i) s += values[i];
    partial[c] = s;
  });
  const double mean = ordered_sum(partial) / static_cast<double>(n);
  if (n == 1) return {mean, 0.0};
  parallel_for(n, [&](std::size_t b, std::size_t e, std::size_t c) {
    double s = 0.0;
    for (std::size_t i = b; i < e; ++i) {
      const double dv = values[i] - mean;
      s += dv * dv;
    }
    partial[c] = s;
  });
  const double var = ordered_sum(partial) / static_cast<double>(n - 1);
  return {mean, std::sqrt(var / static_cast<double>(n))};
}

}  // namespace relaxbsde
