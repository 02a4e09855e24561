#ifndef SSI_PARALLEL_HPP
#define SSI_PARALLEL_HPP

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ssi {

/// Splits [0, n) into `workers` contiguous chunks and runs
/// body(begin, end) on each, joining before return. The partition depends
/// only on (n, workers); callers keep results independent of it by writing
/// to per-index slots. The first exception thrown by a chunk is rethrown.
template <typename Body>
void parallel_for(std::size_t n, int workers, Body&& body) {
  const std::size_t w = std::clamp<std::size_t>(workers < 1 ? 1 : static_cast<std::size_t>(workers), 1,
                                                std::max<std::size_t>(n, 1));
  if (w == 1) {
    body(std::size_t{0}, n);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> threads;
  threads.reserve(w - 1);
  const auto run = [&](std::size_t begin, std::size_t end) {
    try {
      body(begin, end);
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  };
  const std::size_t chunk = n / w, extra = n % w;
  std::size_t begin = 0;
  for (std::size_t i = 0; i < w; ++i) {
    const std::size_t end = begin + chunk + (i < extra ? 1 : 0);
    if (i + 1 == w) run(begin, end);
    else threads.emplace_back(run, begin, end);
    begin = end;
  }
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

/// Worker count from the environment (SSI_WORKERS), else hardware concurrency.
int default_workers();

}  // namespace ssi

#endif  // SSI_PARALLEL_HPP
