#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace gdakg {

// Runs fn(begin, end, worker) over `workers` contiguous shards of [0, n).
// With workers <= 1 the call is inline. The first exception thrown by any
// shard is rethrown after all shards finish.
template <typename Fn>
void parallel_shards(std::size_t n, int workers, Fn&& fn) {
  if (workers <= 1 || n <= 1) {
    fn(std::size_t{0}, n, 0);
    return;
  }
  const std::size_t shards = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> threads;
  threads.reserve(shards);
  for (std::size_t s = 0; s < shards; ++s) {
    const std::size_t begin = n * s / shards;
    const std::size_t end = n * (s + 1) / shards;
    threads.emplace_back([&, begin, end, s] {
      try {
        fn(begin, end, static_cast<int>(s));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace gdakg
