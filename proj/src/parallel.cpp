#include "structadapt/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace structadapt {

namespace {
std::atomic<unsigned> g_threads{0};
}

void set_thread_count(unsigned n)
{
  g_threads = n;
}

unsigned thread_count()
{
  unsigned n = g_threads.load();
  if (n == 0)
    n = std::max(1u, std::thread::hardware_concurrency());
  return n;
}

void parallel_for(std::size_t count, const std::function<void(std::size_t, unsigned)>& fn)
{
  const unsigned workers = static_cast<unsigned>(
    std::min<std::size_t>(thread_count(), std::max<std::size_t>(count, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i)
      fn(i, 0);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  const std::size_t chunk = std::max<std::size_t>(1, count / (8 * workers));
  auto body = [&](unsigned w) {
    while (true) {
      std::size_t start = next.fetch_add(chunk);
      if (start >= count)
        return;
      std::size_t stop = std::min(count, start + chunk);
      try {
        for (std::size_t i = start; i < stop; ++i)
          fn(i, w);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error)
          error = std::current_exception();
        next = count;
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w)
    pool.emplace_back(body, w);
  body(0);
  for (auto& t : pool)
    t.join();
  if (error)
    std::rethrow_exception(error);
}

} // namespace structadapt
