#include "mel/parallel.hpp"

#include <atomic>
#include <mutex>
#include <thread>
#include <vector>

namespace mel::par {

namespace {
std::atomic<int> g_threads{0};

int effective_threads() {
  int t = g_threads.load();
  if (t <= 0) t = int(std::thread::hardware_concurrency());
  return t > 0 ? t : 1;
}
}  // namespace

int thread_count() { return effective_threads(); }

void set_thread_count(int n) { g_threads.store(n); }

void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& body) {
  const int nt = effective_threads();
  if (nt == 1 || n <= 1) {
    for (std::int64_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto worker = [&] {
    for (;;) {
      const std::int64_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const int spawn = int(std::min<std::int64_t>(nt, n));
  pool.reserve(std::size_t(spawn));
  for (int t = 1; t < spawn; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

double ordered_sum(std::int64_t n, const std::function<double(std::int64_t)>& partial) {
  std::vector<double> parts(std::size_t(n), 0.0);
  parallel_for(n, [&](std::int64_t i) { parts[std::size_t(i)] = partial(i); });
  double s = 0.0;
  for (double v : parts) s += v;  // fixed order: thread-count independent
  return s;
}

}  // namespace mel::par
