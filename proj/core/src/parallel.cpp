#include "fracperim/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace fracperim {

namespace {

int default_threads() {
  if (const char* env = std::getenv("FRACPERIM_THREADS")) {
    try {
      const int v = std::stoi(env);
      if (v > 0) return v;
    } catch (const std::exception&) {
    }
  }
  return std::max(1U, std::thread::hardware_concurrency());
}

// Nested calls from inside a worker run serially instead of spawning more threads.
thread_local bool inside_worker = false;

std::atomic<int>& limit() {
  static std::atomic<int> value{default_threads()};
  return value;
}

}  // namespace

int thread_limit() { return limit().load(); }

void set_thread_limit(int threads) { limit().store(std::max(1, threads)); }

void parallel_for_blocks(std::size_t blocks, const std::function<void(std::size_t)>& body) {
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(thread_limit()), blocks);
  if (workers <= 1 || inside_worker) {
    for (std::size_t b = 0; b < blocks; ++b) body(b);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto run = [&] {
    const bool saved = inside_worker;
    inside_worker = true;
    for (;;) {
      const std::size_t b = next.fetch_add(1);
      if (b >= blocks) break;
      try {
        body(b);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
    inside_worker = saved;
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t t = 1; t < workers; ++t) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace fracperim
