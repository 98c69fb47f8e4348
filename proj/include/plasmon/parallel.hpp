#pragma once

// Index-parallel loop with results stored by index, so output order never
// depends on scheduling.  PLASMON_THREADS overrides the worker count.

#include <atomic>
#include <cstdlib>
#include <exception>
#include <algorithm>
#include <string>
#include <thread>
#include <vector>

namespace plasmon {

inline int thread_count() {
  if (const char* s = std::getenv("PLASMON_THREADS")) {
    try {
      const int n = std::stoi(s);
      if (n >= 1) return n;
    } catch (...) {
    }
  }
  const unsigned h = std::thread::hardware_concurrency();
  return h == 0 ? 1 : int(h);
}

template <class F>
void parallel_for(std::size_t count, const F& body, int threads = 0) {
  if (threads <= 0) threads = thread_count();
  if (threads == 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const int nt = int(std::min<std::size_t>(count, std::size_t(threads)));
  for (int t = 0; t < nt; ++t) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  // lowest failing index wins, as in a serial run
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

template <class T, class F>
std::vector<T> parallel_map(std::size_t count, const F& body, int threads = 0) {
  std::vector<T> out(count);
  parallel_for(count, [&](std::size_t i) { out[i] = body(i); }, threads);
  return out;
}

}  // namespace plasmon
