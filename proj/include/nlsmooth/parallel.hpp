#ifndef NLSMOOTH_PARALLEL_HPP
#define NLSMOOTH_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace nlsmooth {

/// Worker count from NLSMOOTH_THREADS (default 1).
inline int thread_count() {
  const char* env = std::getenv("NLSMOOTH_THREADS");
  if (!env) return 1;
  try {
    const int n = std::stoi(env);
    return n >= 1 ? std::min(n, 256) : 1;
  } catch (...) {
    return 1;
  }
}

/// out[i] = f(i) for i < n, evaluated on up to thread_count() threads.
/// Results land in index order, so the outcome never depends on scheduling.
template <class T, class F>
std::vector<T> parallel_map(int n, F f) {
  std::vector<T> out(n);
  const int workers = std::min(thread_count(), n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) out[i] = f(i);
    return out;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          out[i] = f(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace nlsmooth

#endif  // NLSMOOTH_PARALLEL_HPP
