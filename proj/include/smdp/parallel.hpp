#pragma once

// Index-parallel loops whose results do not depend on the worker count:
// every index writes its own slot and reductions happen afterwards in index
// order.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace smdp {

class Executor {
 public:
  explicit Executor(unsigned workers = 1) : workers_(std::max(1u, workers)) {}
  unsigned workers() const noexcept { return workers_; }

  /// Calls f(i) for i in [0, n). If any call throws, the exception from the
  /// smallest failing index is rethrown once every index has run.
  template <class F>
  void for_each(std::size_t n, F&& f) const {
    if (workers_ == 1 || n < 2) {
      for (std::size_t i = 0; i < n; ++i) f(i);
      return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex guard;
    std::size_t failed_index = n;
    std::exception_ptr error;
    auto work = [&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          f(i);
        } catch (...) {
          std::lock_guard lock(guard);
          if (i < failed_index) {
            failed_index = i;
            error = std::current_exception();
          }
        }
      }
    };
    std::vector<std::jthread> pool;
    const unsigned count = static_cast<unsigned>(std::min<std::size_t>(workers_, n));
    pool.reserve(count);
    for (unsigned w = 0; w < count; ++w) pool.emplace_back(work);
    pool.clear();
    if (error) std::rethrow_exception(error);
  }

 private:
  unsigned workers_;
};

}  // namespace smdp
