#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace lsdd {

//! Number of worker threads used by parallel_for; 0 means
//! std::thread::hardware_concurrency().
inline std::size_t&
default_thread_count()
{
  static std::size_t count = 0;
  return count;
}

//! Runs fn(i) for i in [0, count). Work is handed out dynamically, so `fn`
//! must write its result to slot i rather than append; results are then
//! independent of scheduling. The first exception thrown is rethrown.
template<class Fn>
void
parallel_for(std::size_t count, Fn&& fn, std::size_t threads = default_thread_count())
{
  if (threads == 0) {
    threads = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  }
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      fn(i);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) {
            error = std::current_exception();
          }
          next = count;
        }
      }
    });
  }
  for (auto& t : pool) {
    t.join();
  }
  if (error) {
    std::rethrow_exception(error);
  }
}

} // namespace lsdd
