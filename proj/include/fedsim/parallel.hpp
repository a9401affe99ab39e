#pragma once

// A small persistent thread pool. Work is handed out by atomic index, so
// execution order is nondeterministic, but every parallel_for body writes
// only its own slot and all reductions in this library combine partials in
// a fixed order; results are therefore independent of the thread count.
//
// The pool is not reentrant: a parallel_for issued from inside a worker
// (e.g. a matvec inside a per-node task) runs serially on that worker.

#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace fedsim {

namespace detail {
inline thread_local bool inside_pool_job = false;
}

class ThreadPool {
 public:
  static ThreadPool& instance() {
    static ThreadPool pool(default_thread_count());
    return pool;
  }

  // Number of threads doing work (workers plus the calling thread).
  unsigned thread_count() const { return static_cast<unsigned>(workers_.size()) + 1; }

  // Resizes the pool. Only call between jobs.
  void set_thread_count(unsigned n) {
    if (n < 1) n = 1;
    if (n == thread_count()) return;
    shutdown();
    start(n);
  }

  void run(std::size_t n, const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    if (detail::inside_pool_job || workers_.empty() || n == 1) {
      for (std::size_t i = 0; i < n; ++i) fn(i);
      return;
    }
    {
      std::lock_guard<std::mutex> lk(m_);
      job_ = &fn;
      job_n_ = n;
      next_.store(0, std::memory_order_relaxed);
      pending_ = workers_.size();
      error_ = nullptr;
      ++epoch_;
    }
    cv_work_.notify_all();
    work(fn, n);  // the calling thread participates
    {
      std::unique_lock<std::mutex> lk(m_);
      cv_done_.wait(lk, [&] { return pending_ == 0; });
      job_ = nullptr;
      if (error_) {
        auto e = error_;
        error_ = nullptr;
        std::rethrow_exception(e);
      }
    }
  }

  ~ThreadPool() { shutdown(); }

  // FEDSIM_THREADS caps the pool; otherwise use the hardware count.
  static unsigned default_thread_count() {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    if (const char* env = std::getenv("FEDSIM_THREADS")) {
      long v = std::strtol(env, nullptr, 10);
      if (v >= 1 && v <= 1024) return static_cast<unsigned>(v);
    }
    return hw;
  }

 private:
  explicit ThreadPool(unsigned n) { start(n); }

  void start(unsigned n) {
    stop_ = false;
    for (unsigned i = 1; i < n; ++i)
      workers_.emplace_back([this] { worker_loop(); });
  }

  void shutdown() {
    {
      std::lock_guard<std::mutex> lk(m_);
      stop_ = true;
      ++epoch_;
    }
    cv_work_.notify_all();
    for (auto& t : workers_) t.join();
    workers_.clear();
  }

  void worker_loop() {
    std::uint64_t seen = 0;
    for (;;) {
      const std::function<void(std::size_t)>* job;
      std::size_t n;
      {
        std::unique_lock<std::mutex> lk(m_);
        cv_work_.wait(lk, [&] { return stop_ || epoch_ != seen; });
        if (stop_) return;
        seen = epoch_;
        job = job_;
        n = job_n_;
      }
      if (job) work(*job, n);
      {
        std::lock_guard<std::mutex> lk(m_);
        if (--pending_ == 0) cv_done_.notify_all();
      }
    }
  }

  void work(const std::function<void(std::size_t)>& fn, std::size_t n) {
    detail::inside_pool_job = true;
    for (;;) {
      std::size_t i = next_.fetch_add(1, std::memory_order_relaxed);
      if (i >= n) break;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lk(m_);
        if (!error_) error_ = std::current_exception();
      }
    }
    detail::inside_pool_job = false;
  }

  std::vector<std::thread> workers_;
  std::mutex m_;
  std::condition_variable cv_work_, cv_done_;
  const std::function<void(std::size_t)>* job_ = nullptr;
  std::size_t job_n_ = 0;
  std::atomic<std::size_t> next_{0};
  std::size_t pending_ = 0;
  std::uint64_t epoch_ = 0;
  bool stop_ = false;
  std::exception_ptr error_;
};

// Runs fn(0..n-1) across the pool (or serially when nested/small).
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  ThreadPool::instance().run(n, fn);
}

inline void set_threads(unsigned n) { ThreadPool::instance().set_thread_count(n); }
inline unsigned thread_count() { return ThreadPool::instance().thread_count(); }

}  // namespace fedsim
