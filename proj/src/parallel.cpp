#include "oodil/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <thread>
#include <vector>

namespace oodil {

namespace {

int initial_thread_count() {
  if (const char* env = std::getenv("OODIL_THREADS")) {
    int n = std::atoi(env);
    if (n >= 1) return n;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return std::max(1u, std::min(hw, 8u));
}

std::atomic<int> g_threads{initial_thread_count()};

// Nested parallel_for calls run sequentially: the pool handles one job at a
// time and a worker re-entering run() would deadlock.
thread_local bool t_in_parallel = false;

// Minimal persistent fork-join pool. Workers spin on a generation counter
// guarded by a mutex; each job is a (fn, n, nworkers) triple and every worker
// takes one fixed contiguous block.
class Pool {
 public:
  static Pool& instance() {
    static Pool pool;
    return pool;
  }

  void run(size_t n, int workers, const std::function<void(size_t, size_t)>& fn) {
    ensure_workers(workers - 1);
    {
      std::unique_lock<std::mutex> lock(m_);
      fn_ = &fn;
      n_ = n;
      workers_ = workers;
      pending_ = workers - 1;
      generation_++;
      cv_start_.notify_all();
    }
    run_block(0);  // caller is worker 0
    std::unique_lock<std::mutex> lock(m_);
    cv_done_.wait(lock, [&] { return pending_ == 0; });
    fn_ = nullptr;
  }

 private:
  Pool() = default;
  ~Pool() {
    {
      std::unique_lock<std::mutex> lock(m_);
      stop_ = true;
      cv_start_.notify_all();
    }
    for (auto& t : threads_) t.join();
  }

  void ensure_workers(int count) {
    std::unique_lock<std::mutex> lock(m_);
    while (static_cast<int>(threads_.size()) < count) {
      int id = static_cast<int>(threads_.size()) + 1;
      threads_.emplace_back([this, id] { worker_loop(id); });
    }
  }

  void run_block(int worker_id) {
    size_t chunk = (n_ + workers_ - 1) / workers_;
    size_t begin = std::min(n_, chunk * worker_id);
    size_t end = std::min(n_, begin + chunk);
    if (begin < end) {
      t_in_parallel = true;
      (*fn_)(begin, end);
      t_in_parallel = false;
    }
  }

  void worker_loop(int id) {
    uint64_t seen = 0;
    while (true) {
      std::unique_lock<std::mutex> lock(m_);
      cv_start_.wait(lock, [&] { return stop_ || generation_ > seen; });
      if (stop_) return;
      seen = generation_;
      bool participate = id < workers_;
      lock.unlock();
      if (participate) run_block(id);
      lock.lock();
      if (participate && --pending_ == 0) cv_done_.notify_one();
    }
  }

  std::mutex m_;
  std::condition_variable cv_start_;
  std::condition_variable cv_done_;
  std::vector<std::thread> threads_;
  const std::function<void(size_t, size_t)>* fn_ = nullptr;
  size_t n_ = 0;
  int workers_ = 1;
  int pending_ = 0;
  uint64_t generation_ = 0;
  bool stop_ = false;
};

}  // namespace

int num_threads() { return g_threads.load(); }

void set_num_threads(int n) { g_threads.store(n < 1 ? 1 : n); }

void parallel_for(size_t n, const std::function<void(size_t, size_t)>& fn) {
  int workers = static_cast<int>(std::min<size_t>(g_threads.load(), n));
  if (workers <= 1 || n == 0 || t_in_parallel) {
    if (n > 0) fn(0, n);
    return;
  }
  Pool::instance().run(n, workers, fn);
}

}  // namespace oodil
