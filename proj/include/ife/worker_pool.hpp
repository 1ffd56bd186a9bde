#pragma once

#include <condition_variable>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace ife {

// Fixed set of worker threads running fn(worker_id) jobs. Work is always
// partitioned statically by worker id, so results are independent of
// scheduling; used for batch-sharded gradient computation.
class WorkerPool {
 public:
  explicit WorkerPool(int n) {
    for (int i = 0; i < n; ++i) threads_.emplace_back([this, i] { worker_loop(i); });
  }

  ~WorkerPool() {
    {
      std::lock_guard<std::mutex> lk(mu_);
      stop_ = true;
    }
    cv_work_.notify_all();
    for (auto& t : threads_) t.join();
  }

  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  int size() const { return static_cast<int>(threads_.size()); }

  // Runs fn(w) for every worker w; blocks until all complete.
  void run(const std::function<void(int)>& fn) {
    std::unique_lock<std::mutex> lk(mu_);
    job_ = &fn;
    remaining_ = size();
    ++generation_;
    cv_work_.notify_all();
    cv_main_.wait(lk, [this] { return remaining_ == 0; });
    job_ = nullptr;
  }

 private:
  void worker_loop(int id) {
    long seen = 0;
    for (;;) {
      const std::function<void(int)>* job;
      {
        std::unique_lock<std::mutex> lk(mu_);
        cv_work_.wait(lk, [this, seen] { return stop_ || generation_ > seen; });
        if (stop_) return;
        seen = generation_;
        job = job_;
      }
      (*job)(id);
      {
        std::lock_guard<std::mutex> lk(mu_);
        if (--remaining_ == 0) cv_main_.notify_one();
      }
    }
  }

  std::vector<std::thread> threads_;
  std::mutex mu_;
  std::condition_variable cv_work_, cv_main_;
  const std::function<void(int)>* job_ = nullptr;
  long generation_ = 0;
  int remaining_ = 0;
  bool stop_ = false;
};

}  // namespace ife
