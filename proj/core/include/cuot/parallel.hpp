#pragma once

#include <condition_variable>
#include <cstddef>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace cuot {

/// Fixed-size pool running static-partitioned loops. Every index range is
/// assigned to the same worker regardless of timing, and callers only use it
/// for loops whose iterations write disjoint outputs, so results do not
/// depend on the thread count. Calls made from inside a worker run inline.
class ThreadPool {
public:
    explicit ThreadPool(std::size_t threads);
    ~ThreadPool();

    ThreadPool(const ThreadPool&) = delete;
    ThreadPool& operator=(const ThreadPool&) = delete;

    std::size_t size() const { return workers_.size() + 1; }

    /// Calls fn(begin, end) over a partition of [0, n) into at most size() chunks.
    void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

private:
    void worker_loop(std::size_t id);

    std::vector<std::thread> workers_;
    std::mutex mutex_;
    std::condition_variable start_cv_;
    std::condition_variable done_cv_;
    const std::function<void(std::size_t, std::size_t)>* job_ = nullptr;
    std::size_t job_n_ = 0;
    std::size_t generation_ = 0;
    std::size_t pending_ = 0;
    bool stopping_ = false;
};

/// Runs fn over [0, n) on the pool when one is given, inline otherwise.
inline void parallel_for(ThreadPool* pool, std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn) {
    if (pool && n > 1) pool->parallel_for(n, fn);
    else if (n > 0) fn(0, n);
}

}  // namespace cuot
