#include "cuot/parallel.hpp"

#include <algorithm>
#include <utility>

namespace cuot {

namespace {
thread_local bool t_inside_pool = false;

std::pair<std::size_t, std::size_t> chunk(std::size_t n, std::size_t parts, std::size_t id) {
    const std::size_t base = n / parts;
    const std::size_t extra = n % parts;
    const std::size_t begin = id * base + std::min(id, extra);
    return {begin, begin + base + (id < extra ? 1 : 0)};
}
}  // namespace

ThreadPool::ThreadPool(std::size_t threads) {
    const std::size_t extra = threads > 1 ? threads - 1 : 0;
    workers_.reserve(extra);
    for (std::size_t i = 0; i < extra; ++i) workers_.emplace_back([this, i] { worker_loop(i + 1); });
}

ThreadPool::~ThreadPool() {
    {
        std::lock_guard lock(mutex_);
        stopping_ = true;
    }
    start_cv_.notify_all();
    for (auto& t : workers_) t.join();
}

void ThreadPool::parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn) {
    if (workers_.empty() || t_inside_pool || n < 2) {
        if (n > 0) fn(0, n);
        return;
    }
    {
        std::lock_guard lock(mutex_);
        job_ = &fn;
        job_n_ = n;
        pending_ = workers_.size();
        ++generation_;
    }
    start_cv_.notify_all();

    t_inside_pool = true;
    const auto [b, e] = chunk(n, size(), 0);
    if (b < e) fn(b, e);
    t_inside_pool = false;

    std::unique_lock lock(mutex_);
    done_cv_.wait(lock, [this] { return pending_ == 0; });
    job_ = nullptr;
}

void ThreadPool::worker_loop(std::size_t id) {
    t_inside_pool = true;
    std::size_t seen = 0;
    for (;;) {
        const std::function<void(std::size_t, std::size_t)>* job = nullptr;
        std::size_t n = 0;
        {
            std::unique_lock lock(mutex_);
            start_cv_.wait(lock, [&] { return stopping_ || generation_ != seen; });
            if (stopping_) return;
            seen = generation_;
            job = job_;
            n = job_n_;
        }
        const auto [b, e] = chunk(n, size(), id);
        if (b < e) (*job)(b, e);
        {
            std::lock_guard lock(mutex_);
            --pending_;
        }
        done_cv_.notify_one();
    }
}

}  // namespace cuot
