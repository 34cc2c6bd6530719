#include "trace/parallel.hpp"

#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <thread>
#include <vector>

namespace trace {

namespace {

thread_local bool inside_worker = false;

int resolve_thread_count() {
    if (const char* env = std::getenv("TRACE_THREADS")) {
        int n = std::atoi(env);
        if (n >= 1) return n;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// Fork/join pool: one task per worker per generation, main thread runs
// chunk 0 itself.
class Pool {
public:
    static Pool& instance() {
        static Pool pool(resolve_thread_count());
        return pool;
    }

    int workers() const { return n_workers_; }

    void run(const std::function<void(int chunk, int n_chunks)>& fn) {
        if (n_workers_ == 1) {
            fn(0, 1);
            return;
        }
        {
            std::unique_lock<std::mutex> lock(mu_);
            task_ = &fn;
            pending_ = n_workers_ - 1;
            ++generation_;
        }
        cv_start_.notify_all();
        fn(0, n_workers_);
        std::unique_lock<std::mutex> lock(mu_);
        cv_done_.wait(lock, [&] { return pending_ == 0; });
        task_ = nullptr;
    }

private:
    explicit Pool(int n) : n_workers_(n) {
        for (int i = 1; i < n_workers_; ++i) {
            threads_.emplace_back([this, i] { worker_loop(i); });
        }
    }

    ~Pool() {
        {
            std::unique_lock<std::mutex> lock(mu_);
            stop_ = true;
            ++generation_;
        }
        cv_start_.notify_all();
        for (auto& t : threads_) t.join();
    }

    void worker_loop(int slot) {
        inside_worker = true;
        std::uint64_t seen = 0;
        for (;;) {
            const std::function<void(int, int)>* task = nullptr;
            {
                std::unique_lock<std::mutex> lock(mu_);
                cv_start_.wait(lock, [&] { return generation_ != seen; });
                seen = generation_;
                if (stop_) return;
                task = task_;
            }
            (*task)(slot, n_workers_);
            {
                std::unique_lock<std::mutex> lock(mu_);
                if (--pending_ == 0) cv_done_.notify_all();
            }
        }
    }

    int n_workers_;
    std::vector<std::thread> threads_;
    std::mutex mu_;
    std::condition_variable cv_start_;
    std::condition_variable cv_done_;
    const std::function<void(int, int)>* task_ = nullptr;
    int pending_ = 0;
    std::uint64_t generation_ = 0;
    bool stop_ = false;
};

} // namespace

int thread_count() { return Pool::instance().workers(); }

void parallel_for_workers(int n, const std::function<void(int, int, int)>& fn) {
    if (n <= 0) return;
    // Nested calls (and tiny ranges) run inline on the caller's thread.
    if (inside_worker || n == 1 || thread_count() == 1) {
        fn(0, n, 0);
        return;
    }
    Pool::instance().run([&](int chunk, int n_chunks) {
        int begin = static_cast<int>(static_cast<long long>(n) * chunk / n_chunks);
        int end = static_cast<int>(static_cast<long long>(n) * (chunk + 1) / n_chunks);
        if (begin < end) fn(begin, end, chunk);
    });
}

void parallel_for(int n, const std::function<void(int, int)>& fn) {
    parallel_for_workers(n, [&](int begin, int end, int) { fn(begin, end); });
}

void parallel_for_strided(int n, const std::function<void(int)>& fn) {
    if (n <= 0) return;
    if (inside_worker || n == 1 || thread_count() == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    Pool::instance().run([&](int chunk, int n_chunks) {
        for (int i = chunk; i < n; i += n_chunks) fn(i);
    });
}

} // namespace trace
