#include "injdiff/kernels.hpp"

#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace injdiff::kernels {

#if defined(INJDIFF_X86)
const Ops& avx2_ops();
#endif
#if defined(INJDIFF_ARM64)
const Ops& neon_ops();
#endif

bool cpu_has_avx2() {
#if defined(INJDIFF_X86)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

bool cpu_has_neon() {
#if defined(INJDIFF_ARM64)
    return true;  // baseline on aarch64
#else
    return false;
#endif
}

namespace {

const Ops* pick_auto() {
#if defined(INJDIFF_X86)
    if (cpu_has_avx2()) return &avx2_ops();
#endif
#if defined(INJDIFF_ARM64)
    if (cpu_has_neon()) return &neon_ops();
#endif
    return &scalar();
}

std::atomic<const Ops*> g_active{nullptr};

const Ops* init_active() {
    const char* env = std::getenv("INJDIFF_KERNELS");
    if (env && std::strlen(env) > 0 && std::strcmp(env, "auto") != 0) {
        if (std::strcmp(env, "scalar") == 0) return &scalar();
#if defined(INJDIFF_X86)
        if (std::strcmp(env, "avx2") == 0 && cpu_has_avx2()) return &avx2_ops();
#endif
#if defined(INJDIFF_ARM64)
        if (std::strcmp(env, "neon") == 0 && cpu_has_neon()) return &neon_ops();
#endif
        // unknown or unavailable lane requested: fall through to auto
    }
    return pick_auto();
}

// Minimal persistent pool for static row partitioning. A nested or
// concurrent run() degrades to serial execution in the caller, which is
// numerically identical because the partition never splits a row.
class Pool {
public:
    static Pool& get() {
        static Pool p;
        return p;
    }

    int size() const { return nthreads_.load(std::memory_order_relaxed); }

    // not safe while a job is in flight; callers configure threads up front
    void resize(int n) {
        if (n < 1) n = 1;
        std::lock_guard<std::mutex> lk(cfg_mutex_);
        stop_workers();
        nthreads_.store(n, std::memory_order_relaxed);
        start_workers();
    }

    void run(int nchunks, const std::function<void(int)>& fn) {
        if (nchunks <= 0) return;
        if (size() <= 1 || nchunks == 1 || !job_mutex_.try_lock()) {
            for (int c = 0; c < nchunks; ++c) fn(c);
            return;
        }
        {
            std::unique_lock<std::mutex> lk(wake_mutex_);
            fn_ = &fn;
            nchunks_ = nchunks;
            next_.store(0, std::memory_order_relaxed);
            done_.store(0, std::memory_order_relaxed);
            ++generation_;
            wake_cv_.notify_all();
        }
        work();  // caller participates
        {
            std::unique_lock<std::mutex> lk(wake_mutex_);
            done_cv_.wait(lk, [&] { return done_.load(std::memory_order_acquire) >= nchunks_; });
            fn_ = nullptr;
        }
        job_mutex_.unlock();
    }

private:
    Pool() {
        int n = (int)std::thread::hardware_concurrency();
        if (n < 1) n = 1;
        if (n > 8) n = 8;
        if (const char* env = std::getenv("INJDIFF_THREADS")) {
            const int e = std::atoi(env);
            if (e >= 1) n = e;
        }
        nthreads_.store(n, std::memory_order_relaxed);
        start_workers();
    }

    ~Pool() { stop_workers(); }

    void start_workers() {
        quit_ = false;
        for (int i = 0; i < size() - 1; ++i) {
            workers_.emplace_back([this] { worker_loop(); });
        }
    }

    void stop_workers() {
        {
            std::unique_lock<std::mutex> lk(wake_mutex_);
            quit_ = true;
            wake_cv_.notify_all();
        }
        for (auto& t : workers_) t.join();
        workers_.clear();
    }

    void worker_loop() {
        uint64_t seen = 0;
        for (;;) {
            {
                std::unique_lock<std::mutex> lk(wake_mutex_);
                wake_cv_.wait(lk, [&] { return quit_ || generation_ != seen; });
                if (quit_) return;
                seen = generation_;
            }
            work();
        }
    }

    void work() {
        const std::function<void(int)>* fn = fn_;
        if (!fn) return;
        const int n = nchunks_;
        int finished = 0;
        for (;;) {
            const int c = next_.fetch_add(1, std::memory_order_relaxed);
            if (c >= n) break;
            (*fn)(c);
            ++finished;
        }
        if (finished > 0) {
            const int d = done_.fetch_add(finished, std::memory_order_acq_rel) + finished;
            if (d >= n) {
                std::lock_guard<std::mutex> lk(wake_mutex_);
                done_cv_.notify_all();
            }
        } else {
            // claimed nothing; still might be the observer that must not wake anyone
        }
    }

    std::mutex cfg_mutex_;
    std::mutex job_mutex_;
    std::mutex wake_mutex_;
    std::condition_variable wake_cv_;
    std::condition_variable done_cv_;
    std::vector<std::thread> workers_;
    const std::function<void(int)>* fn_ = nullptr;
    std::atomic<int> next_{0};
    std::atomic<int> done_{0};
    int nchunks_ = 0;
    uint64_t generation_ = 0;
    bool quit_ = false;
    int nthreads_ = 1;
};

}  // namespace

const Ops& active() {
    const Ops* o = g_active.load(std::memory_order_acquire);
    if (!o) {
        o = init_active();
        g_active.store(o, std::memory_order_release);
    }
    return *o;
}

bool force(const char* name) {
    if (std::strcmp(name, "auto") == 0) {
        g_active.store(pick_auto(), std::memory_order_release);
        return true;
    }
    if (std::strcmp(name, "scalar") == 0) {
        g_active.store(&scalar(), std::memory_order_release);
        return true;
    }
#if defined(INJDIFF_X86)
    if (std::strcmp(name, "avx2") == 0 && cpu_has_avx2()) {
        g_active.store(&avx2_ops(), std::memory_order_release);
        return true;
    }
#endif
#if defined(INJDIFF_ARM64)
    if (std::strcmp(name, "neon") == 0 && cpu_has_neon()) {
        g_active.store(&neon_ops(), std::memory_order_release);
        return true;
    }
#endif
    return false;
}

void set_threads(int n) { Pool::get().resize(n); }

int threads() { return Pool::get().size(); }

void gemm(int M, int N, int K, const float* A, const float* B, float* C, bool accumulate) {
    const Ops& o = active();
    const int nt = threads();
    const int64_t work = (int64_t)M * N * K;
    if (nt <= 1 || work < (1 << 16) || M < 2 * nt) {
        o.gemm(M, N, K, A, B, C, accumulate);
        return;
    }
    const int chunks = nt;
    Pool::get().run(chunks, [&](int c) {
        const int r0 = (int)((int64_t)M * c / chunks);
        const int r1 = (int)((int64_t)M * (c + 1) / chunks);
        if (r1 > r0) {
            o.gemm(r1 - r0, N, K, A + (int64_t)r0 * K, B, C + (int64_t)r0 * N, accumulate);
        }
    });
}

}  // namespace injdiff::kernels
