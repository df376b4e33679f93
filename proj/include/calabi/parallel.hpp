#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <span>
#include <thread>
#include <vector>

namespace calabi {

namespace detail {
inline std::atomic<int>& worker_override() {
    static std::atomic<int> value{0};
    return value;
}
}  // namespace detail

/// Worker count used by the parallel loops. Resolution order: explicit
/// set_worker_count(), then CALABI_WORKERS, then hardware concurrency.
inline int worker_count() {
    if (int w = detail::worker_override().load(); w > 0) return w;
    if (const char* env = std::getenv("CALABI_WORKERS")) {
        int w = std::atoi(env);
        if (w > 0) return w;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

inline void set_worker_count(int workers) { detail::worker_override().store(std::max(0, workers)); }

/// Evaluates fn(i) for i in [0, n) and stores results by index. Work is split
/// into contiguous blocks; the output never depends on the number of workers.
template <class T, class Fn>
std::vector<T> parallel_map(std::size_t n, Fn&& fn, int workers = worker_count()) {
    std::vector<T> out(n);
    const std::size_t w = std::min<std::size_t>(std::max(1, workers), n == 0 ? 1 : n);
    if (w <= 1) {
        for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
        return out;
    }
    std::vector<std::exception_ptr> errors(w);
    std::vector<std::jthread> pool;
    pool.reserve(w);
    const std::size_t block = (n + w - 1) / w;
    for (std::size_t t = 0; t < w; ++t) {
        const std::size_t lo = t * block;
        const std::size_t hi = std::min(n, lo + block);
        if (lo >= hi) break;
        pool.emplace_back([&, lo, hi, t] {
            try {
                for (std::size_t i = lo; i < hi; ++i) out[i] = fn(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    // Rethrow the failure of the lowest block so the error is deterministic too.
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

/// Pairwise (fixed-shape tree) summation; bit-stable for a given input order.
inline double pairwise_sum(std::span<const double> values) {
    if (values.empty()) return 0.0;
    if (values.size() <= 8) {
        double s = 0.0;
        for (double v : values) s += v;
        return s;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

/// Neumaier-compensated running sum for long sequential Birkhoff sums.
class CompensatedSum {
public:
    void add(double v) {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v))
            comp_ += (sum_ - t) + v;
        else
            comp_ += (v - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

}  // namespace calabi
