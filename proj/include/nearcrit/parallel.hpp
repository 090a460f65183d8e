#pragma once

#include <atomic>
#include <cmath>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace nearcrit {

inline int default_threads() {
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

// Runs fn(i) for i in [0, n). Each index writes only its own output slot, so
// results are identical for any thread count.
inline void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            fn(i);
        }
    };
    std::vector<std::thread> pool;
    int nt = std::min<std::size_t>(threads, n);
    pool.reserve(nt);
    for (int t = 0; t < nt; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
}

// Pairwise (cascade) summation: associativity-stable reduction for MC tallies.
inline double pairwise_sum(const double* data, std::size_t n) {
    if (n == 0) return 0.0;
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += data[i];
        return s;
    }
    std::size_t half = n / 2;
    return pairwise_sum(data, half) + pairwise_sum(data + half, n - half);
}

inline double pairwise_sum(const std::vector<double>& v) {
    return pairwise_sum(v.data(), v.size());
}

struct MeanVar {
    double mean = 0.0;
    double var = 0.0;   // unbiased sample variance
    double se = 0.0;    // standard error of the mean
    std::size_t n = 0;
};

inline MeanVar mean_and_se(const std::vector<double>& v) {
    MeanVar out;
    out.n = v.size();
    if (v.empty()) return out;
    out.mean = pairwise_sum(v) / double(v.size());
    if (v.size() > 1) {
        std::vector<double> sq(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) {
            double d = v[i] - out.mean;
            sq[i] = d * d;
        }
        out.var = pairwise_sum(sq) / double(v.size() - 1);
        out.se = std::sqrt(out.var / double(v.size()));
    }
    return out;
}

}  // namespace nearcrit
