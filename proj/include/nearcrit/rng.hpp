#pragma once

#include <cstdint>
#include <random>

namespace nearcrit {

// Keyed, counter-style random streams. Every consumer of randomness derives
// its own engine from (master seed, stream kind, replication, attempt, i, j),
// so results do not depend on scheduling order across worker threads.

inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

enum class StreamKind : uint64_t {
    FieldColumn = 1,
    CellUniform = 2,
    CellBeta = 3,
    CirReference = 4,
    PairDraw = 5,
    Generic = 6,
};

class Xoshiro256pp {
  public:
    using result_type = uint64_t;

    Xoshiro256pp() : Xoshiro256pp(0) {}

    explicit Xoshiro256pp(uint64_t seed) {
        uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~uint64_t(0); }

    result_type operator()() {
        const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform on (0,1), never 0 or 1.
    double u01() { return (double((*this)() >> 11) + 0.5) * 0x1.0p-53; }

  private:
    static constexpr uint64_t rotl(uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    uint64_t s_[4];
};

inline Xoshiro256pp make_stream(uint64_t seed, StreamKind kind, uint64_t rep = 0,
                                uint64_t attempt = 0, uint64_t i = 0, uint64_t j = 0) {
    uint64_t st = seed ^ 0x6a09e667f3bcc908ULL;
    splitmix64(st);
    st ^= static_cast<uint64_t>(kind) * 0x9e3779b97f4a7c15ULL;
    splitmix64(st);
    st ^= rep * 0xc2b2ae3d27d4eb4fULL;
    splitmix64(st);
    st ^= attempt * 0x165667b19e3779f9ULL;
    splitmix64(st);
    st ^= i * 0x27d4eb2f165667c5ULL;
    splitmix64(st);
    st ^= j * 0x9e3779b97f4a7c15ULL;
    return Xoshiro256pp(splitmix64(st));
}

inline double draw_normal(Xoshiro256pp& eng, double mean = 0.0, double sd = 1.0) {
    std::normal_distribution<double> d(mean, sd);
    return d(eng);
}

inline int64_t draw_poisson(Xoshiro256pp& eng, double mean) {
    if (mean <= 0.0) return 0;
    std::poisson_distribution<int64_t> d(mean);
    return d(eng);
}

}  // namespace nearcrit
