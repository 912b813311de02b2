#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace deltagnn {

using NodeId = int64_t;
using RelId = int32_t;
using PartitionId = int32_t;

struct Edge {
    NodeId src = 0;
    RelId rel = 0;
    NodeId dst = 0;

    friend bool operator==(const Edge&, const Edge&) = default;
};

// Total order used by every sorted edge array so incremental and full
// rebuilds produce identical layouts.
inline bool src_order(const Edge& a, const Edge& b) {
    if (a.src != b.src) return a.src < b.src;
    if (a.dst != b.dst) return a.dst < b.dst;
    return a.rel < b.rel;
}

inline bool dst_order(const Edge& a, const Edge& b) {
    if (a.dst != b.dst) return a.dst < b.dst;
    if (a.src != b.src) return a.src < b.src;
    return a.rel < b.rel;
}

struct Bucket {
    PartitionId src_part = 0;
    PartitionId dst_part = 0;

    friend bool operator==(const Bucket&, const Bucket&) = default;
    friend auto operator<=>(const Bucket&, const Bucket&) = default;
};

class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Raised when on-disk structures disagree with their index or header.
class IntegrityError : public Error {
  public:
    using Error::Error;
};

// Raised when a policy or caller touches a partition that is not resident.
class ResidencyError : public Error {
  public:
    using Error::Error;
};

using Rng = std::mt19937_64;

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t derive_seed(uint64_t base, uint64_t a) {
    return splitmix64(base ^ splitmix64(a + 0x632be59bd9b4e019ULL));
}

inline uint64_t derive_seed(uint64_t base, uint64_t a, uint64_t b) {
    return derive_seed(derive_seed(base, a), b);
}

inline uint64_t derive_seed(uint64_t base, uint64_t a, uint64_t b, uint64_t c) {
    return derive_seed(derive_seed(base, a, b), c);
}

// Uniform integer in [0, n). Implemented with rejection sampling on raw
// engine output so results do not depend on the standard library's
// distribution implementation.
inline uint64_t uniform_index(Rng& rng, uint64_t n) {
    if (n <= 1) return 0;
    const uint64_t limit = UINT64_MAX - (UINT64_MAX % n);
    uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % n;
}

// Uniform double in [0, 1).
inline double uniform_unit(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

template <typename T>
void shuffle(std::span<T> values, Rng& rng) {
    for (size_t i = values.size(); i > 1; --i) {
        size_t j = uniform_index(rng, i);
        std::swap(values[i - 1], values[j]);
    }
}

template <typename T>
void shuffle(std::vector<T>& values, Rng& rng) {
    shuffle(std::span<T>(values), rng);
}

}  // namespace deltagnn
