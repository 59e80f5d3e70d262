#pragma once

#include <cstdint>

namespace lecam {

// splitmix64 finalizer; statistically solid for counter-based streams.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Purpose tags keep streams for unrelated uses disjoint under one seed.
enum class StreamUse : std::uint64_t {
    points = 1,
    poisson_count = 2,
    dither = 3,
    gaussian = 4,
    augment = 5,
};

inline std::uint64_t stream_key(std::uint64_t seed, StreamUse use,
                                std::uint64_t k = 0, std::uint64_t l = 0,
                                std::uint64_t replicate = 0) {
    std::uint64_t h = mix64(seed ^ 0x6a09e667f3bcc909ULL);
    h = mix64(h ^ static_cast<std::uint64_t>(use));
    h = mix64(h ^ k);
    h = mix64(h ^ l);
    h = mix64(h ^ replicate);
    return h;
}

// Counter-indexed uniform stream: value i depends only on (key, i), so
// replicated streams can be created and consumed independently in any order.
class CounterStream {
public:
    explicit CounterStream(std::uint64_t key) : key_(key) {}
    CounterStream(std::uint64_t seed, StreamUse use, std::uint64_t k = 0,
                  std::uint64_t l = 0, std::uint64_t replicate = 0)
        : key_(stream_key(seed, use, k, l, replicate)) {}

    std::uint64_t next_u64() { return mix64(key_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

    // uniform in [0, 1)
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // uniform in (0, 1): never returns an exact endpoint
    double uniform_open() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    // uniform in [-1/2, 1/2)
    double uniform_symmetric() { return uniform01() - 0.5; }

    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

// Stateless dither source: the same (seed, k, l) always yields the same
// uniform in [-1/2, 1/2), independent of everything else drawn.
struct DitherStream {
    std::uint64_t seed = 0;
    std::uint64_t replicate = 0;

    double at(int k, std::int64_t l) const {
        std::uint64_t v = mix64(stream_key(seed, StreamUse::dither,
                                           static_cast<std::uint64_t>(k),
                                           static_cast<std::uint64_t>(l), replicate));
        return static_cast<double>(v >> 11) * 0x1.0p-53 - 0.5;
    }
};

}  // namespace lecam
