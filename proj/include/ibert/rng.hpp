#pragma once

#include <cstdint>

namespace ibert {

// Counter-based splittable generator.
//
// A stream is identified by a 64-bit key. The n-th output of a stream is
// splitmix64_mix(key + (n + 1) * 0x9E3779B97F4A7C15), i.e. exactly the
// SplitMix64 sequence started at state `key`. Child streams are derived with
// split(): key' = splitmix64_mix(key ^ splitmix64_mix(stream_id + 0xD1B54A32D192ED03)).
// The derivation depends only on (key, stream_id), never on how many values
// were drawn from the parent, so per-sample streams can be created in any
// order or in parallel.
//
// Derived distributions are fixed here as well so that datasets and
// initializations are reproducible across standard libraries:
//   uniform_int(lo, hi): rejection sampling on the raw 64-bit output.
//   uniform01():         top 53 bits scaled by 2^-53, in [0, 1).
//   normal():            Box-Muller on two uniform01 draws (cosine branch).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : key_(mix(seed)) {}

    std::uint64_t next_u64();
    // Inclusive on both ends. lo <= hi.
    std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi);
    double uniform01();
    double normal();

    Rng split(std::uint64_t stream_id) const;
    std::uint64_t key() const { return key_; }

    static std::uint64_t mix(std::uint64_t z);

private:
    struct FromKey {};
    Rng(std::uint64_t key, FromKey) : key_(key) {}

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace ibert
