// Copyright 2026 The dgslab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>

namespace dgs {

// Run-owned generator. Distributions are implemented here rather than taken
// from <random> so draws are identical across standard library vendors and
// the engine state can be checkpointed as text.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal();
    std::size_t index(std::size_t n);
    bool bernoulli(double p) { return uniform() < p; }

    std::string state() const;
    void restore(const std::string& state);

private:
    std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

// Counter-based stream: draw `i` of stream `key` is a pure function of
// (key, i), so parallel consumers see the same values regardless of order.
class CounterRng {
public:
    CounterRng(std::uint64_t key, std::uint64_t stream) noexcept
        : key_(splitmix64(key ^ splitmix64(stream + 0x9e3779b97f4a7c15ULL))) {}

    std::uint64_t next_u64() noexcept { return splitmix64(key_ + counter_++ * 0xd1b54a32d192ed03ULL); }
    double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
    std::size_t index(std::size_t n) noexcept;

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace dgs
