// Copyright 2026 The dgslab Authors
// SPDX-License-Identifier: Apache-2.0

#include "dgslab/rng.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "dgslab/error.hpp"

namespace dgs {

double Rng::normal() {
    // Box-Muller without caching the second variate, so the stream position
    // is the only state.
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t Rng::index(std::size_t n) {
    require(n > 0, "Rng::index: empty range");
    auto i = static_cast<std::size_t>(uniform() * static_cast<double>(n));
    return i < n ? i : n - 1;
}

std::string Rng::state() const {
    std::ostringstream os;
    os << engine_;
    return os.str();
}

void Rng::restore(const std::string& state) {
    std::istringstream is(state);
    is >> engine_;
    if (is.fail()) fail(ErrorCode::Parse, "invalid RNG state");
}

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::size_t CounterRng::index(std::size_t n) noexcept {
    auto i = static_cast<std::size_t>(uniform() * static_cast<double>(n));
    return i < n ? i : n - 1;
}

const char* to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::Ok: return "ok";
        case ErrorCode::Config: return "config error";
        case ErrorCode::Contract: return "contract violation";
        case ErrorCode::CorruptModel: return "corrupt model";
        case ErrorCode::Parse: return "parse error";
        case ErrorCode::UnsupportedVersion: return "unsupported version";
        case ErrorCode::Io: return "i/o error";
        case ErrorCode::DegenerateSample: return "degenerate sample";
        case ErrorCode::UndefinedCorrelation: return "undefined correlation";
        case ErrorCode::NoInformation: return "no information";
        case ErrorCode::Diverged: return "diverged";
    }
    return "unknown";
}

}  // namespace dgs
