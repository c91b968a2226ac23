// Copyright 2026 The dgslab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace dgs {

enum class ErrorCode {
    Ok = 0,
    Config,
    Contract,
    CorruptModel,
    Parse,
    UnsupportedVersion,
    Io,
    DegenerateSample,
    UndefinedCorrelation,
    NoInformation,
    Diverged,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Raised by paired_effect when every paired difference is identical.
/// Carries the mean difference so callers can still report it.
class DegenerateSampleError : public Error {
public:
    DegenerateSampleError(const std::string& what, double mean_difference)
        : Error(ErrorCode::DegenerateSample, what), mean_difference_(mean_difference) {}
    double mean_difference() const noexcept { return mean_difference_; }

private:
    double mean_difference_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, const std::string& what) {
    if (!cond) fail(ErrorCode::Contract, what);
}

}  // namespace dgs
