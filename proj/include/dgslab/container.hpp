// Copyright 2026 The dgslab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dgslab/cloud.hpp"
#include "dgslab/field.hpp"

namespace dgs {

// Versioned little-endian binary container shared by checkpoints and scene
// dumps. Layout:
//   magic "DGSLAB\0\1" | u32 format version | u32 payload kind | payload
// Scalars are fixed-width little-endian; doubles are IEEE-754 binary64 bit
// patterns; arrays and strings are u64 length-prefixed.
inline constexpr std::uint32_t kFormatVersion = 1;

enum class PayloadKind : std::uint32_t { Checkpoint = 1, Scene = 2 };

class BinaryWriter {
public:
    void u32(std::uint32_t v);
    void u64(std::uint64_t v);
    void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
    void f64(double v);
    void str(std::string_view s);
    void f64s(std::span<const double> v);
    void i32s(std::span<const int> v);
    void header(PayloadKind kind, std::uint32_t version = kFormatVersion);

    const std::string& bytes() const { return buf_; }

private:
    std::string buf_;
};

class BinaryReader {
public:
    explicit BinaryReader(std::string_view bytes) : bytes_(bytes) {}

    std::uint32_t u32();
    std::uint64_t u64();
    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
    double f64();
    std::string str();
    std::vector<double> f64s();
    std::vector<int> i32s();
    /// Checks magic, version and kind; throws UnsupportedVersion / Parse.
    void header(PayloadKind expected);
    bool at_end() const { return pos_ == bytes_.size(); }

private:
    std::string_view take(std::size_t n);
    std::size_t length_prefix(std::size_t elem_size);

    std::string_view bytes_;
    std::size_t pos_ = 0;
};

void write_cloud(BinaryWriter& w, const GaussianCloud& c);
GaussianCloud read_cloud(BinaryReader& r);
void write_field(BinaryWriter& w, const DeformationField& f);
DeformationField read_field(BinaryReader& r);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view bytes);

}  // namespace dgs
