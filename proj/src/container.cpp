// Copyright 2026 The dgslab Authors
// SPDX-License-Identifier: Apache-2.0

#include "dgslab/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "dgslab/error.hpp"

namespace dgs {
namespace {

constexpr char kMagic[8] = {'D', 'G', 'S', 'L', 'A', 'B', '\0', '\1'};

}  // namespace

void BinaryWriter::u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void BinaryWriter::u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void BinaryWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void BinaryWriter::str(std::string_view s) {
    u64(s.size());
    buf_.append(s);
}

void BinaryWriter::f64s(std::span<const double> v) {
    u64(v.size());
    for (double x : v) f64(x);
}

void BinaryWriter::i32s(std::span<const int> v) {
    u64(v.size());
    for (int x : v) i32(x);
}

void BinaryWriter::header(PayloadKind kind, std::uint32_t version) {
    buf_.append(kMagic, sizeof kMagic);
    u32(version);
    u32(static_cast<std::uint32_t>(kind));
}

std::string_view BinaryReader::take(std::size_t n) {
    if (bytes_.size() - pos_ < n) fail(ErrorCode::Parse, "truncated file");
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
}

std::uint32_t BinaryReader::u32() {
    auto s = take(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(s[i])) << (8 * i);
    return v;
}

std::uint64_t BinaryReader::u64() {
    auto s = take(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(s[i])) << (8 * i);
    return v;
}

double BinaryReader::f64() { return std::bit_cast<double>(u64()); }

std::size_t BinaryReader::length_prefix(std::size_t elem_size) {
    const std::uint64_t n = u64();
    if (n > (bytes_.size() - pos_) / elem_size) fail(ErrorCode::Parse, "truncated file (array length exceeds payload)");
    return static_cast<std::size_t>(n);
}

std::string BinaryReader::str() {
    const std::size_t n = length_prefix(1);
    return std::string(take(n));
}

std::vector<double> BinaryReader::f64s() {
    const std::size_t n = length_prefix(8);
    std::vector<double> v(n);
    for (auto& x : v) x = f64();
    return v;
}

std::vector<int> BinaryReader::i32s() {
    const std::size_t n = length_prefix(4);
    std::vector<int> v(n);
    for (auto& x : v) x = i32();
    return v;
}

void BinaryReader::header(PayloadKind expected) {
    auto magic = take(sizeof kMagic);
    if (std::memcmp(magic.data(), kMagic, sizeof kMagic) != 0) fail(ErrorCode::Parse, "not a dgslab container (bad magic)");
    const std::uint32_t version = u32();
    if (version != kFormatVersion)
        fail(ErrorCode::UnsupportedVersion,
             "unsupported container version " + std::to_string(version) + " (expected " + std::to_string(kFormatVersion) + ")");
    const std::uint32_t kind = u32();
    if (kind != static_cast<std::uint32_t>(expected)) fail(ErrorCode::Parse, "container holds a different payload kind");
}

void write_cloud(BinaryWriter& w, const GaussianCloud& c) {
    w.i32(c.dim);
    w.f64s(c.positions);
    w.f64s(c.log_scales);
    w.f64s(c.opacity_logits);
    w.f64s(c.colors);
    w.f64s(c.depth_keys);
}

GaussianCloud read_cloud(BinaryReader& r) {
    GaussianCloud c;
    c.dim = r.i32();
    c.positions = r.f64s();
    c.log_scales = r.f64s();
    c.opacity_logits = r.f64s();
    c.colors = r.f64s();
    c.depth_keys = r.f64s();
    if (c.dim < 1 || c.dim > 3 || c.positions.size() != c.size() * static_cast<std::size_t>(c.dim) ||
        c.opacity_logits.size() != c.size() || c.colors.size() != c.size() || c.depth_keys.size() != c.size())
        fail(ErrorCode::Parse, "inconsistent Gaussian cloud arrays");
    return c;
}

void write_field(BinaryWriter& w, const DeformationField& f) {
    const auto& d = f.descriptor();
    w.i32(d.dim);
    w.i32(d.spatial_frequencies);
    w.i32(d.time_frequencies);
    w.f64(d.position_scale);
    w.i32s(d.hidden);
    w.str(d.activation);
    w.f64s(f.parameters());
}

DeformationField read_field(BinaryReader& r) {
    FieldDescriptor d;
    d.dim = r.i32();
    d.spatial_frequencies = r.i32();
    d.time_frequencies = r.i32();
    d.position_scale = r.f64();
    d.hidden = r.i32s();
    d.activation = r.str();
    auto params = r.f64s();
    try {
        return DeformationField(std::move(d), std::move(params));
    } catch (const Error& e) {
        fail(ErrorCode::Parse, std::string("invalid deformation field: ") + e.what());
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::Io, "cannot open '" + path + "' for reading");
    return std::string(std::istreambuf_iterator<char>(in), {});
}

void write_file(const std::string& path, std::string_view bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::Io, "cannot open '" + path + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorCode::Io, "write to '" + path + "' failed");
}

}  // namespace dgs
