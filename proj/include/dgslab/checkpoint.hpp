// Copyright 2026 The dgslab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>

#include "dgslab/cloud.hpp"
#include "dgslab/container.hpp"
#include "dgslab/field.hpp"

namespace dgs {

struct Checkpoint {
    std::uint32_t version = kFormatVersion;
    GaussianCloud cloud;
    DeformationField field;
    std::uint64_t iteration = 0;
    std::string rng_state;
    std::string config_json;  // full experiment config, serialized

    bool operator==(const Checkpoint&) const = default;
};

std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::string_view bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

/// Save then load. Used by tests and the CLI to prove the file is faithful.
Checkpoint checkpoint_roundtrip(const Checkpoint& ckpt, const std::string& path);

/// Bitwise equality of every floating payload (distinguishes -0.0 from 0.0).
bool bit_identical(const Checkpoint& a, const Checkpoint& b);

}  // namespace dgs
