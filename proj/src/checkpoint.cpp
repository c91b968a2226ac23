// Copyright 2026 The dgslab Authors
// SPDX-License-Identifier: Apache-2.0

#include "dgslab/checkpoint.hpp"

#include "dgslab/error.hpp"

namespace dgs {

std::string encode_checkpoint(const Checkpoint& ckpt) {
    BinaryWriter w;
    w.header(PayloadKind::Checkpoint, ckpt.version);
    w.u64(ckpt.iteration);
    write_cloud(w, ckpt.cloud);
    write_field(w, ckpt.field);
    w.str(ckpt.rng_state);
    w.str(ckpt.config_json);
    return w.bytes();
}

Checkpoint decode_checkpoint(std::string_view bytes) {
    BinaryReader r(bytes);
    r.header(PayloadKind::Checkpoint);
    Checkpoint c;
    c.version = kFormatVersion;
    c.iteration = r.u64();
    c.cloud = read_cloud(r);
    c.field = read_field(r);
    c.rng_state = r.str();
    c.config_json = r.str();
    if (!r.at_end()) fail(ErrorCode::Parse, "trailing bytes after checkpoint payload");
    return c;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) { write_file(path, encode_checkpoint(ckpt)); }

Checkpoint load_checkpoint(const std::string& path) { return decode_checkpoint(read_file(path)); }

Checkpoint checkpoint_roundtrip(const Checkpoint& ckpt, const std::string& path) {
    save_checkpoint(ckpt, path);
    return load_checkpoint(path);
}

bool bit_identical(const Checkpoint& a, const Checkpoint& b) { return encode_checkpoint(a) == encode_checkpoint(b); }

}  // namespace dgs
