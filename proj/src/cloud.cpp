// Copyright 2026 The dgslab Authors
// SPDX-License-Identifier: Apache-2.0

#include "dgslab/cloud.hpp"

#include <string>

#include "dgslab/error.hpp"

namespace dgs {

void GaussianCloud::resize(std::size_t k) {
    positions.resize(k * static_cast<std::size_t>(dim), 0.0);
    log_scales.resize(k, 0.0);
    opacity_logits.resize(k, 0.0);
    colors.resize(k, 0.0);
    depth_keys.resize(k, 0.0);
}

void GaussianCloud::push_back_copy(const GaussianCloud& src, std::size_t i) {
    const auto p = src.position(i);
    positions.insert(positions.end(), p.begin(), p.end());
    log_scales.push_back(src.log_scales[i]);
    opacity_logits.push_back(src.opacity_logits[i]);
    colors.push_back(src.colors[i]);
    depth_keys.push_back(src.depth_keys[i]);
}

GaussianCloud GaussianCloud::select(std::span<const std::size_t> indices) const {
    GaussianCloud out;
    out.dim = dim;
    for (std::size_t i : indices) out.push_back_copy(*this, i);
    return out;
}

void GaussianCloud::validate() const {
    require(dim >= 1 && dim <= 3, "GaussianCloud: dim must be 1, 2 or 3");
    const std::size_t k = size();
    require(k >= 1, "GaussianCloud: K must be >= 1");
    require(positions.size() == k * static_cast<std::size_t>(dim) && opacity_logits.size() == k &&
                colors.size() == k && depth_keys.size() == k,
            "GaussianCloud: array lengths differ");
    for (double v : positions) require(std::isfinite(v), "GaussianCloud: non-finite position");
    for (std::size_t i = 0; i < k; ++i) {
        require(std::isfinite(log_scales[i]) && scale(i) > 0.0, "GaussianCloud: invalid scale at " + std::to_string(i));
        require(std::isfinite(opacity_logits[i]), "GaussianCloud: non-finite opacity logit");
        require(colors[i] >= 0.0 && colors[i] <= 1.0, "GaussianCloud: color outside [0,1]");
        require(std::isfinite(depth_keys[i]), "GaussianCloud: non-finite depth key");
    }
}

}  // namespace dgs
