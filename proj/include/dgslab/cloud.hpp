// Copyright 2026 The dgslab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace dgs {

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double logit(double p) { return std::log(p / (1.0 - p)); }

// Canonical (time-independent) isotropic Gaussians. Structure of arrays;
// positions are stored row-major, `dim` coordinates per Gaussian.
struct GaussianCloud {
    int dim = 2;
    std::vector<double> positions;
    std::vector<double> log_scales;
    std::vector<double> opacity_logits;
    std::vector<double> colors;
    std::vector<double> depth_keys;  // added to the projected depth when sorting

    std::size_t size() const { return log_scales.size(); }
    bool empty() const { return log_scales.empty(); }

    std::span<const double> position(std::size_t i) const {
        return {positions.data() + i * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
    }
    std::span<double> position(std::size_t i) {
        return {positions.data() + i * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
    }
    double scale(std::size_t i) const { return std::exp(log_scales[i]); }
    double opacity(std::size_t i) const { return logistic(opacity_logits[i]); }

    void resize(std::size_t k);
    void push_back_copy(const GaussianCloud& src, std::size_t i);
    GaussianCloud select(std::span<const std::size_t> indices) const;

    /// Throws a contract error when array lengths disagree or a value leaves
    /// its domain (K >= 1, finite, colors in [0,1]).
    void validate() const;

    bool operator==(const GaussianCloud&) const = default;
};

}  // namespace dgs
