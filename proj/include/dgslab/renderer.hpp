// Copyright 2026 The dgslab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dgslab/cloud.hpp"
#include "dgslab/field.hpp"

namespace dgs {

inline constexpr double kAlphaMax = 0.999;
inline constexpr double kSigmaMin = 1e-4;    // world units
inline constexpr double kTruncation = 3.0;   // support radius in sigmas

// Orthographic camera looking along (cos a, sin a) in the xy-plane; the 1D
// image axis is (-sin a, cos a). Pixel p samples image coordinate
// (p + 0.5 - W/2) * pixel_extent.
struct Camera {
    double angle = 0.0;
    int width = 64;
    double pixel_extent = 0.05;
    double background = 0.0;

    double pixel_center(int p) const { return (p + 0.5 - 0.5 * width) * pixel_extent; }
    void validate() const;
};

using Image = std::vector<double>;

// Optional per-Gaussian dropout: dropped Gaussians are skipped entirely,
// kept ones have their opacity multiplied by `opacity_scale` (may be empty).
struct DropMask {
    std::vector<std::uint8_t> keep;
    std::vector<double> opacity_scale;
};

struct RenderGrads {
    std::vector<double> positions;       // K*dim
    std::vector<double> log_scales;      // K
    std::vector<double> opacity_logits;  // K
    std::vector<double> colors;          // K
    std::vector<double> displacement;    // K*dim, dL/du
    std::vector<double> view_grad;       // K, |dL/dmu| of this view, pixel units
    std::vector<std::uint8_t> visible;   // K, Gaussian touched at least one pixel
    std::vector<double> field_params;    // only filled by the field overload
};

/// Composite the cloud displaced by `displacement` (K*dim, or empty for none).
Image render_forward(const GaussianCloud& cloud, std::span<const double> displacement, const Camera& cam,
                     const DropMask* mask = nullptr);
Image render_forward(const GaussianCloud& cloud, const DeformationField& field, const Camera& cam, double t,
                     const DropMask* mask = nullptr);

RenderGrads render_backward(const GaussianCloud& cloud, std::span<const double> displacement, const Camera& cam,
                            const DropMask* mask, std::span<const double> loss_grad);
/// Also back-propagates through the field: fills field_params and adds the
/// field's input Jacobian term to the position gradient.
RenderGrads render_backward(const GaussianCloud& cloud, const DeformationField& field, const Camera& cam, double t,
                            const DropMask* mask, std::span<const double> loss_grad);

/// 10*log10(peak^2 / MSE); +infinity when the images are identical.
double image_psnr(std::span<const double> a, std::span<const double> b, double peak = 1.0);

}  // namespace dgs
