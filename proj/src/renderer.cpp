// Copyright 2026 The dgslab Authors
// SPDX-License-Identifier: Apache-2.0

#include "dgslab/renderer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dgslab/error.hpp"

namespace dgs {

void Camera::validate() const {
    require(width >= 1, "Camera: width must be >= 1");
    require(pixel_extent > 0.0 && std::isfinite(pixel_extent), "Camera: pixel extent must be > 0");
    require(std::isfinite(angle) && std::isfinite(background), "Camera: non-finite angle or background");
}

namespace {

struct Splat {
    std::size_t idx;
    double depth;
    double mean;     // image coordinate, world units
    double sigma;
    bool sigma_clamped;
    double opacity;  // logistic(logit) * drop scale
    double color;
    int lo, hi;      // inclusive pixel range inside the truncated support
};

// One (Gaussian, pixel) term of the composite, recorded for the backward pass.
struct Fragment {
    int pixel;
    double alpha;
    double gauss;
    double trans_before;
    double color_before;
    bool clamped;
};

struct Composite {
    Image image;
    std::vector<Splat> splats;                   // depth order
    std::vector<std::vector<Fragment>> frags;    // parallel to splats
};

void axes(int dim, double angle, double* view, double* img) {
    view[0] = std::cos(angle);
    view[1] = std::sin(angle);
    img[0] = -std::sin(angle);
    img[1] = std::cos(angle);
    if (dim == 3) view[2] = img[2] = 0.0;
}

void check_inputs(const GaussianCloud& cloud, std::span<const double> displacement, const Camera& cam,
                  const DropMask* mask) {
    cam.validate();
    require(cloud.dim == 2 || cloud.dim == 3, "render: cloud dim must be 2 or 3");
    const std::size_t k = cloud.size();
    require(cloud.positions.size() == k * static_cast<std::size_t>(cloud.dim), "render: malformed cloud");
    require(displacement.empty() || displacement.size() == cloud.positions.size(),
            "render: displacement length must be K*dim");
    if (mask) {
        require(mask->keep.size() == k, "render: drop mask length must equal K");
        require(mask->opacity_scale.empty() || mask->opacity_scale.size() == k,
                "render: opacity scale length must equal K");
    }
}

Composite composite(const GaussianCloud& cloud, std::span<const double> displacement, const Camera& cam,
                    const DropMask* mask, bool record) {
    check_inputs(cloud, displacement, cam, mask);
    const int dim = cloud.dim;
    double view[3], img[3];
    axes(dim, cam.angle, view, img);

    Composite out;
    out.splats.reserve(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        if (mask && !mask->keep[i]) continue;
        double mean = 0.0, depth = cloud.depth_keys[i];
        for (int c = 0; c < dim; ++c) {
            const double p = cloud.positions[i * dim + c] + (displacement.empty() ? 0.0 : displacement[i * dim + c]);
            mean += p * img[c];
            depth += p * view[c];
        }
        double sigma = std::exp(cloud.log_scales[i]);
        const bool clamped = !(sigma >= kSigmaMin);
        if (clamped) sigma = kSigmaMin;
        double opacity = logistic(cloud.opacity_logits[i]);
        if (mask && !mask->opacity_scale.empty()) opacity *= mask->opacity_scale[i];
        const double reach = kTruncation * sigma;
        const double half = 0.5 * cam.width;
        const double lo = std::ceil((mean - reach) / cam.pixel_extent + half - 0.5);
        const double hi = std::floor((mean + reach) / cam.pixel_extent + half - 0.5);
        const double last = static_cast<double>(cam.width - 1);
        const int plo = static_cast<int>(std::clamp(lo - 1.0, 0.0, last + 1.0));
        const int phi = static_cast<int>(std::clamp(hi + 1.0, -1.0, last));
        out.splats.push_back({i, depth, mean, sigma, clamped, opacity, cloud.colors[i], plo, phi});
    }
    std::stable_sort(out.splats.begin(), out.splats.end(),
                     [](const Splat& a, const Splat& b) { return a.depth < b.depth; });

    const std::size_t w = static_cast<std::size_t>(cam.width);
    std::vector<double> trans(w, 1.0);
    out.image.assign(w, 0.0);
    if (record) out.frags.resize(out.splats.size());
    for (std::size_t s = 0; s < out.splats.size(); ++s) {
        const Splat& sp = out.splats[s];
        const double reach = kTruncation * sp.sigma;
        for (int p = sp.lo; p <= sp.hi; ++p) {
            const double dx = cam.pixel_center(p) - sp.mean;
            if (std::abs(dx) > reach) continue;
            const double g = std::exp(-dx * dx / (2.0 * sp.sigma * sp.sigma));
            double a = sp.opacity * g;
            const bool clamped = a > kAlphaMax;
            if (clamped) a = kAlphaMax;
            if (record) out.frags[s].push_back({p, a, g, trans[p], out.image[p], clamped});
            out.image[p] += sp.color * a * trans[p];
            trans[p] *= 1.0 - a;
        }
    }
    for (std::size_t p = 0; p < w; ++p) out.image[p] += cam.background * trans[p];
    return out;
}

}  // namespace

Image render_forward(const GaussianCloud& cloud, std::span<const double> displacement, const Camera& cam,
                     const DropMask* mask) {
    return composite(cloud, displacement, cam, mask, false).image;
}

Image render_forward(const GaussianCloud& cloud, const DeformationField& field, const Camera& cam, double t,
                     const DropMask* mask) {
    const FieldOutput fo = field.eval(cloud.positions, t);
    return render_forward(cloud, fo.u, cam, mask);
}

RenderGrads render_backward(const GaussianCloud& cloud, std::span<const double> displacement, const Camera& cam,
                            const DropMask* mask, std::span<const double> loss_grad) {
    require(loss_grad.size() == static_cast<std::size_t>(cam.width), "render_backward: loss_grad length must equal W");
    for (double g : loss_grad) require(std::isfinite(g), "render_backward: non-finite loss gradient");
    const Composite comp = composite(cloud, displacement, cam, mask, true);

    const std::size_t k = cloud.size();
    const int dim = cloud.dim;
    double view[3], img[3];
    axes(dim, cam.angle, view, img);

    RenderGrads g;
    g.positions.assign(k * dim, 0.0);
    g.log_scales.assign(k, 0.0);
    g.opacity_logits.assign(k, 0.0);
    g.colors.assign(k, 0.0);
    g.displacement.assign(k * dim, 0.0);
    g.view_grad.assign(k, 0.0);
    g.visible.assign(k, 0);

    for (std::size_t s = 0; s < comp.splats.size(); ++s) {
        const Splat& sp = comp.splats[s];
        const auto& frags = comp.frags[s];
        if (frags.empty()) continue;
        const std::size_t i = sp.idx;
        g.visible[i] = 1;
        const double base_opacity = logistic(cloud.opacity_logits[i]);
        const double drop_scale = (mask && !mask->opacity_scale.empty()) ? mask->opacity_scale[i] : 1.0;
        double d_color = 0.0, d_mean = 0.0, d_sigma = 0.0, d_opacity = 0.0;
        for (const Fragment& f : frags) {
            const double dl = loss_grad[f.pixel];
            if (dl == 0.0) continue;
            const double contrib = sp.color * f.alpha * f.trans_before;
            const double after = comp.image[f.pixel] - f.color_before - contrib;
            d_color += dl * f.alpha * f.trans_before;
            if (f.clamped) continue;
            const double d_alpha = dl * (sp.color * f.trans_before - after / (1.0 - f.alpha));
            const double dx = cam.pixel_center(f.pixel) - sp.mean;
            d_opacity += d_alpha * f.gauss;
            const double d_gauss = d_alpha * sp.opacity;
            d_mean += d_gauss * f.gauss * dx / (sp.sigma * sp.sigma);
            d_sigma += d_gauss * f.gauss * dx * dx / (sp.sigma * sp.sigma * sp.sigma);
        }
        g.colors[i] = d_color;
        g.opacity_logits[i] = d_opacity * drop_scale * base_opacity * (1.0 - base_opacity);
        g.log_scales[i] = sp.sigma_clamped ? 0.0 : d_sigma * sp.sigma;
        for (int c = 0; c < dim; ++c) {
            g.positions[i * dim + c] = d_mean * img[c];
            g.displacement[i * dim + c] = d_mean * img[c];
        }
        g.view_grad[i] = std::abs(d_mean) * cam.pixel_extent;
    }
    return g;
}

RenderGrads render_backward(const GaussianCloud& cloud, const DeformationField& field, const Camera& cam, double t,
                            const DropMask* mask, std::span<const double> loss_grad) {
    DeformationField::Tape tape;
    const FieldOutput fo = field.forward(cloud.positions, t, tape);
    RenderGrads g = render_backward(cloud, fo.u, cam, mask, loss_grad);
    g.field_params.assign(field.parameter_count(), 0.0);
    field.backward(tape, cloud.positions, t, g.displacement, {}, g.field_params, g.positions);
    return g;
}

double image_psnr(std::span<const double> a, std::span<const double> b, double peak) {
    require(a.size() == b.size(), "image_psnr: image lengths differ");
    require(!a.empty(), "image_psnr: empty image");
    require(peak > 0.0, "image_psnr: peak must be > 0");
    double mse = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) mse += (a[i] - b[i]) * (a[i] - b[i]);
    mse /= static_cast<double>(a.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak * peak / mse);
}

}  // namespace dgs
