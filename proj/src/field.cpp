// Copyright 2026 The dgslab Authors
// SPDX-License-Identifier: Apache-2.0

#include "dgslab/field.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dgslab/error.hpp"

namespace dgs {

std::vector<int> FieldDescriptor::layer_widths() const {
    std::vector<int> w;
    w.push_back(input_width());
    w.insert(w.end(), hidden.begin(), hidden.end());
    w.push_back(dim);
    return w;
}

std::size_t FieldDescriptor::parameter_count() const {
    const auto w = layer_widths();
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < w.size(); ++l) n += static_cast<std::size_t>(w[l + 1]) * (w[l] + 1);
    return n;
}

void FieldDescriptor::validate() const {
    if (dim < 1 || dim > 3) fail(ErrorCode::Config, "field: dim must be 1..3");
    if (spatial_frequencies < 0 || time_frequencies < 0) fail(ErrorCode::Config, "field: negative frequency count");
    if (spatial_frequencies > 16 || time_frequencies > 16) fail(ErrorCode::Config, "field: too many frequencies");
    if (!(position_scale > 0.0) || !std::isfinite(position_scale)) fail(ErrorCode::Config, "field: position_scale must be > 0");
    if (hidden.empty()) fail(ErrorCode::Config, "field: at least one hidden layer is required");
    for (int h : hidden)
        if (h < 1) fail(ErrorCode::Config, "field: hidden widths must be >= 1");
    if (activation != "tanh") fail(ErrorCode::Config, "field: unsupported activation '" + activation + "'");
}

DeformationField::DeformationField(FieldDescriptor desc, std::vector<double> params)
    : desc_(std::move(desc)), params_(std::move(params)) {
    desc_.validate();
    if (params_.size() != desc_.parameter_count())
        fail(ErrorCode::CorruptModel, "field: parameter count does not match descriptor");
}

DeformationField DeformationField::zeros(const FieldDescriptor& desc) {
    desc.validate();
    return DeformationField(desc, std::vector<double>(desc.parameter_count(), 0.0));
}

DeformationField DeformationField::initialize(const FieldDescriptor& desc, Rng& rng) {
    DeformationField f = zeros(desc);
    const auto w = desc.layer_widths();
    std::size_t off = 0;
    for (std::size_t l = 0; l + 1 < w.size(); ++l) {
        const std::size_t in = w[l], out = w[l + 1];
        const bool head = l + 2 == w.size();
        const double a = std::sqrt(6.0 / static_cast<double>(in + out));
        for (std::size_t i = 0; i < in * out; ++i) f.params_[off + i] = head ? 0.0 : rng.uniform(-a, a);
        off += in * out + out;
    }
    return f;
}

void DeformationField::check_finite() const {
    for (double p : params_)
        if (!std::isfinite(p)) fail(ErrorCode::CorruptModel, "deformation field has a non-finite parameter");
}

void DeformationField::features(std::span<const double> x, double t, std::span<double> out) const {
    const int d = desc_.dim;
    std::size_t o = 0;
    for (int k = 0; k < d; ++k) out[o++] = desc_.position_scale * x[k];
    out[o++] = t;
    for (int k = 0; k < d; ++k) {
        const double xs = desc_.position_scale * x[k];
        double w = std::numbers::pi;
        for (int l = 0; l < desc_.spatial_frequencies; ++l, w *= 2.0) {
            out[o++] = std::sin(w * xs);
            out[o++] = std::cos(w * xs);
        }
    }
    double w = std::numbers::pi;
    for (int l = 0; l < desc_.time_frequencies; ++l, w *= 2.0) {
        out[o++] = std::sin(w * t);
        out[o++] = std::cos(w * t);
    }
}

FieldOutput DeformationField::eval(std::span<const double> positions, double t) const {
    Tape tape;
    return forward(positions, t, tape);
}

FieldOutput DeformationField::forward(std::span<const double> positions, double t, Tape& tape) const {
    require(t >= 0.0 && t <= 1.0 && std::isfinite(t), "deform_eval: t must lie in [0,1]");
    const std::size_t d = static_cast<std::size_t>(desc_.dim);
    require(positions.size() % d == 0, "deform_eval: position array is not a multiple of dim");
    for (double v : positions) require(std::isfinite(v), "deform_eval: non-finite position");
    check_finite();

    const std::size_t rows = positions.size() / d;
    const auto w = desc_.layer_widths();
    const std::size_t layers = w.size() - 1;
    tape.rows = rows;
    tape.acts.assign(layers, {});
    for (std::size_t l = 0; l < layers; ++l) tape.acts[l].resize(rows * w[l]);

    FieldOutput out;
    out.u.assign(rows * d, 0.0);
    const std::size_t e = static_cast<std::size_t>(desc_.embed_width());
    out.h.resize(rows * e);

    std::vector<double> z;
    for (std::size_t r = 0; r < rows; ++r) {
        features(positions.subspan(r * d, d), t, std::span<double>(tape.acts[0]).subspan(r * w[0], w[0]));
        std::size_t off = 0;
        for (std::size_t l = 0; l < layers; ++l) {
            const std::size_t in = w[l], nout = w[l + 1];
            const double* a = tape.acts[l].data() + r * in;
            const double* W = params_.data() + off;
            const double* b = W + in * nout;
            const bool head = l + 1 == layers;
            double* dst = head ? out.u.data() + r * d : tape.acts[l + 1].data() + r * nout;
            for (std::size_t i = 0; i < nout; ++i) {
                double s = b[i];
                const double* wi = W + i * in;
                for (std::size_t j = 0; j < in; ++j) s += wi[j] * a[j];
                dst[i] = head ? s : std::tanh(s);
            }
            off += in * nout + nout;
        }
        std::copy_n(tape.acts[layers - 1].data() + r * e, e, out.h.data() + r * e);
    }
    for (double v : out.u)
        if (!std::isfinite(v)) fail(ErrorCode::CorruptModel, "deformation field produced a non-finite displacement");
    return out;
}

void DeformationField::backward(const Tape& tape, std::span<const double> positions, double t,
                                std::span<const double> g_u, std::span<const double> g_h,
                                std::span<double> param_grad, std::span<double> pos_grad) const {
    (void)t;
    const std::size_t d = static_cast<std::size_t>(desc_.dim);
    const std::size_t e = static_cast<std::size_t>(desc_.embed_width());
    const std::size_t rows = tape.rows;
    require(g_u.size() == rows * d, "field backward: g_u has wrong length");
    require(g_h.empty() || g_h.size() == rows * e, "field backward: g_h has wrong length");
    require(param_grad.size() == params_.size(), "field backward: param_grad has wrong length");
    require(pos_grad.empty() || pos_grad.size() == rows * d, "field backward: pos_grad has wrong length");

    const auto w = desc_.layer_widths();
    const std::size_t layers = w.size() - 1;
    std::vector<std::size_t> offsets(layers);
    {
        std::size_t off = 0;
        for (std::size_t l = 0; l < layers; ++l) {
            offsets[l] = off;
            off += static_cast<std::size_t>(w[l]) * w[l + 1] + w[l + 1];
        }
    }
    const int widest = *std::max_element(w.begin(), w.end());
    std::vector<double> dz(widest), da(widest);

    for (std::size_t r = 0; r < rows; ++r) {
        bool any = false;
        for (std::size_t k = 0; k < d && !any; ++k) any = g_u[r * d + k] != 0.0;
        for (std::size_t k = 0; k < e && !g_h.empty() && !any; ++k) any = g_h[r * e + k] != 0.0;
        if (!any) continue;

        std::copy_n(g_u.data() + r * d, d, dz.data());
        for (std::size_t l = layers; l-- > 0;) {
            const std::size_t in = w[l], nout = w[l + 1];
            const double* a = tape.acts[l].data() + r * in;
            const double* W = params_.data() + offsets[l];
            double* gW = param_grad.data() + offsets[l];
            double* gb = gW + in * nout;
            for (std::size_t i = 0; i < nout; ++i) {
                const double g = dz[i];
                if (g == 0.0) continue;
                double* gwi = gW + i * in;
                for (std::size_t j = 0; j < in; ++j) gwi[j] += g * a[j];
                gb[i] += g;
            }
            if (l == 0 && pos_grad.empty()) break;
            std::fill_n(da.data(), in, 0.0);
            for (std::size_t i = 0; i < nout; ++i) {
                const double g = dz[i];
                if (g == 0.0) continue;
                const double* wi = W + i * in;
                for (std::size_t j = 0; j < in; ++j) da[j] += wi[j] * g;
            }
            if (l == 0) break;
            if (l + 1 == layers && !g_h.empty())
                for (std::size_t j = 0; j < in; ++j) da[j] += g_h[r * e + j];
            for (std::size_t j = 0; j < in; ++j) dz[j] = da[j] * (1.0 - a[j] * a[j]);
        }
        if (pos_grad.empty()) continue;

        // da now holds dL/dfeatures; chain through the encoding.
        const double s = desc_.position_scale;
        for (std::size_t k = 0; k < d; ++k) pos_grad[r * d + k] += da[k] * s;
        std::size_t o = d + 1;
        for (std::size_t k = 0; k < d; ++k) {
            const double xs = s * positions[r * d + k];
            double wf = std::numbers::pi;
            double acc = 0.0;
            for (int l = 0; l < desc_.spatial_frequencies; ++l, wf *= 2.0) {
                acc += da[o++] * wf * std::cos(wf * xs);
                acc -= da[o++] * wf * std::sin(wf * xs);
            }
            pos_grad[r * d + k] += acc * s;
        }
    }
}

}  // namespace dgs
