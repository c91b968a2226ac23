// Copyright 2026 The dgslab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dgslab/rng.hpp"

namespace dgs {

// Architecture of the time-conditioned displacement map:
//   (x, t) -> Fourier features -> tanh hidden layers -> linear head -> u.
// The last hidden activation is the embedding h.
struct FieldDescriptor {
    int dim = 2;
    int spatial_frequencies = 4;
    int time_frequencies = 2;
    double position_scale = 1.0;
    std::vector<int> hidden{32, 16};
    std::string activation = "tanh";

    int input_width() const { return dim + 1 + 2 * spatial_frequencies * dim + 2 * time_frequencies; }
    int embed_width() const { return hidden.empty() ? 0 : hidden.back(); }
    std::vector<int> layer_widths() const;
    std::size_t parameter_count() const;
    void validate() const;

    bool operator==(const FieldDescriptor&) const = default;
};

struct FieldOutput {
    std::vector<double> u;  // rows * dim
    std::vector<double> h;  // rows * embed_width
};

class DeformationField {
public:
    // Activations kept by forward() for backward().
    struct Tape {
        std::size_t rows = 0;
        std::vector<std::vector<double>> acts;  // acts[0] = features, acts[l] = hidden layer l
    };

    DeformationField() = default;
    DeformationField(FieldDescriptor desc, std::vector<double> params);

    static DeformationField zeros(const FieldDescriptor& desc);
    /// Xavier-uniform hidden layers, zero output layer (u == 0 everywhere).
    static DeformationField initialize(const FieldDescriptor& desc, Rng& rng);

    const FieldDescriptor& descriptor() const { return desc_; }
    std::span<const double> parameters() const { return params_; }
    std::span<double> parameters() { return params_; }
    std::size_t parameter_count() const { return params_.size(); }

    /// deform_eval: u and h for every position at time t.
    FieldOutput eval(std::span<const double> positions, double t) const;
    FieldOutput forward(std::span<const double> positions, double t, Tape& tape) const;

    // Accumulates dL/dparams into `param_grad` given upstream dL/du and
    // (optionally, may be empty) dL/dh. When `pos_grad` is non-empty, dL/dx
    // through the Fourier features is accumulated into it as well. Rows with
    // all-zero upstream are skipped.
    void backward(const Tape& tape, std::span<const double> positions, double t, std::span<const double> g_u,
                  std::span<const double> g_h, std::span<double> param_grad, std::span<double> pos_grad) const;

    void features(std::span<const double> x, double t, std::span<double> out) const;
    void check_finite() const;

    bool operator==(const DeformationField&) const = default;

private:
    FieldDescriptor desc_;
    std::vector<double> params_;
};

}  // namespace dgs
