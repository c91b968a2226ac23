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
#include "dgslab/renderer.hpp"
#include "dgslab/rng.hpp"

namespace dgs {

inline constexpr double kDefaultEpsilon = 1e-8;  // world units^2

enum class SmoothnessVariant { Off, Strain, OnEmbed, Arap, NoNorm };

std::string_view to_string(SmoothnessVariant v);
SmoothnessVariant smoothness_variant_from_string(std::string_view name);  // throws Config

// k nearest neighbors of every Gaussian in canonical space.
struct NeighborGraph {
    std::size_t k = 0;
    std::vector<std::vector<std::size_t>> neighbors;
    std::vector<std::vector<double>> sq_dist;  // floored at epsilon
    std::uint64_t build_iteration = 0;
    std::uint64_t rebuild_interval = 500;
    std::vector<std::string> warnings;

    std::size_t size() const { return neighbors.size(); }
    bool stale(std::uint64_t iteration) const { return iteration >= build_iteration + rebuild_interval; }
};

/// Exact k-NN (ties broken by lower index) via a k-d tree. When K <= k the
/// neighborhood shrinks to K-1 and a warning is recorded.
NeighborGraph build_neighbor_graph(std::span<const double> positions, int dim, std::size_t k,
                                   double epsilon = kDefaultEpsilon);
NeighborGraph build_neighbor_graph(const GaussianCloud& cloud, std::size_t k, double epsilon = kDefaultEpsilon);

/// Carries rows across a densify/prune step without rebuilding: new Gaussian
/// n inherits the row of origin[n]; neighbors that no longer exist are
/// dropped, survivors are renumbered.
void remap_neighbor_graph(NeighborGraph& graph, std::span<const std::size_t> origin);

/// Half-cosine ramp from 0 at `start` to `lambda` at `end`.
double warmup_weight(double iteration, double start, double end, double lambda);

struct SmoothnessResult {
    double loss = 0.0;
    std::vector<double> grad_u;  // K*dim (empty for Off)
    std::vector<double> grad_h;  // K*embed (only for OnEmbed)
};

// loss = lambda_eff / (|sample| * k) * sum_{i in sample} sum_{j in N(i)} q_ij
//   strain   : |u_i - u_j|^2 / (|x_i - x_j|^2 + eps)
//   on_embed : |h_i - h_j|^2 / (|x_i - x_j|^2 + eps)
//   arap     : |R_i (x_j - x_i) - ((x_j + u_j) - (x_i + u_i))|^2 / (|x_i - x_j|^2 + eps)
//   no_norm  : |u_i - u_j|^2
// Canonical positions are constants; gradients flow to u (and h).
SmoothnessResult smoothness_loss(SmoothnessVariant variant, const GaussianCloud& cloud, std::span<const double> u,
                                 std::span<const double> h, int embed_width, const NeighborGraph& graph,
                                 std::span<const std::size_t> sample, double lambda_eff,
                                 double epsilon = kDefaultEpsilon);

struct Rotation {
    int dim = 2;
    std::vector<double> m;  // row-major dim x dim
    bool degenerate = false;

    void apply(const double* v, double* out) const;
};

/// Proper rotation minimizing sum_j w_j |R a_j - b_j|^2 (w_j = 1 when
/// `weights` is empty). Offsets are row-major, `dim` per pair.
Rotation kabsch_rotation(std::span<const double> a, std::span<const double> b, int dim,
                         std::span<const double> weights = {});

/// Uniform sample of min(n, k) distinct indices, returned sorted.
std::vector<std::size_t> draw_sample(std::size_t k, std::size_t n, Rng& rng);

// Streaming per-Gaussian variance of u(x_i, t) across timesteps (Welford).
// variance(i) is the trace of the population covariance; it is 0 until two
// samples have been seen.
struct JitterEstimate {
    int dim = 2;
    std::vector<std::uint64_t> count;
    std::vector<double> mean;
    std::vector<double> m2;

    std::size_t size() const { return count.size(); }
    void reset(std::size_t k, int dimension);
    double variance(std::size_t i) const;
    /// Children inherit their parent's estimate.
    void remap(std::span<const std::size_t> origin);
};

void update_jitter(JitterEstimate& est, std::span<const double> u);

struct PtDropSettings {
    bool enabled = false;
    double p_max = 0.3;
    double start = 5000.0;  // iterations (already scaled by the caller)
    double end = 12000.0;
    bool jitter_weighting = true;
};

/// Cosine ramp 0 -> p_max over [start, end].
double ptdrop_rate(double iteration, double start, double end, double p_max);
std::vector<double> ptdrop_probabilities(double iteration, const JitterEstimate& jitter, const PtDropSettings& s);
DropMask ptdrop_mask(double iteration, std::size_t k, const JitterEstimate& jitter, const PtDropSettings& s, Rng& rng);

}  // namespace dgs
