// Copyright 2026 The dgslab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dgslab/cloud.hpp"
#include "dgslab/rng.hpp"

namespace dgs {

// Densification settings. Iteration fields are absolute iterations of the
// run they drive (the harness scales them before handing them over).
struct AdcConfig {
    std::uint64_t interval = 100;
    std::uint64_t window_start = 500;
    std::uint64_t window_end = 15000;
    double tau0 = 2e-4;
    double size_threshold = 0.05;   // world units; split above, clone at or below
    double prune_opacity = 0.005;
    double split_divisor = 1.6;     // phi
    double clone_offset = 0.5;      // in units of the parent's scale
    bool enable_split = true;
    bool enable_clone = true;
    bool enable_prune = true;
    bool enable_all = true;
    double gad_lambda = 0.0;
    double ema_rho = 0.99;
    double ema_floor = 1e-8;
    double growthcap_kmax = 0.0;     // 0 disables
    double growthcap_sharpness = 0.0;

    void validate() const;
    /// True when `iteration` is a scheduled densification step.
    bool scheduled(std::uint64_t iteration) const;
};

enum class AblationPreset { Baseline, A1, A2, A3, A4, A5, A6, A7, A8 };

std::string_view to_string(AblationPreset p);
AblationPreset ablation_from_string(std::string_view name);  // throws Config
AdcConfig apply_ablation(AdcConfig cfg, AblationPreset preset);

enum class AdcOp { Split, Clone, Prune, Warning };
std::string_view to_string(AdcOp op);

struct AdcEvent {
    std::uint64_t iteration = 0;
    AdcOp op = AdcOp::Split;
    std::uint64_t parent = 0;
    std::vector<std::uint64_t> children;
    double gbar = 0.0;
    double tau = 0.0;
};

struct AdcState {
    double delta_ema = 0.0;
    double prev_loss = 0.0;
    bool has_prev = false;

    std::vector<double> grad_sum;      // K, sum of per-view |dL/dmu|
    std::vector<std::uint32_t> grad_count;
    std::vector<double> pos_grad_sum;  // K*dim, for the clone direction
    std::vector<std::uint64_t> uid;
    std::uint64_t next_uid = 0;
    std::vector<AdcEvent> audit;

    /// Fresh state for a cloud of `k` Gaussians with uids 0..k-1.
    static AdcState for_cloud(std::size_t k, int dim, double ema_floor);

    std::size_t size() const { return grad_sum.size(); }
    double mean_gbar(std::size_t i) const { return grad_count[i] ? grad_sum[i] / grad_count[i] : 0.0; }
    void accumulate(std::span<const double> view_grad, std::span<const std::uint8_t> visible,
                    std::span<const double> position_grad);
    void reset_accumulators();
};

/// delta <- rho*delta + (1-rho)*max(prev - loss, 0), floored. The first call
/// only records the loss.
void ema_update(AdcState& state, double loss, double rho, double floor);

/// tau0 * (1 + lambda*K/(N*delta_ema)).
double gad_threshold(double tau0, double lambda, double k, double n_pixels, double delta_ema);

/// Sigmoid in K rescaled so K = 0 maps to 1. Sharpness 0 disables the cap.
double growthcap_factor(double k, double k_max, double sharpness);

struct AdcSummary {
    double tau = 0.0;
    std::size_t candidates = 0;
    std::size_t splits = 0;
    std::size_t clones = 0;
    std::size_t prunes = 0;
    bool kept_last = false;
    /// origin[n] = index before the step of the Gaussian new index n came from.
    std::vector<std::size_t> origin;
};

/// Split / clone / prune pass. Resets the accumulators and extends the audit
/// log; `n_pixels` is the total training pixel count used by GAD.
AdcSummary densify_and_prune(GaussianCloud& cloud, AdcState& state, const AdcConfig& cfg, std::uint64_t iteration,
                             double n_pixels, Rng& rng);

void write_audit_csv(std::ostream& os, std::span<const AdcEvent> events);

}  // namespace dgs
