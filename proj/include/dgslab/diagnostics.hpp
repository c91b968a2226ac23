// Copyright 2026 The dgslab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dgslab/checkpoint.hpp"

namespace dgs {

inline constexpr double kStrainTimesteps[] = {0.1, 0.35, 0.65, 0.9};

// Graph mode reads neighbors from the k-d tree graph; exhaustive mode finds
// them by brute force. Both select the exact k nearest, so they agree.
enum class NeighborMode { Graph, Exhaustive };
std::string_view to_string(NeighborMode m);
NeighborMode neighbor_mode_from_string(std::string_view name);  // throws Config

struct StrainReport {
    std::string checkpoint_id;
    std::vector<double> timesteps;
    std::size_t k = 0;
    std::vector<double> per_gaussian;  // mean strain over timesteps
    double mean = 0.0;
    double median = 0.0;
    double p1 = 0.0;
    double p99 = 0.0;
    double min = 0.0;
    double max = 0.0;
    std::vector<std::string> warnings;
};

/// Per-Gaussian mean of (1/k) sum_j |u_i - u_j|^2 / max(|x_i - x_j|^2, eps)
/// over the requested timesteps.
StrainReport measure_strain(const GaussianCloud& cloud, const DeformationField& field,
                            std::span<const double> timesteps, NeighborMode mode = NeighborMode::Graph,
                            std::size_t k = 8, double epsilon = 1e-8);
StrainReport measure_strain(const Checkpoint& ckpt, std::span<const double> timesteps,
                            NeighborMode mode = NeighborMode::Graph, std::size_t k = 8, double epsilon = 1e-8);

struct StrainComparison {
    bool defined = true;              // false when base.mean == 0
    double mean_reduction_pct = 0.0;  // (1 - reg.mean/base.mean) * 100
    double median_reduction_pct = 0.0;
    bool reg_median_below_base_p1 = false;
    bool reg_p99_below_base_median = false;
    double base_median_over_reg_p99 = 0.0;
};

StrainComparison strain_compare(const StrainReport& base, const StrainReport& reg);

void write_strain_csv_header(std::ostream& os);
void write_strain_csv_row(std::ostream& os, std::string_view scene, std::string_view config, const StrainReport& r);

}  // namespace dgs
