// Copyright 2026 The dgslab Authors
// SPDX-License-Identifier: Apache-2.0

#include "dgslab/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dgslab/csv.hpp"
#include "dgslab/error.hpp"
#include "dgslab/regularizers.hpp"
#include "dgslab/stats.hpp"

namespace dgs {

std::string_view to_string(NeighborMode m) { return m == NeighborMode::Graph ? "graph" : "exhaustive"; }

NeighborMode neighbor_mode_from_string(std::string_view name) {
    if (name == "graph") return NeighborMode::Graph;
    if (name == "exhaustive") return NeighborMode::Exhaustive;
    fail(ErrorCode::Config, "unknown neighbor mode '" + std::string(name) + "'");
}

namespace {

std::vector<std::vector<std::size_t>> brute_force_neighbors(std::span<const double> x, std::size_t dim, std::size_t k) {
    const std::size_t n = x.size() / dim;
    std::vector<std::vector<std::size_t>> rows(n);
    std::vector<std::pair<double, std::size_t>> cand;
    for (std::size_t i = 0; i < n; ++i) {
        cand.clear();
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            double d2 = 0.0;
            for (std::size_t c = 0; c < dim; ++c) d2 += (x[i * dim + c] - x[j * dim + c]) * (x[i * dim + c] - x[j * dim + c]);
            cand.emplace_back(d2, j);
        }
        std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end());
        for (std::size_t m = 0; m < k; ++m) rows[i].push_back(cand[m].second);
    }
    return rows;
}

}  // namespace

StrainReport measure_strain(const GaussianCloud& cloud, const DeformationField& field,
                            std::span<const double> timesteps, NeighborMode mode, std::size_t k, double epsilon) {
    require(!timesteps.empty(), "measure_strain: timesteps must be nonempty");
    for (double t : timesteps) require(t >= 0.0 && t <= 1.0, "measure_strain: timesteps must lie in [0,1]");
    require(!cloud.empty(), "measure_strain: empty cloud");
    const std::size_t n = cloud.size();
    const std::size_t dim = static_cast<std::size_t>(cloud.dim);

    StrainReport r;
    r.timesteps.assign(timesteps.begin(), timesteps.end());
    NeighborGraph graph = build_neighbor_graph(cloud, k, epsilon);
    r.warnings = graph.warnings;
    r.k = graph.k;
    if (mode == NeighborMode::Exhaustive) graph.neighbors = brute_force_neighbors(cloud.positions, dim, graph.k);

    r.per_gaussian.assign(n, 0.0);
    if (r.k > 0) {
        const auto& x = cloud.positions;
        for (double t : timesteps) {
            const auto u = field.eval(cloud.positions, t).u;
            for (std::size_t i = 0; i < n; ++i) {
                double s = 0.0;
                for (std::size_t j : graph.neighbors[i]) {
                    double du2 = 0.0, dx2 = 0.0;
                    for (std::size_t c = 0; c < dim; ++c) {
                        const double du = u[i * dim + c] - u[j * dim + c];
                        const double dx = x[i * dim + c] - x[j * dim + c];
                        du2 += du * du;
                        dx2 += dx * dx;
                    }
                    s += du2 / std::max(dx2, epsilon);
                }
                r.per_gaussian[i] += s / static_cast<double>(r.k);
            }
        }
        for (double& v : r.per_gaussian) v /= static_cast<double>(timesteps.size());
    }

    std::vector<double> sorted = r.per_gaussian;
    std::sort(sorted.begin(), sorted.end());
    r.mean = mean(sorted);
    r.median = percentile_sorted(sorted, 0.5);
    r.p1 = percentile_sorted(sorted, 0.01);
    r.p99 = percentile_sorted(sorted, 0.99);
    r.min = sorted.front();
    r.max = sorted.back();
    return r;
}

StrainReport measure_strain(const Checkpoint& ckpt, std::span<const double> timesteps, NeighborMode mode,
                            std::size_t k, double epsilon) {
    StrainReport r = measure_strain(ckpt.cloud, ckpt.field, timesteps, mode, k, epsilon);
    r.checkpoint_id = "iter" + std::to_string(ckpt.iteration);
    return r;
}

StrainComparison strain_compare(const StrainReport& base, const StrainReport& reg) {
    StrainComparison c;
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    if (base.mean == 0.0) {
        c.defined = false;
        c.mean_reduction_pct = nan;
    } else {
        c.mean_reduction_pct = (1.0 - reg.mean / base.mean) * 100.0;
    }
    c.median_reduction_pct = base.median == 0.0 ? nan : (1.0 - reg.median / base.median) * 100.0;
    c.reg_median_below_base_p1 = reg.median < base.p1;
    c.reg_p99_below_base_median = reg.p99 < base.median;
    c.base_median_over_reg_p99 =
        reg.p99 == 0.0 ? (base.median == 0.0 ? nan : std::numeric_limits<double>::infinity()) : base.median / reg.p99;
    return c;
}

void write_strain_csv_header(std::ostream& os) { os << "scene,config,k,mean,median,p1,p99,min,max\n"; }

void write_strain_csv_row(std::ostream& os, std::string_view scene, std::string_view config, const StrainReport& r) {
    os << scene << ',' << config << ',' << r.k << ',' << fmt17(r.mean) << ',' << fmt17(r.median) << ','
       << fmt17(r.p1) << ',' << fmt17(r.p99) << ',' << fmt17(r.min) << ',' << fmt17(r.max) << '\n';
}

}  // namespace dgs
