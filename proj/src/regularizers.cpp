// Copyright 2026 The dgslab Authors
// SPDX-License-Identifier: Apache-2.0

#include "dgslab/regularizers.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "dgslab/error.hpp"
#include "dgslab/kdtree.hpp"

namespace dgs {

std::string_view to_string(SmoothnessVariant v) {
    switch (v) {
        case SmoothnessVariant::Off: return "off";
        case SmoothnessVariant::Strain: return "strain";
        case SmoothnessVariant::OnEmbed: return "on_embed";
        case SmoothnessVariant::Arap: return "arap";
        case SmoothnessVariant::NoNorm: return "no_norm";
    }
    return "unknown";
}

SmoothnessVariant smoothness_variant_from_string(std::string_view name) {
    if (name == "off") return SmoothnessVariant::Off;
    if (name == "strain") return SmoothnessVariant::Strain;
    if (name == "on_embed") return SmoothnessVariant::OnEmbed;
    if (name == "arap") return SmoothnessVariant::Arap;
    if (name == "no_norm") return SmoothnessVariant::NoNorm;
    fail(ErrorCode::Config, "unknown smoothness variant '" + std::string(name) + "'");
}

NeighborGraph build_neighbor_graph(std::span<const double> positions, int dim, std::size_t k, double epsilon) {
    require(dim >= 1 && dim <= 3, "build_neighbor_graph: dim must be 1..3");
    require(positions.size() % static_cast<std::size_t>(dim) == 0, "build_neighbor_graph: malformed positions");
    const std::size_t n = positions.size() / static_cast<std::size_t>(dim);
    NeighborGraph g;
    if (n <= k) {
        const std::size_t shrunk = n > 0 ? n - 1 : 0;
        g.warnings.push_back("K=" + std::to_string(n) + " <= k=" + std::to_string(k) + "; k shrunk to " +
                             std::to_string(shrunk));
        k = shrunk;
    }
    g.k = k;
    g.neighbors.resize(n);
    g.sq_dist.resize(n);
    if (n == 0) return g;
    const KdTree tree(positions, dim);
    for (std::size_t i = 0; i < n; ++i) {
        for (const auto& [d2, j] : tree.nearest_excluding(i, k)) {
            g.neighbors[i].push_back(j);
            g.sq_dist[i].push_back(std::max(d2, epsilon));
        }
    }
    return g;
}

NeighborGraph build_neighbor_graph(const GaussianCloud& cloud, std::size_t k, double epsilon) {
    return build_neighbor_graph(cloud.positions, cloud.dim, k, epsilon);
}

void remap_neighbor_graph(NeighborGraph& graph, std::span<const std::size_t> origin) {
    const std::size_t old_n = graph.size();
    constexpr std::size_t kGone = static_cast<std::size_t>(-1);
    std::vector<std::size_t> first_new(old_n, kGone);
    for (std::size_t n = 0; n < origin.size(); ++n) {
        require(origin[n] < old_n, "remap_neighbor_graph: origin index out of range");
        if (first_new[origin[n]] == kGone) first_new[origin[n]] = n;
    }
    std::vector<std::vector<std::size_t>> rows(origin.size());
    std::vector<std::vector<double>> dists(origin.size());
    for (std::size_t n = 0; n < origin.size(); ++n) {
        const auto& src = graph.neighbors[origin[n]];
        for (std::size_t e = 0; e < src.size(); ++e) {
            const std::size_t m = first_new[src[e]];
            if (m == kGone || m == n) continue;
            rows[n].push_back(m);
            dists[n].push_back(graph.sq_dist[origin[n]][e]);
        }
    }
    graph.neighbors = std::move(rows);
    graph.sq_dist = std::move(dists);
}

double warmup_weight(double iteration, double start, double end, double lambda) {
    require(start < end, "warmup_weight: window start must precede end");
    if (iteration < start) return 0.0;
    if (iteration >= end) return lambda;
    return lambda * 0.5 * (1.0 - std::cos(std::numbers::pi * (iteration - start) / (end - start)));
}

void Rotation::apply(const double* v, double* out) const {
    for (int r = 0; r < dim; ++r) {
        double s = 0.0;
        for (int c = 0; c < dim; ++c) s += m[r * dim + c] * v[c];
        out[r] = s;
    }
}

Rotation kabsch_rotation(std::span<const double> a, std::span<const double> b, int dim,
                         std::span<const double> weights) {
    require(dim >= 1 && dim <= 3, "kabsch_rotation: dim must be 1..3");
    require(a.size() == b.size() && a.size() % static_cast<std::size_t>(dim) == 0 && !a.empty(),
            "kabsch_rotation: need >= 1 offset pair of equal shape");
    const std::size_t n = a.size() / static_cast<std::size_t>(dim);
    require(weights.empty() || weights.size() == n, "kabsch_rotation: weight count must equal pair count");

    Rotation rot;
    rot.dim = dim;
    rot.m.assign(static_cast<std::size_t>(dim * dim), 0.0);
    for (int c = 0; c < dim; ++c) rot.m[c * dim + c] = 1.0;

    // Weighted cross-covariance H = sum_j w_j a_j b_j^T.
    double h[9] = {};
    for (std::size_t j = 0; j < n; ++j) {
        const double w = weights.empty() ? 1.0 : weights[j];
        for (int r = 0; r < dim; ++r)
            for (int c = 0; c < dim; ++c) h[r * 3 + c] += w * a[j * dim + r] * b[j * dim + c];
    }
    bool all_zero = true;
    for (double v : h) all_zero = all_zero && v == 0.0;
    if (all_zero) {
        rot.degenerate = true;
        return rot;
    }
    if (dim == 1) return rot;
    if (dim == 2) {
        // argmax_theta trace(R H) with R = [[c,-s],[s,c]].
        const double dot = h[0] + h[4];
        const double cross = h[1] - h[3];
        const double theta = std::atan2(cross, dot);
        const double cs = std::cos(theta), sn = std::sin(theta);
        rot.m = {cs, -sn, sn, cs};
        return rot;
    }
    Eigen::Matrix3d H;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) H(r, c) = h[r * 3 + c];
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::Matrix3d U = svd.matrixU(), V = svd.matrixV();
    Eigen::Matrix3d fix = Eigen::Matrix3d::Identity();
    fix(2, 2) = (V * U.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
    const Eigen::Matrix3d R = V * fix * U.transpose();
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) rot.m[r * 3 + c] = R(r, c);
    return rot;
}

SmoothnessResult smoothness_loss(SmoothnessVariant variant, const GaussianCloud& cloud, std::span<const double> u,
                                 std::span<const double> h, int embed_width, const NeighborGraph& graph,
                                 std::span<const std::size_t> sample, double lambda_eff, double epsilon) {
    SmoothnessResult res;
    if (variant == SmoothnessVariant::Off) return res;
    const std::size_t k = cloud.size();
    const std::size_t dim = static_cast<std::size_t>(cloud.dim);
    require(u.size() == k * dim, "smoothness_loss: u must hold K*dim values");
    require(graph.size() == k, "smoothness_loss: graph size differs from K");
    require(epsilon >= 0.0, "smoothness_loss: epsilon must be >= 0");
    const std::size_t e = static_cast<std::size_t>(std::max(embed_width, 0));
    if (variant == SmoothnessVariant::OnEmbed) require(h.size() == k * e && e > 0, "smoothness_loss: h must hold K*E values");
    for (std::size_t i : sample) require(i < k, "smoothness_loss: sample index out of range");

    res.grad_u.assign(k * dim, 0.0);
    if (variant == SmoothnessVariant::OnEmbed) res.grad_h.assign(k * e, 0.0);
    if (sample.empty() || graph.k == 0) return res;
    const double norm = lambda_eff / (static_cast<double>(sample.size()) * static_cast<double>(graph.k));

    const auto& x = cloud.positions;
    std::vector<double> a, b, w;
    double total = 0.0;
    for (std::size_t i : sample) {
        const auto& row = graph.neighbors[i];
        if (row.empty()) continue;
        auto denom = [&](std::size_t j) {
            double d2 = 0.0;
            for (std::size_t c = 0; c < dim; ++c) {
                const double d = x[i * dim + c] - x[j * dim + c];
                d2 += d * d;
            }
            return d2 + epsilon;
        };
        switch (variant) {
            case SmoothnessVariant::Strain:
            case SmoothnessVariant::NoNorm: {
                const bool normalize = variant == SmoothnessVariant::Strain;
                for (std::size_t j : row) {
                    const double inv = normalize ? 1.0 / denom(j) : 1.0;
                    double q = 0.0;
                    for (std::size_t c = 0; c < dim; ++c) {
                        const double du = u[i * dim + c] - u[j * dim + c];
                        q += du * du;
                        const double g = norm * 2.0 * du * inv;
                        res.grad_u[i * dim + c] += g;
                        res.grad_u[j * dim + c] -= g;
                    }
                    total += q * inv;
                }
                break;
            }
            case SmoothnessVariant::OnEmbed: {
                for (std::size_t j : row) {
                    const double inv = 1.0 / denom(j);
                    double q = 0.0;
                    for (std::size_t c = 0; c < e; ++c) {
                        const double dh = h[i * e + c] - h[j * e + c];
                        q += dh * dh;
                        const double g = norm * 2.0 * dh * inv;
                        res.grad_h[i * e + c] += g;
                        res.grad_h[j * e + c] -= g;
                    }
                    total += q * inv;
                }
                break;
            }
            case SmoothnessVariant::Arap: {
                a.clear();
                b.clear();
                w.clear();
                for (std::size_t j : row) {
                    for (std::size_t c = 0; c < dim; ++c) {
                        a.push_back(x[j * dim + c] - x[i * dim + c]);
                        b.push_back((x[j * dim + c] + u[j * dim + c]) - (x[i * dim + c] + u[i * dim + c]));
                    }
                    w.push_back(1.0 / denom(j));
                }
                // R_i minimizes exactly this Gaussian's weighted residual, so
                // the gradient holds R_i fixed.
                const Rotation rot = kabsch_rotation(a, b, cloud.dim, w);
                double ra[3];
                for (std::size_t n = 0; n < row.size(); ++n) {
                    const std::size_t j = row[n];
                    rot.apply(a.data() + n * dim, ra);
                    double q = 0.0;
                    for (std::size_t c = 0; c < dim; ++c) {
                        const double r = ra[c] - b[n * dim + c];
                        q += r * r;
                        const double g = norm * 2.0 * r * w[n];
                        res.grad_u[j * dim + c] -= g;
                        res.grad_u[i * dim + c] += g;
                    }
                    total += q * w[n];
                }
                break;
            }
            case SmoothnessVariant::Off: break;
        }
    }
    res.loss = norm * total;
    return res;
}

std::vector<std::size_t> draw_sample(std::size_t k, std::size_t n, Rng& rng) {
    std::vector<std::size_t> idx(k);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    if (n >= k) return idx;
    for (std::size_t i = 0; i < n; ++i) std::swap(idx[i], idx[i + rng.index(k - i)]);
    idx.resize(n);
    std::sort(idx.begin(), idx.end());
    return idx;
}

void JitterEstimate::reset(std::size_t k, int dimension) {
    dim = dimension;
    count.assign(k, 0);
    mean.assign(k * dimension, 0.0);
    m2.assign(k * dimension, 0.0);
}

double JitterEstimate::variance(std::size_t i) const {
    if (count[i] < 2) return 0.0;
    double v = 0.0;
    for (int c = 0; c < dim; ++c) v += m2[i * dim + c];
    return v / static_cast<double>(count[i]);
}

void JitterEstimate::remap(std::span<const std::size_t> origin) {
    JitterEstimate out;
    out.dim = dim;
    for (std::size_t o : origin) {
        require(o < size(), "JitterEstimate::remap: origin out of range");
        out.count.push_back(count[o]);
        for (int c = 0; c < dim; ++c) {
            out.mean.push_back(mean[o * dim + c]);
            out.m2.push_back(m2[o * dim + c]);
        }
    }
    *this = std::move(out);
}

void update_jitter(JitterEstimate& est, std::span<const double> u) {
    const std::size_t d = static_cast<std::size_t>(est.dim);
    require(u.size() == est.size() * d, "update_jitter: sample length must be K*dim");
    for (std::size_t i = 0; i < est.size(); ++i) {
        const double n = static_cast<double>(++est.count[i]);
        for (std::size_t c = 0; c < d; ++c) {
            const double x = u[i * d + c];
            double& m = est.mean[i * d + c];
            const double delta = x - m;
            m += delta / n;
            est.m2[i * d + c] += delta * (x - m);
        }
    }
}

double ptdrop_rate(double iteration, double start, double end, double p_max) {
    require(start < end, "ptdrop_rate: window start must precede end");
    if (iteration < start) return 0.0;
    if (iteration >= end) return p_max;
    return p_max * 0.5 * (1.0 - std::cos(std::numbers::pi * (iteration - start) / (end - start)));
}

std::vector<double> ptdrop_probabilities(double iteration, const JitterEstimate& jitter, const PtDropSettings& s) {
    const std::size_t k = jitter.size();
    std::vector<double> p(k, 0.0);
    const double base = ptdrop_rate(iteration, s.start, s.end, s.p_max);
    if (base <= 0.0) return p;
    double mean = 0.0;
    if (s.jitter_weighting && k > 0) {
        for (std::size_t i = 0; i < k; ++i) mean += jitter.variance(i);
        mean /= static_cast<double>(k);
    }
    for (std::size_t i = 0; i < k; ++i) {
        const double w = mean > 0.0 ? jitter.variance(i) / mean : 1.0;
        p[i] = std::clamp(base * w, 0.0, 0.95);
    }
    return p;
}

DropMask ptdrop_mask(double iteration, std::size_t k, const JitterEstimate& jitter, const PtDropSettings& s, Rng& rng) {
    require(jitter.size() == k, "ptdrop_mask: jitter length must equal K");
    DropMask mask;
    mask.keep.assign(k, 1);
    mask.opacity_scale.assign(k, 1.0);
    const auto p = ptdrop_probabilities(iteration, jitter, s);
    for (std::size_t i = 0; i < k; ++i) {
        if (p[i] <= 0.0) continue;
        if (rng.uniform() < p[i])
            mask.keep[i] = 0;
        else
            mask.opacity_scale[i] = 1.0 / (1.0 - p[i]);
    }
    return mask;
}

}  // namespace dgs
