// Copyright 2026 The dgslab Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <numbers>

#include "dgslab/error.hpp"
#include "dgslab/kdtree.hpp"
#include "dgslab/regularizers.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"

using namespace dgs;

namespace {

GaussianCloud line_cloud(std::vector<double> xs) {
    GaussianCloud c;
    c.dim = 1;
    c.positions = std::move(xs);
    const std::size_t n = c.positions.size();
    c.log_scales.assign(n, -2.0);
    c.opacity_logits.assign(n, 0.0);
    c.colors.assign(n, 0.5);
    c.depth_keys.assign(n, 0.0);
    return c;
}

std::vector<std::size_t> all_indices(std::size_t k) {
    std::vector<std::size_t> s(k);
    for (std::size_t i = 0; i < k; ++i) s[i] = i;
    return s;
}

double loss_of(SmoothnessVariant v, const GaussianCloud& c, const std::vector<double>& u, double eps = kDefaultEpsilon,
               std::size_t k = 4) {
    const NeighborGraph g = build_neighbor_graph(c, k, eps);
    return smoothness_loss(v, c, u, {}, 0, g, all_indices(c.size()), 1.0, eps).loss;
}

std::vector<double> rotate_all(const GaussianCloud& c, double angle, double tx, double ty) {
    std::vector<double> u(c.positions.size());
    const double cs = std::cos(angle), sn = std::sin(angle);
    for (std::size_t i = 0; i < c.size(); ++i) {
        const double x = c.positions[2 * i], y = c.positions[2 * i + 1];
        u[2 * i] = cs * x - sn * y + tx - x;
        u[2 * i + 1] = sn * x + cs * y + ty - y;
    }
    return u;
}

double residual(const Rotation& r, const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0, ra[3];
    for (std::size_t j = 0; j < a.size() / r.dim; ++j) {
        r.apply(a.data() + j * r.dim, ra);
        for (int c = 0; c < r.dim; ++c) s += (ra[c] - b[j * r.dim + c]) * (ra[c] - b[j * r.dim + c]);
    }
    return s;
}

}  // namespace

TEST_SUITE("regularizers") {
    TEST_CASE("neighbor graph on three collinear points") {
        const NeighborGraph g = build_neighbor_graph(std::vector<double>{0.0, 1.0, 3.0}, 1, 1);
        CHECK(g.neighbors[0] == std::vector<std::size_t>{1});
        CHECK(g.neighbors[1] == std::vector<std::size_t>{0});
        CHECK(g.neighbors[2] == std::vector<std::size_t>{1});
        CHECK(g.sq_dist[2][0] == 4.0);
    }

    TEST_CASE("k = K-1 gives the complete graph; larger k shrinks with a warning") {
        Rng rng(3);
        const GaussianCloud c = oracle::random_cloud(rng, 7);
        const NeighborGraph g = build_neighbor_graph(c, 6);
        for (std::size_t i = 0; i < 7; ++i) {
            CHECK(g.neighbors[i].size() == 6);
            for (std::size_t j = 0; j < 7; ++j)
                if (j != i) CHECK(std::find(g.neighbors[i].begin(), g.neighbors[i].end(), j) != g.neighbors[i].end());
        }
        CHECK(g.warnings.empty());
        const NeighborGraph s = build_neighbor_graph(c, 9);
        CHECK(s.k == 6);
        CHECK(s.warnings.size() == 1);
    }

    TEST_CASE("neighbor graph equals brute force on 100 random clouds") {
        Rng rng(2024);
        for (int trial = 0; trial < 100; ++trial) {
            const int dim = 2 + trial % 2;
            const std::size_t n = 2 + rng.index(199);
            std::vector<double> pts;
            for (std::size_t i = 0; i < n * dim; ++i) {
                // Quantized coordinates create exact distance ties.
                pts.push_back(trial % 3 == 0 ? std::round(rng.uniform(-5.0, 5.0)) : rng.uniform(-1.0, 1.0));
            }
            const std::size_t k = 1 + rng.index(10);
            const NeighborGraph g = build_neighbor_graph(pts, dim, k, 1e-300);
            const auto ref = oracle::brute_knn(pts, dim, std::min(k, n - 1));
            for (std::size_t i = 0; i < n; ++i) CHECK(g.neighbors[i] == ref[i]);
        }
    }

    TEST_CASE("coincident points get the epsilon floor and no self-neighbors") {
        const NeighborGraph g = build_neighbor_graph(std::vector<double>{0.0, 0.0, 0.0, 0.0, 1.0, 1.0}, 2, 2, 1e-8);
        for (std::size_t i = 0; i < g.size(); ++i) {
            for (std::size_t e = 0; e < g.neighbors[i].size(); ++e) {
                CHECK(g.neighbors[i][e] != i);
                CHECK(g.sq_dist[i][e] >= 1e-8);
            }
        }
    }

    TEST_CASE("warmup half-cosine") {
        CHECK(warmup_weight(10.0, 30.0, 100.0, 2.0) == 0.0);
        CHECK(warmup_weight(65.0, 30.0, 100.0, 2.0) == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(warmup_weight(100.0, 30.0, 100.0, 2.0) == 2.0);
        CHECK(warmup_weight(1e6, 30.0, 100.0, 2.0) == 2.0);
        double prev = 0.0;
        for (double i = 30.0; i <= 100.0; i += 1.0) {
            const double w = warmup_weight(i, 30.0, 100.0, 2.0);
            CHECK(w >= prev);
            prev = w;
        }
    }

    TEST_CASE("two-Gaussian hand sums") {
        const GaussianCloud c = line_cloud({0.0, 2.0});
        const NeighborGraph g = build_neighbor_graph(c, 1, 0.0);
        const std::vector<double> u{0.0, 1.0};
        const auto idx = all_indices(2);
        CHECK(smoothness_loss(SmoothnessVariant::Strain, c, u, {}, 0, g, idx, 1.0, 0.0).loss == doctest::Approx(0.25));
        CHECK(smoothness_loss(SmoothnessVariant::NoNorm, c, u, {}, 0, g, idx, 1.0, 0.0).loss == doctest::Approx(1.0));
        const SmoothnessResult off = smoothness_loss(SmoothnessVariant::Off, c, u, {}, 0, g, idx, 1.0, 0.0);
        CHECK(off.loss == 0.0);
        CHECK(off.grad_u.empty());
    }

    TEST_CASE("uniform translation costs nothing") {
        Rng rng(9);
        const GaussianCloud c = oracle::random_cloud(rng, 25);
        std::vector<double> u(c.positions.size());
        for (std::size_t i = 0; i < c.size(); ++i) {
            u[2 * i] = 0.3;
            u[2 * i + 1] = -0.7;
        }
        for (auto v : {SmoothnessVariant::Strain, SmoothnessVariant::NoNorm, SmoothnessVariant::Arap})
            CHECK(loss_of(v, c, u) == doctest::Approx(0.0).scale(1.0).epsilon(1e-20));
    }

    TEST_CASE("arap null space under rigid motion while strain is positive") {
        Rng rng(10);
        for (int trial = 0; trial < 25; ++trial) {
            const GaussianCloud c = oracle::random_cloud(rng, 30);
            const auto u = rotate_all(c, rng.uniform(-3.0, 3.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
            CHECK(loss_of(SmoothnessVariant::Arap, c, u) < 1e-10);
            CHECK(loss_of(SmoothnessVariant::Strain, c, u) > 1e-3);
        }
    }

    TEST_CASE("arap null space in three dimensions") {
        Rng rng(12);
        GaussianCloud c = oracle::random_cloud(rng, 30, 3);
        const double ax = 0.4, ay = -0.9, az = 0.3;
        const double n = std::sqrt(ax * ax + ay * ay + az * az);
        const double kx = ax / n, ky = ay / n, kz = az / n, th = 1.1;
        const double cs = std::cos(th), sn = std::sin(th), vc = 1 - cs;
        const double r[9] = {cs + kx * kx * vc,      kx * ky * vc - kz * sn, kx * kz * vc + ky * sn,
                             ky * kx * vc + kz * sn, cs + ky * ky * vc,      ky * kz * vc - kx * sn,
                             kz * kx * vc - ky * sn, kz * ky * vc + kx * sn, cs + kz * kz * vc};
        std::vector<double> u(c.positions.size());
        for (std::size_t i = 0; i < c.size(); ++i)
            for (int a = 0; a < 3; ++a) {
                double s = 0.0;
                for (int b = 0; b < 3; ++b) s += r[a * 3 + b] * c.positions[i * 3 + b];
                u[i * 3 + a] = s + 0.2 - c.positions[i * 3 + a];
            }
        CHECK(loss_of(SmoothnessVariant::Arap, c, u) < 1e-10);
        CHECK(loss_of(SmoothnessVariant::Strain, c, u) > 1e-3);
    }

    TEST_CASE("translation invariance, quadratic scaling, normalization equivalence") {
        Rng rng(13);
        const GaussianCloud c = oracle::random_cloud(rng, 20);
        std::vector<double> u(c.positions.size());
        for (double& v : u) v = rng.uniform(-0.2, 0.2);
        std::vector<double> shifted = u, scaled = u;
        for (std::size_t i = 0; i < u.size(); ++i) {
            shifted[i] += i % 2 ? 0.5 : -1.25;
            scaled[i] *= 3.0;
        }
        for (auto v : {SmoothnessVariant::Strain, SmoothnessVariant::NoNorm, SmoothnessVariant::Arap}) {
            const double base = loss_of(v, c, u);
            CHECK(base >= 0.0);
            CHECK(loss_of(v, c, shifted) == doctest::Approx(base).epsilon(1e-9));
        }
        for (auto v : {SmoothnessVariant::Strain, SmoothnessVariant::NoNorm})
            CHECK(loss_of(v, c, scaled) == doctest::Approx(9.0 * loss_of(v, c, u)).epsilon(1e-12));

        // Unit spacing on a line: every neighbor is at distance exactly 1.
        const GaussianCloud unit = line_cloud({0.0, 1.0, 2.0, 3.0, 4.0});
        std::vector<double> u1{0.1, -0.3, 0.7, 0.2, 0.0};
        const NeighborGraph g = build_neighbor_graph(unit, 1, 0.0);
        const auto idx = all_indices(5);
        CHECK(smoothness_loss(SmoothnessVariant::Strain, unit, u1, {}, 0, g, idx, 1.0, 0.0).loss ==
              smoothness_loss(SmoothnessVariant::NoNorm, unit, u1, {}, 0, g, idx, 1.0, 0.0).loss);
    }

    TEST_CASE("smoothness gradients match finite differences") {
        const gradcheck::Stats s = gradcheck::smoothness_suite(60);
        INFO("max relative error " << s.max_rel_err);
        CHECK(s.failures == 0);
        CHECK(s.instances >= 50);
    }

    TEST_CASE("sampled loss is unbiased") {
        Rng rng(77);
        const GaussianCloud c = oracle::random_cloud(rng, 40);
        std::vector<double> u(c.positions.size());
        for (double& v : u) v = rng.uniform(-0.3, 0.3);
        const NeighborGraph g = build_neighbor_graph(c, 8);
        const double full = smoothness_loss(SmoothnessVariant::Strain, c, u, {}, 0, g, all_indices(40), 1.0).loss;
        double acc = 0.0;
        const int draws = 4000;
        for (int n = 0; n < draws; ++n)
            acc += smoothness_loss(SmoothnessVariant::Strain, c, u, {}, 0, g, draw_sample(40, 10, rng), 1.0).loss;
        CHECK(acc / draws == doctest::Approx(full).epsilon(0.01));
    }

    TEST_CASE("kabsch recovers rotations") {
        Rng rng(4);
        std::vector<double> a;
        for (int j = 0; j < 6; ++j) a.push_back(rng.uniform(-1.0, 1.0));
        const Rotation id = kabsch_rotation(a, a, 2);
        CHECK(id.m[0] == doctest::Approx(1.0));
        CHECK(id.m[1] == doctest::Approx(0.0).scale(1.0));

        const double th = std::numbers::pi / 6.0;
        std::vector<double> b(a.size());
        for (std::size_t j = 0; j < 3; ++j) {
            b[2 * j] = std::cos(th) * a[2 * j] - std::sin(th) * a[2 * j + 1];
            b[2 * j + 1] = std::sin(th) * a[2 * j] + std::cos(th) * a[2 * j + 1];
        }
        const Rotation r = kabsch_rotation(a, b, 2);
        CHECK(r.m[0] == doctest::Approx(std::cos(th)).epsilon(1e-12));
        CHECK(r.m[2] == doctest::Approx(std::sin(th)).epsilon(1e-12));
        CHECK(residual(r, a, b) < 1e-10);

        const std::vector<double> zeros(6, 0.0);
        const Rotation d = kabsch_rotation(zeros, zeros, 2);
        CHECK(d.degenerate);
        CHECK(d.m == std::vector<double>{1.0, 0.0, 0.0, 1.0});
    }

    TEST_CASE("kabsch beats a one-degree grid search on noisy pairs") {
        Rng rng(6);
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<double> a, b;
            const double th = rng.uniform(-3.1, 3.1);
            for (int j = 0; j < 5; ++j) {
                const double x = rng.uniform(-1, 1), y = rng.uniform(-1, 1);
                a.insert(a.end(), {x, y});
                b.push_back(std::cos(th) * x - std::sin(th) * y + 0.2 * rng.normal());
                b.push_back(std::sin(th) * x + std::cos(th) * y + 0.2 * rng.normal());
            }
            const double best = residual(kabsch_rotation(a, b, 2), a, b);
            for (int deg = 0; deg < 360; ++deg) {
                const double g = deg * std::numbers::pi / 180.0;
                Rotation cand{2, {std::cos(g), -std::sin(g), std::sin(g), std::cos(g)}, false};
                CHECK(best <= residual(cand, a, b) + 1e-12);
            }
            // Rotations are proper.
            const Rotation r = kabsch_rotation(a, b, 2);
            CHECK(r.m[0] * r.m[3] - r.m[1] * r.m[2] == doctest::Approx(1.0).epsilon(1e-12));
        }
    }

    TEST_CASE("kabsch in 3D with a reflection-prone configuration stays proper") {
        Rng rng(8);
        std::vector<double> a, b;
        for (int j = 0; j < 4; ++j) {
            const double x = rng.uniform(-1, 1), y = rng.uniform(-1, 1), z = rng.uniform(-1, 1);
            a.insert(a.end(), {x, y, z});
            b.insert(b.end(), {x, y, -z});  // mirror image
        }
        const Rotation r = kabsch_rotation(a, b, 3);
        const auto& m = r.m;
        const double det = m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
                           m[2] * (m[3] * m[7] - m[4] * m[6]);
        CHECK(det == doctest::Approx(1.0).epsilon(1e-10));
    }

    TEST_CASE("ptdrop keeps everything before the window") {
        JitterEstimate j;
        j.reset(50, 2);
        Rng rng(1);
        const PtDropSettings s{true, 0.3, 100.0, 200.0, true};
        const DropMask m = ptdrop_mask(50.0, 50, j, s, rng);
        for (auto k : m.keep) CHECK(k == 1);
        for (double o : m.opacity_scale) CHECK(o == 1.0);
    }

    TEST_CASE("ptdrop empirical drop fraction after the window") {
        JitterEstimate j;
        j.reset(10000, 2);
        Rng rng(2);
        const PtDropSettings s{true, 0.3, 100.0, 200.0, true};
        const DropMask m = ptdrop_mask(500.0, 10000, j, s, rng);
        double dropped = 0.0;
        for (std::size_t i = 0; i < m.keep.size(); ++i) {
            if (!m.keep[i]) ++dropped;
            else CHECK(m.opacity_scale[i] == doctest::Approx(1.0 / 0.7));
        }
        CHECK(std::abs(dropped / 10000.0 - 0.3) <= 0.01);
    }

    TEST_CASE("ptdrop probability follows the jitter ratio and clamps") {
        JitterEstimate j;
        j.reset(3, 1);
        update_jitter(j, std::vector<double>{0.0, 0.0, 0.0});
        update_jitter(j, std::vector<double>{2.0, 1.0, 0.0});
        CHECK(j.variance(0) == doctest::Approx(4.0 * j.variance(1)));
        const PtDropSettings s{true, 0.3, 0.0, 10.0, true};
        const auto p = ptdrop_probabilities(5.0, j, s);
        CHECK(p[0] == doctest::Approx(4.0 * p[1]));
        CHECK(p[2] == 0.0);
        const auto full = ptdrop_probabilities(10.0, j, PtDropSettings{true, 0.9, 0.0, 10.0, true});
        CHECK(full[0] == 0.95);
        const auto flat = ptdrop_probabilities(10.0, j, PtDropSettings{true, 0.3, 0.0, 10.0, false});
        for (double v : flat) CHECK(v == doctest::Approx(0.3));
        JitterEstimate zero;
        zero.reset(3, 1);
        for (double v : ptdrop_probabilities(10.0, zero, s)) CHECK(v == doctest::Approx(0.3));
    }

    TEST_CASE("jitter streaming variance") {
        JitterEstimate j;
        j.reset(2, 1);
        update_jitter(j, std::vector<double>{1.0, 3.0});
        CHECK(j.variance(0) == 0.0);
        for (int n = 0; n < 999; ++n) update_jitter(j, std::vector<double>{n % 2 ? 1.0 : -1.0, 3.0});
        CHECK(j.variance(0) == doctest::Approx(1.0).epsilon(1e-3));
        CHECK(j.variance(1) == 0.0);
        j.remap(std::vector<std::size_t>{0, 0, 1});
        CHECK(j.size() == 3);
        CHECK(j.variance(1) == j.variance(0));
    }

    TEST_CASE("graph remap lets children inherit the parent's row") {
        const NeighborGraph g0 = build_neighbor_graph(std::vector<double>{0.0, 1.0, 3.0, 7.0}, 1, 2);
        NeighborGraph g = g0;
        // Gaussian 1 split into two; Gaussian 3 pruned.
        remap_neighbor_graph(g, std::vector<std::size_t>{0, 1, 1, 2});
        REQUIRE(g.size() == 4);
        CHECK(g.neighbors[0] == std::vector<std::size_t>{1, 3});
        CHECK(g.neighbors[2] == std::vector<std::size_t>{0, 3});
        CHECK(g.neighbors[3] == std::vector<std::size_t>{1, 0});
    }
}
