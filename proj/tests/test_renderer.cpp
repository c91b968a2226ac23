// Copyright 2026 The dgslab Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dgslab/error.hpp"
#include "dgslab/renderer.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"

using namespace dgs;

using gradcheck::random_instance;

TEST_SUITE("renderer") {
    TEST_CASE("zero opacity renders pure background") {
        Rng rng(1);
        GaussianCloud c = oracle::random_cloud(rng, 6);
        for (double& o : c.opacity_logits) o = -1000.0;
        const Camera cam{0.4, 32, 0.05, 0.37};
        for (double v : render_forward(c, {}, cam)) CHECK(v == 0.37);
    }

    TEST_CASE("single centered Gaussian composites in closed form") {
        const Camera cam{0.0, 16, 0.05, 0.2};
        GaussianCloud c;
        c.positions = {0.3, cam.pixel_center(9)};
        c.log_scales = {std::log(0.08)};
        c.opacity_logits = {logit(0.6)};
        c.colors = {0.9};
        c.depth_keys = {0.0};
        const Image img = render_forward(c, {}, cam);
        CHECK(img[9] == doctest::Approx(0.9 * 0.6 + 0.2 * 0.4).epsilon(1e-14));
    }

    TEST_CASE("output does not depend on storage order") {
        Rng rng(7);
        for (int trial = 0; trial < 20; ++trial) {
            const GaussianCloud c = oracle::random_cloud(rng, 6, 2, 0.4);
            std::vector<std::size_t> perm(c.size());
            std::iota(perm.begin(), perm.end(), 0);
            std::reverse(perm.begin(), perm.end());
            std::swap(perm[0], perm[3]);
            const GaussianCloud p = c.select(perm);
            const Camera cam{rng.uniform(0.0, 6.0), 24, 0.05, 0.1};
            const Image a = render_forward(c, {}, cam), b = render_forward(p, {}, cam);
            for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-13));
        }
    }

    TEST_CASE("analytic gradients match finite differences over random scenes") {
        gradcheck::Stats s;
        for (std::uint64_t seed = 0; seed < 60; ++seed) s.merge(gradcheck::renderer_cloud(random_instance(seed)));
        INFO("max relative error " << s.max_rel_err);
        CHECK(s.failures == 0);
        CHECK(s.compared > 60 * 5);
    }

    TEST_CASE("field parameter gradients through the renderer match finite differences") {
        gradcheck::Stats s;
        for (std::uint64_t seed = 0; seed < 50; ++seed) s.merge(gradcheck::renderer_field(seed));
        INFO("max relative error " << s.max_rel_err);
        CHECK(s.failures == 0);
        CHECK(s.instances == 50);
    }

    TEST_CASE("zero loss gradient yields zero gradients") {
        const gradcheck::Instance in = random_instance(3);
        const std::vector<double> zero(16, 0.0);
        const RenderGrads g = render_backward(in.cloud, {}, in.cam, nullptr, zero);
        for (const auto* v : {&g.positions, &g.log_scales, &g.opacity_logits, &g.colors, &g.view_grad})
            for (double x : *v) CHECK(x == 0.0);
    }

    TEST_CASE("dropped Gaussians receive exactly zero gradient") {
        Rng rng(4);
        const gradcheck::Instance in = random_instance(17);
        const std::size_t k = in.cloud.size();
        DropMask mask;
        mask.keep.assign(k, 1);
        mask.opacity_scale.assign(k, 1.25);
        mask.keep[0] = 0;
        const RenderGrads g = render_backward(in.cloud, {}, in.cam, &mask, in.w);
        CHECK(g.colors[0] == 0.0);
        CHECK(g.opacity_logits[0] == 0.0);
        CHECK(g.log_scales[0] == 0.0);
        CHECK(g.view_grad[0] == 0.0);
        CHECK(g.visible[0] == 0);
        for (int c = 0; c < in.cloud.dim; ++c) CHECK(g.positions[c] == 0.0);
        // An all-dropped cloud is pure background.
        mask.keep.assign(k, 0);
        for (double v : render_forward(in.cloud, {}, in.cam, &mask)) CHECK(v == in.cam.background);
    }

    TEST_CASE("psnr closed forms") {
        const std::vector<double> a(50, 0.4);
        std::vector<double> b = a;
        CHECK(image_psnr(a, b) == std::numeric_limits<double>::infinity());
        for (double& v : b) v += 0.1;
        CHECK(image_psnr(a, b, 1.0) == doctest::Approx(20.0).epsilon(1e-12));
        for (double& v : b) v = 0.41;
        CHECK(image_psnr(a, b, 1.0) == doctest::Approx(40.0).epsilon(1e-10));
        const std::vector<double> shorter(10, 0.0);
        CHECK_THROWS_AS(image_psnr(a, shorter), Error);
    }

    TEST_CASE("transmittance telescopes to total coverage") {
        Rng rng(21);
        for (int trial = 0; trial < 30; ++trial) {
            GaussianCloud c = oracle::random_cloud(rng, 8, 2, 0.4);
            for (double& o : c.opacity_logits) o = rng.uniform(-2.0, 5.0);
            GaussianCloud white = c, black = c;
            std::fill(white.colors.begin(), white.colors.end(), 1.0);
            std::fill(black.colors.begin(), black.colors.end(), 0.0);
            const double angle = rng.uniform(0.0, 6.0);
            const Image coverage = render_forward(white, {}, Camera{angle, 32, 0.05, 0.0});
            const Image t_final = render_forward(black, {}, Camera{angle, 32, 0.05, 1.0});
            for (std::size_t p = 0; p < coverage.size(); ++p) CHECK(std::abs(1.0 - t_final[p] - coverage[p]) < 1e-12);
        }
    }

    TEST_CASE("raising the front opacity never lets more light through behind it") {
        Rng rng(31);
        for (int trial = 0; trial < 30; ++trial) {
            GaussianCloud c = oracle::random_cloud(rng, 5, 2, 0.2);
            const Camera cam{0.0, 24, 0.05, 0.0};
            // View axis is +x at angle 0, so the smallest x is front-most.
            std::size_t front = 0;
            for (std::size_t i = 1; i < c.size(); ++i)
                if (c.positions[i * 2] < c.positions[front * 2]) front = i;
            const std::size_t probe = (front + 1) % c.size();
            GaussianCloud lit = c;
            std::fill(lit.colors.begin(), lit.colors.end(), 0.0);
            lit.colors[probe] = 1.0;
            const Image before = render_forward(lit, {}, cam);
            lit.opacity_logits[front] += 1.0;
            const Image after = render_forward(lit, {}, cam);
            for (std::size_t p = 0; p < before.size(); ++p) CHECK(after[p] <= before[p] + 1e-15);
        }
    }

    TEST_CASE("pixels stay within the color range") {
        Rng rng(41);
        for (int trial = 0; trial < 40; ++trial) {
            GaussianCloud c = oracle::random_cloud(rng, 10, 2, 0.5);
            for (double& o : c.opacity_logits) o = rng.uniform(-3.0, 12.0);
            const double bg = rng.uniform(0.0, 1.5);
            for (double v : render_forward(c, {}, Camera{rng.uniform(0.0, 6.0), 32, 0.05, bg})) {
                CHECK(v >= 0.0);
                CHECK(v <= std::max(1.0, bg) + 1e-12);
            }
        }
    }

    TEST_CASE("contract violations") {
        Rng rng(1);
        const GaussianCloud c = oracle::random_cloud(rng, 3);
        DropMask bad;
        bad.keep.assign(2, 1);
        CHECK_THROWS_AS(render_forward(c, {}, Camera{}, &bad), Error);
        CHECK_THROWS_AS(render_forward(c, {}, Camera{0.0, 0, 0.05, 0.0}), Error);
        const std::vector<double> g(5, 0.0);
        CHECK_THROWS_AS(render_backward(c, {}, Camera{}, nullptr, g), Error);
    }
}
