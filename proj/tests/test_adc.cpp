// Copyright 2026 The dgslab Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <sstream>

#include "dgslab/adc.hpp"
#include "dgslab/error.hpp"
#include "oracles.hpp"

using namespace dgs;

namespace {

GaussianCloud single(double scale, double opacity = 0.5) {
    GaussianCloud c;
    c.positions = {0.1, -0.2};
    c.log_scales = {std::log(scale)};
    c.opacity_logits = {logit(opacity)};
    c.colors = {0.5};
    c.depth_keys = {0.0};
    return c;
}

void set_gbar(AdcState& s, std::size_t i, double g) {
    s.grad_sum[i] = g;
    s.grad_count[i] = 1;
}

AdcConfig unit_config() {
    AdcConfig cfg;
    cfg.tau0 = 2e-4;
    cfg.size_threshold = 0.1;
    return cfg;
}

}  // namespace

TEST_SUITE("adc") {
    TEST_CASE("ema one-step hand evaluation") {
        AdcState s = AdcState::for_cloud(1, 2, 1e-12);
        s.delta_ema = 0.0;
        s.prev_loss = 1.0;
        s.has_prev = true;
        ema_update(s, 0.9, 0.99, 1e-12);
        CHECK(s.delta_ema == doctest::Approx(0.001).epsilon(1e-12));
        CHECK(s.prev_loss == 0.9);
    }

    TEST_CASE("ema decays to the floor under a constant loss") {
        AdcState s = AdcState::for_cloud(1, 2, 1e-6);
        s.delta_ema = 0.5;
        s.has_prev = true;
        s.prev_loss = 0.3;
        for (int i = 0; i < 5000; ++i) ema_update(s, 0.3, 0.99, 1e-6);
        CHECK(s.delta_ema == 1e-6);
    }

    TEST_CASE("ema converges to a constant improvement") {
        AdcState s = AdcState::for_cloud(1, 2, 1e-9);
        double loss = 100.0;
        for (int i = 0; i < 4000; ++i) {
            ema_update(s, loss, 0.99, 1e-9);
            loss -= 0.02;
        }
        CHECK(s.delta_ema == doctest::Approx(0.02).epsilon(1e-9));
    }

    TEST_CASE("gad threshold worked example and disabled case") {
        CHECK(gad_threshold(2e-4, 1.0, 1000.0, 1e6, 1e-3) == doctest::Approx(4e-4).epsilon(1e-14));
        CHECK(gad_threshold(2e-4, 0.0, 1000.0, 1e6, 1e-3) == 2e-4);
        const double a = gad_threshold(2e-4, 0.3, 500.0, 1e5, 1e-3) - 2e-4;
        const double b = gad_threshold(2e-4, 0.3, 1000.0, 1e5, 1e-3) - 2e-4;
        CHECK(b == doctest::Approx(2.0 * a).epsilon(1e-12));
        CHECK_THROWS_AS(gad_threshold(0.0, 1.0, 1.0, 1.0, 1.0), Error);
    }

    TEST_CASE("gad threshold monotonicity over a randomized sweep") {
        Rng rng(77);
        for (int n = 0; n < 1000; ++n) {
            const double tau0 = std::exp(rng.uniform(-12.0, -2.0));
            const double lambda = rng.uniform(0.0, 3.0);
            const double k = std::floor(rng.uniform(1.0, 1e5));
            const double pixels = std::exp(rng.uniform(3.0, 15.0));
            const double d = std::exp(rng.uniform(-10.0, 0.0));
            const double tau = gad_threshold(tau0, lambda, k, pixels, d);
            CHECK(tau >= tau0);
            const double more_k = gad_threshold(tau0, lambda, k * 1.5, pixels, d);
            const double more_d = gad_threshold(tau0, lambda, k, pixels, d * 1.5);
            if (lambda > 0.0) {
                CHECK(more_k > tau);
                CHECK(more_d < tau);
            } else {
                CHECK(more_k == tau);
                CHECK(more_d == tau);
            }
        }
    }

    TEST_CASE("growthcap curve") {
        CHECK(growthcap_factor(0.0, 1000.0, 10.0) == 1.0);
        for (double k = 0.0; k <= 200.0; k += 10.0) CHECK(growthcap_factor(k, 1000.0, 10.0) > 1.0 - 1e-3);
        CHECK(growthcap_factor(500.0, 1000.0, 10.0) > 1.0 - 1e-2);
        CHECK(growthcap_factor(1000.0, 1000.0, 10.0) == doctest::Approx(0.5).epsilon(1e-4));
        double prev = 1.0;
        for (double k = 0.0; k < 5000.0; k += 37.0) {
            const double f = growthcap_factor(k, 1000.0, 10.0);
            CHECK(f <= prev);
            CHECK(f > 0.0);
            prev = f;
        }
        CHECK(growthcap_factor(1e6, 1000.0, 0.0) == 1.0);
    }

    TEST_CASE("split replaces a large Gaussian by two smaller children") {
        GaussianCloud c = single(0.5);
        AdcState s = AdcState::for_cloud(1, 2, 1e-8);
        set_gbar(s, 0, 3e-4);
        Rng rng(1);
        const AdcSummary sum = densify_and_prune(c, s, unit_config(), 100, 1e4, rng);
        REQUIRE(c.size() == 2);
        CHECK(sum.splits == 1);
        for (std::size_t i = 0; i < 2; ++i) CHECK(c.scale(i) == doctest::Approx(0.5 / 1.6).epsilon(1e-12));
        REQUIRE(s.audit.size() == 1);
        CHECK(s.audit[0].op == AdcOp::Split);
        CHECK(s.audit[0].children.size() == 2);
        CHECK(s.uid == s.audit[0].children);
        for (double g : s.grad_sum) CHECK(g == 0.0);
    }

    TEST_CASE("without split a large Gaussian stays put") {
        GaussianCloud c = single(0.5);
        AdcState s = AdcState::for_cloud(1, 2, 1e-8);
        set_gbar(s, 0, 3e-4);
        Rng rng(1);
        const AdcConfig cfg = apply_ablation(unit_config(), AblationPreset::A2);
        densify_and_prune(c, s, cfg, 100, 1e4, rng);
        CHECK(c.size() == 1);
        CHECK(s.audit.empty());
    }

    TEST_CASE("clone duplicates a small Gaussian against the gradient") {
        GaussianCloud c = single(0.05);
        AdcState s = AdcState::for_cloud(1, 2, 1e-8);
        set_gbar(s, 0, 3e-4);
        s.pos_grad_sum = {3.0, 4.0};
        Rng rng(1);
        densify_and_prune(c, s, unit_config(), 100, 1e4, rng);
        REQUIRE(c.size() == 2);
        CHECK(c.positions[0] == 0.1);
        CHECK(c.positions[2] == doctest::Approx(0.1 - 0.5 * 0.05 * 0.6));
        CHECK(c.positions[3] == doctest::Approx(-0.2 - 0.5 * 0.05 * 0.8));
        CHECK(c.scale(1) == doctest::Approx(0.05));
        CHECK(s.audit.at(0).op == AdcOp::Clone);
    }

    TEST_CASE("below-threshold Gaussians are untouched") {
        GaussianCloud c = single(0.5);
        AdcState s = AdcState::for_cloud(1, 2, 1e-8);
        set_gbar(s, 0, 2e-4);  // equal is not above
        Rng rng(1);
        densify_and_prune(c, s, unit_config(), 100, 1e4, rng);
        CHECK(c.size() == 1);
    }

    TEST_CASE("prune removes transparent Gaussians") {
        GaussianCloud c = single(0.05, 0.001);
        c.push_back_copy(single(0.05, 0.5), 0);
        AdcState s = AdcState::for_cloud(2, 2, 1e-8);
        Rng rng(1);
        const AdcSummary sum = densify_and_prune(c, s, unit_config(), 100, 1e4, rng);
        CHECK(c.size() == 1);
        CHECK(sum.prunes == 1);
        CHECK(c.opacity(0) == doctest::Approx(0.5));
        CHECK(s.uid == std::vector<std::uint64_t>{1});
    }

    TEST_CASE("pruning everything keeps the most opaque Gaussian") {
        GaussianCloud c = single(0.05, 0.001);
        c.push_back_copy(single(0.05, 0.003), 0);
        c.push_back_copy(single(0.05, 0.002), 0);
        AdcState s = AdcState::for_cloud(3, 2, 1e-8);
        Rng rng(1);
        const AdcSummary sum = densify_and_prune(c, s, unit_config(), 100, 1e4, rng);
        REQUIRE(c.size() == 1);
        CHECK(sum.kept_last);
        CHECK(c.opacity(0) == doctest::Approx(0.003));
        bool warned = false;
        for (const auto& e : s.audit) warned |= e.op == AdcOp::Warning;
        CHECK(warned);
    }

    TEST_CASE("growthcap serves the largest gradients first") {
        GaussianCloud c;
        AdcState s = AdcState::for_cloud(10, 2, 1e-8);
        for (int i = 0; i < 10; ++i) {
            c.push_back_copy(single(0.05), 0);
            set_gbar(s, i, 1e-3 * (i + 1));
        }
        AdcConfig cfg = unit_config();
        cfg.growthcap_kmax = 10.0;
        cfg.growthcap_sharpness = 10.0;
        Rng rng(1);
        const AdcSummary sum = densify_and_prune(c, s, cfg, 100, 1e4, rng);
        CHECK(sum.candidates == 10);
        CHECK(sum.clones == 5);
        for (const auto& e : s.audit) CHECK(e.parent >= 5);
    }

    TEST_CASE("audit log reconciles with K over random passes") {
        Rng rng(123);
        GaussianCloud c = oracle::random_cloud(rng, 20);
        AdcState s = AdcState::for_cloud(c.size(), 2, 1e-8);
        AdcConfig cfg = unit_config();
        cfg.prune_opacity = 0.3;
        const std::size_t k0 = c.size();
        for (int pass = 0; pass < 15; ++pass) {
            for (std::size_t i = 0; i < c.size(); ++i) {
                set_gbar(s, i, rng.uniform(0.0, 4e-4));
                c.opacity_logits[i] = rng.uniform(-2.0, 3.0);
            }
            densify_and_prune(c, s, cfg, 100 * (pass + 1), 1e4, rng);
            for (std::size_t i = 0; i < c.size(); ++i) CHECK(c.opacity(i) >= cfg.prune_opacity);
            if (c.size() > 400) break;
        }
        long long net = static_cast<long long>(k0);
        for (const auto& e : s.audit) {
            if (e.op == AdcOp::Split || e.op == AdcOp::Clone) ++net;
            if (e.op == AdcOp::Prune) --net;
        }
        CHECK(net == static_cast<long long>(c.size()));
        CHECK(s.uid.size() == c.size());
    }

    TEST_CASE("A1 leaves the cloud untouched") {
        Rng rng(5);
        GaussianCloud c = oracle::random_cloud(rng, 12);
        for (double& o : c.opacity_logits) o = -10.0;
        const GaussianCloud before = c;
        AdcState s = AdcState::for_cloud(c.size(), 2, 1e-8);
        for (std::size_t i = 0; i < c.size(); ++i) set_gbar(s, i, 1.0);
        const AdcConfig cfg = apply_ablation(unit_config(), AblationPreset::A1);
        CHECK_FALSE(cfg.scheduled(100));
        densify_and_prune(c, s, cfg, 100, 1e4, rng);
        CHECK(c == before);
        CHECK(s.audit.empty());
    }

    TEST_CASE("ablation presets imply their overrides") {
        const AdcConfig b = unit_config();
        CHECK_FALSE(apply_ablation(b, AblationPreset::A1).enable_all);
        CHECK_FALSE(apply_ablation(b, AblationPreset::A2).enable_split);
        CHECK_FALSE(apply_ablation(b, AblationPreset::A3).enable_clone);
        CHECK_FALSE(apply_ablation(b, AblationPreset::A4).enable_prune);
        CHECK(apply_ablation(b, AblationPreset::A5).interval == 2 * b.interval);
        CHECK(apply_ablation(b, AblationPreset::A6).window_end == b.window_end / 2);
        CHECK(apply_ablation(b, AblationPreset::A7).tau0 == 2.0 * b.tau0);
        CHECK(apply_ablation(b, AblationPreset::A8).tau0 == 0.5 * b.tau0);
        CHECK(ablation_from_string("A5") == AblationPreset::A5);
        CHECK_THROWS_AS(ablation_from_string("A9"), Error);
    }

    TEST_CASE("schedule and validation") {
        AdcConfig cfg;
        cfg.interval = 100;
        cfg.window_start = 500;
        cfg.window_end = 15000;
        CHECK(cfg.scheduled(500));
        CHECK_FALSE(cfg.scheduled(400));
        CHECK_FALSE(cfg.scheduled(550));
        CHECK(cfg.scheduled(15000));
        CHECK_FALSE(cfg.scheduled(15100));
        cfg.split_divisor = 1.0;
        CHECK_THROWS_AS(cfg.validate(), Error);
    }

    TEST_CASE("audit csv layout") {
        std::vector<AdcEvent> ev{{100, AdcOp::Split, 3, {7, 8}, 0.5, 0.25}, {200, AdcOp::Prune, 7, {}, 0.0, 0.25}};
        std::ostringstream os;
        write_audit_csv(os, ev);
        CHECK(os.str() == "iteration,op,parent,children,gbar,tau\n100,split,3,7;8,0.5,0.25\n200,prune,7,,0,0.25\n");
    }
}
