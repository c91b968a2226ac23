// Copyright 2026 The dgslab Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "dgslab/error.hpp"
#include "dgslab/harness.hpp"
#include "dgslab/stats.hpp"

namespace dgs {
namespace {

struct Adam {
    double lr = 0.0;
    std::vector<double> m, v;
    std::uint64_t step = 0;

    void resize(std::size_t n) {
        m.assign(n, 0.0);
        v.assign(n, 0.0);
    }

    void update(std::span<double> p, std::span<const double> g, const OptimizerSettings& o) {
        ++step;
        const double bc1 = 1.0 - std::pow(o.beta1, static_cast<double>(step));
        const double bc2 = 1.0 - std::pow(o.beta2, static_cast<double>(step));
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = o.beta1 * m[i] + (1.0 - o.beta1) * g[i];
            v[i] = o.beta2 * v[i] + (1.0 - o.beta2) * g[i] * g[i];
            p[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + o.eps);
        }
    }

    // Surviving Gaussians keep their moments; new ones start from zero.
    void remap(std::span<const std::ptrdiff_t> source, std::size_t width) {
        std::vector<double> m2(source.size() * width, 0.0), v2(source.size() * width, 0.0);
        for (std::size_t n = 0; n < source.size(); ++n) {
            if (source[n] < 0) continue;
            const auto o = static_cast<std::size_t>(source[n]);
            for (std::size_t c = 0; c < width; ++c) {
                m2[n * width + c] = m[o * width + c];
                v2[n * width + c] = v[o * width + c];
            }
        }
        m = std::move(m2);
        v = std::move(v2);
    }
};

GaussianCloud initial_cloud(const ExperimentConfig& cfg, Rng& rng) {
    GaussianCloud c;
    c.dim = cfg.scene.dim;
    for (std::size_t i = 0; i < cfg.init.count; ++i) {
        double x, y;
        do {
            x = rng.uniform(-1.0, 1.0);
            y = rng.uniform(-1.0, 1.0);
        } while (x * x + y * y > 1.0);
        c.positions.push_back(cfg.init.radius * x);
        c.positions.push_back(cfg.init.radius * y);
        if (c.dim == 3) c.positions.push_back(0.0);
        c.log_scales.push_back(std::log(cfg.init.scale));
        c.opacity_logits.push_back(logit(cfg.init.opacity));
        c.colors.push_back(cfg.init.color);
        c.depth_keys.push_back(0.0);
    }
    return c;
}

class Trainer {
public:
    Trainer(const ExperimentConfig& cfg, const Scene& scene, double tau0)
        : cfg_(cfg),
          scene_(scene),
          sched_(cfg.scaled()),
          adc_cfg_(cfg.adc_config(tau0)),
          rng_(splitmix64(cfg.seed ^ 0x5eed5eed5eed5eedULL)),
          min_log_scale_(std::log(cfg.optimizer.min_scale)),
          max_log_scale_(std::log(cfg.optimizer.max_scale)) {
        cloud_ = initial_cloud(cfg, rng_);
        field_ = DeformationField::initialize(cfg.field, rng_);
        state_ = AdcState::for_cloud(cloud_.size(), cloud_.dim, adc_cfg_.ema_floor);
        jitter_.reset(cloud_.size(), cloud_.dim);
        const OptimizerSettings& o = cfg.optimizer;
        pos_.lr = o.lr_position;
        scale_.lr = o.lr_scale;
        opacity_.lr = o.lr_opacity;
        color_.lr = o.lr_color;
        field_opt_.lr = o.lr_field;
        pos_.resize(cloud_.positions.size());
        scale_.resize(cloud_.size());
        opacity_.resize(cloud_.size());
        color_.resize(cloud_.size());
        field_opt_.resize(field_.parameter_count());
        k_trajectory_.push_back({0, cloud_.size()});
    }

    /// Runs iterations until `end` (exclusive). Returns false on divergence.
    bool run(std::uint64_t end) {
        for (; iter_ < end; ++iter_) {
            if (!step()) {
                diverged_ = true;
                return false;
            }
        }
        return true;
    }

    double quantile_gbar(double q) const {
        std::vector<double> g;
        for (std::size_t i = 0; i < state_.size(); ++i)
            if (state_.grad_count[i] > 0) g.push_back(state_.mean_gbar(i));
        if (g.empty()) return 0.0;
        std::sort(g.begin(), g.end());
        return percentile_sorted(g, q);
    }

    double mean_psnr(const std::vector<ViewSample>& views) const {
        if (views.empty()) return std::numeric_limits<double>::quiet_NaN();
        double s = 0.0;
        for (const auto& v : views) {
            const Image img = render_forward(cloud_, field_, scene_.camera(v.angle), v.t);
            s += image_psnr(img, v.image);
        }
        return s / static_cast<double>(views.size());
    }

    const GaussianCloud& cloud() const { return cloud_; }
    const DeformationField& field() const { return field_; }
    const AdcState& state() const { return state_; }
    const std::vector<KPoint>& k_trajectory() const { return k_trajectory_; }
    std::uint64_t iteration() const { return iter_; }
    bool diverged() const { return diverged_; }
    std::string rng_state() const { return rng_.state(); }
    const ScaledSchedule& schedule() const { return sched_; }

private:
    bool step() {
        const std::uint64_t done = iter_ + 1;
        const bool fine = iter_ >= sched_.coarse_end;
        const ViewSample& view = scene_.train[rng_.index(scene_.train.size())];
        const Camera cam = scene_.camera(view.angle);
        const std::size_t k = cloud_.size();

        DropMask mask;
        const DropMask* maskp = nullptr;
        if (cfg_.reg.ptdrop && fine) {
            PtDropSettings ps{true, cfg_.reg.ptdrop_p_max, sched_.ptdrop_start, sched_.ptdrop_end,
                              cfg_.reg.ptdrop_jitter_weighting};
            if (ptdrop_rate(static_cast<double>(iter_), ps.start, ps.end, ps.p_max) > 0.0) {
                mask = ptdrop_mask(static_cast<double>(iter_), k, jitter_, ps, rng_);
                maskp = &mask;
            }
        }

        Image img;
        try {
            img = fine ? render_forward(cloud_, field_, cam, view.t, maskp)
                       : render_forward(cloud_, std::span<const double>{}, cam, maskp);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::CorruptModel) return false;
            throw;
        }
        const double w = static_cast<double>(img.size());
        double loss = 0.0;
        std::vector<double> lg(img.size());
        for (std::size_t p = 0; p < img.size(); ++p) {
            const double d = img[p] - view.image[p];
            loss += std::abs(d);
            lg[p] = (d > 0.0 ? 1.0 : d < 0.0 ? -1.0 : 0.0) / w;
        }
        loss /= w;
        if (!std::isfinite(loss)) return false;

        RenderGrads g = fine ? render_backward(cloud_, field_, cam, view.t, maskp, lg)
                             : render_backward(cloud_, std::span<const double>{}, cam, maskp, lg);
        state_.accumulate(g.view_grad, g.visible, g.positions);
        std::vector<double> field_grad = fine ? std::move(g.field_params) : std::vector<double>{};

        if (fine && cfg_.reg.variant != SmoothnessVariant::Off) {
            const double lam =
                warmup_weight(static_cast<double>(iter_), sched_.warmup_start, sched_.warmup_end, cfg_.reg.lambda);
            if (lam > 0.0 && k > 1) {
                if (graph_.size() != k || graph_.stale(iter_)) {
                    graph_ = build_neighbor_graph(cloud_, cfg_.reg.k, cfg_.reg.epsilon);
                    graph_.build_iteration = iter_;
                    graph_.rebuild_interval = sched_.graph_rebuild;
                }
                const auto sample = draw_sample(k, cfg_.reg.sample_size, rng_);
                DeformationField::Tape tape;
                const FieldOutput out = field_.forward(cloud_.positions, view.t, tape);
                const SmoothnessResult sm =
                    smoothness_loss(cfg_.reg.variant, cloud_, out.u, out.h, field_.descriptor().embed_width(), graph_,
                                    sample, lam, cfg_.reg.epsilon);
                if (!std::isfinite(sm.loss)) return false;
                field_.backward(tape, cloud_.positions, view.t, sm.grad_u, sm.grad_h, field_grad, {});
            }
        }
        if (cfg_.reg.ptdrop && fine && iter_ % cfg_.reg.jitter_every == 0)
            update_jitter(jitter_, field_.eval(cloud_.positions, view.t).u);

        const OptimizerSettings& o = cfg_.optimizer;
        const double progress =
            static_cast<double>(iter_) / static_cast<double>(std::max<std::uint64_t>(cfg_.iterations, 1));
        const double decay = std::pow(o.lr_decay, progress);
        pos_.lr = o.lr_position * decay;
        field_opt_.lr = o.lr_field * decay;
        pos_.update(cloud_.positions, g.positions, o);
        scale_.update(cloud_.log_scales, g.log_scales, o);
        opacity_.update(cloud_.opacity_logits, g.opacity_logits, o);
        color_.update(cloud_.colors, g.colors, o);
        if (fine) field_opt_.update(field_.parameters(), field_grad, o);
        for (double& c : cloud_.colors) c = std::clamp(c, 0.0, 1.0);
        for (double& s : cloud_.log_scales) s = std::clamp(s, min_log_scale_, max_log_scale_);
        for (double v : cloud_.positions)
            if (!std::isfinite(v)) return false;
        for (double v : cloud_.opacity_logits)
            if (!std::isfinite(v)) return false;

        ema_update(state_, loss, adc_cfg_.ema_rho, adc_cfg_.ema_floor);

        if (adc_cfg_.scheduled(done)) densify(done);
        return true;
    }

    void densify(std::uint64_t done) {
        const std::vector<std::uint64_t> before = state_.uid;
        const AdcSummary sum = densify_and_prune(cloud_, state_, adc_cfg_, done,
                                                 static_cast<double>(scene_.train_pixel_count()), rng_);
        std::unordered_map<std::uint64_t, std::ptrdiff_t> old_index;
        for (std::size_t i = 0; i < before.size(); ++i) old_index[before[i]] = static_cast<std::ptrdiff_t>(i);
        std::vector<std::ptrdiff_t> source(cloud_.size(), -1);
        for (std::size_t n = 0; n < cloud_.size(); ++n) {
            const auto it = old_index.find(state_.uid[n]);
            if (it != old_index.end()) source[n] = it->second;
        }
        const std::size_t dim = static_cast<std::size_t>(cloud_.dim);
        pos_.remap(source, dim);
        scale_.remap(source, 1);
        opacity_.remap(source, 1);
        color_.remap(source, 1);
        jitter_.remap(sum.origin);
        if (graph_.size() > 0) remap_neighbor_graph(graph_, sum.origin);
        k_trajectory_.push_back({done, cloud_.size()});
    }

    const ExperimentConfig& cfg_;
    const Scene& scene_;
    ScaledSchedule sched_;
    AdcConfig adc_cfg_;
    Rng rng_;
    double min_log_scale_, max_log_scale_;
    GaussianCloud cloud_;
    DeformationField field_;
    AdcState state_;
    NeighborGraph graph_;
    JitterEstimate jitter_;
    Adam pos_, scale_, opacity_, color_, field_opt_;
    std::vector<KPoint> k_trajectory_;
    std::uint64_t iter_ = 0;
    bool diverged_ = false;
};

std::uint64_t first_densify_iteration(const AdcConfig& a) {
    const std::uint64_t start = std::max<std::uint64_t>(a.window_start, 1);
    return (start + a.interval - 1) / a.interval * a.interval;
}

}  // namespace

double calibrate_tau0(const ExperimentConfig& cfg) {
    cfg.validate();
    const Scene scene = generate_scene(cfg.scene);
    ExperimentConfig c = apply_preset(cfg, "A1");
    const std::uint64_t until = cfg.calibration_iterations > 0
                                    ? cfg.calibration_iterations
                                    : first_densify_iteration(cfg.adc_config(1.0));
    Trainer t(c, scene, 1.0);
    if (!t.run(std::min(until, cfg.iterations))) fail(ErrorCode::Diverged, "calibration run diverged");
    const double tau = t.quantile_gbar(cfg.adc.tau_quantile);
    if (!(tau > 0.0)) fail(ErrorCode::Config, "calibration observed no view-space gradient; set adc.tau0 explicitly");
    return tau;
}

RunOutput run_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
    cfg.validate();
    const Scene scene = generate_scene(cfg.scene);
    return run_experiment(cfg, scene, opts);
}

RunOutput run_experiment(const ExperimentConfig& cfg, const Scene& scene, const RunOptions& opts) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const double tau0 = cfg.adc.tau0 > 0.0 ? cfg.adc.tau0 : calibrate_tau0(cfg);
    ExperimentConfig resolved = cfg;
    resolved.adc.tau0 = tau0;

    Trainer trainer(resolved, scene, tau0);
    trainer.run(resolved.iterations);

    RunOutput out;
    RunRecord& r = out.record;
    r.scene = scene.spec.name;
    r.preset = cfg.preset;
    r.seed = cfg.seed;
    r.iterations = trainer.iteration();
    r.diverged = trainer.diverged();
    r.tau0 = tau0;
    r.config_hash = config_hash(resolved);
    r.final_k = trainer.cloud().size();
    r.k_trajectory = trainer.k_trajectory();
    if (r.k_trajectory.back().k != r.final_k) r.k_trajectory.push_back({trainer.iteration(), r.final_k});

    const auto& traj = r.k_trajectory;
    const ScaledSchedule& sc = trainer.schedule();
    const double mid = 0.5 * static_cast<double>(sc.adc_start + sc.adc_end);
    double growth_total = 0.0, growth_early = 0.0;
    for (std::size_t n = 1; n < traj.size(); ++n) {
        const double d = static_cast<double>(traj[n].k) - static_cast<double>(traj[n - 1].k);
        if (d <= 0.0) continue;
        growth_total += d;
        if (static_cast<double>(traj[n].iteration) < mid) growth_early += d;
    }
    r.frontload_fraction = growth_total > 0.0 ? growth_early / growth_total : 0.0;

    out.checkpoint.cloud = trainer.cloud();
    out.checkpoint.field = trainer.field();
    out.checkpoint.iteration = trainer.iteration();
    out.checkpoint.rng_state = trainer.rng_state();
    out.checkpoint.config_json = config_to_json(resolved);
    out.audit = trainer.state().audit;

    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    if (r.diverged) {
        r.train_psnr = r.test_psnr = r.gap = r.mean_strain = r.median_strain = nan;
    } else {
        r.train_psnr = trainer.mean_psnr(scene.train);
        r.test_psnr = trainer.mean_psnr(scene.test);
        r.gap = r.train_psnr - r.test_psnr;
        out.strain = measure_strain(out.checkpoint, kStrainTimesteps, NeighborMode::Graph, cfg.reg.k);
        r.mean_strain = out.strain.mean;
        r.median_strain = out.strain.median;
    }
    const auto t1 = std::chrono::steady_clock::now();
    r.wall_ms = opts.reproducible ? 0.0 : std::chrono::duration<double, std::milli>(t1 - t0).count();
    return out;
}

}  // namespace dgs
