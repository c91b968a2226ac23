// Copyright 2026 The dgslab Authors
// SPDX-License-Identifier: Apache-2.0

#include "dgslab/adc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dgslab/csv.hpp"
#include "dgslab/error.hpp"

namespace dgs {

void AdcConfig::validate() const {
    auto bad = [](const std::string& m) { fail(ErrorCode::Config, "adc: " + m); };
    if (interval < 1) bad("interval must be >= 1");
    if (window_start >= window_end) bad("window start must precede window end");
    if (!(tau0 > 0.0)) bad("tau0 must be > 0");
    if (!(split_divisor > 1.0)) bad("split_divisor must be > 1");
    if (!(ema_rho > 0.0 && ema_rho < 1.0)) bad("ema_rho must be in (0,1)");
    if (!(ema_floor > 0.0)) bad("ema_floor must be > 0");
    if (!(gad_lambda >= 0.0)) bad("gad_lambda must be >= 0");
    if (!(size_threshold >= 0.0)) bad("size_threshold must be >= 0");
    if (!(prune_opacity >= 0.0 && prune_opacity < 1.0)) bad("prune_opacity must be in [0,1)");
    if (!(clone_offset >= 0.0)) bad("clone_offset must be >= 0");
    if (!(growthcap_sharpness >= 0.0)) bad("growthcap_sharpness must be >= 0");
    if (growthcap_sharpness > 0.0 && !(growthcap_kmax > 0.0)) bad("growthcap_kmax must be > 0 when the cap is on");
}

bool AdcConfig::scheduled(std::uint64_t iteration) const {
    return enable_all && iteration >= window_start && iteration <= window_end && iteration % interval == 0;
}

std::string_view to_string(AblationPreset p) {
    static constexpr std::string_view names[] = {"baseline", "A1", "A2", "A3", "A4", "A5", "A6", "A7", "A8"};
    return names[static_cast<int>(p)];
}

AblationPreset ablation_from_string(std::string_view name) {
    for (int i = 0; i <= static_cast<int>(AblationPreset::A8); ++i)
        if (to_string(static_cast<AblationPreset>(i)) == name) return static_cast<AblationPreset>(i);
    fail(ErrorCode::Config, "unknown ablation preset '" + std::string(name) + "'");
}

AdcConfig apply_ablation(AdcConfig cfg, AblationPreset preset) {
    switch (preset) {
        case AblationPreset::Baseline: break;
        case AblationPreset::A1: cfg.enable_all = false; break;
        case AblationPreset::A2: cfg.enable_split = false; break;
        case AblationPreset::A3: cfg.enable_clone = false; break;
        case AblationPreset::A4: cfg.enable_prune = false; break;
        case AblationPreset::A5: cfg.interval *= 2; break;
        case AblationPreset::A6:
            cfg.window_end = std::max(cfg.window_start + 1, cfg.window_end / 2);
            break;
        case AblationPreset::A7: cfg.tau0 *= 2.0; break;
        case AblationPreset::A8: cfg.tau0 *= 0.5; break;
    }
    return cfg;
}

std::string_view to_string(AdcOp op) {
    switch (op) {
        case AdcOp::Split: return "split";
        case AdcOp::Clone: return "clone";
        case AdcOp::Prune: return "prune";
        case AdcOp::Warning: return "warning";
    }
    return "unknown";
}

AdcState AdcState::for_cloud(std::size_t k, int dim, double ema_floor) {
    AdcState s;
    s.delta_ema = ema_floor;
    s.uid.resize(k);
    std::iota(s.uid.begin(), s.uid.end(), std::uint64_t{0});
    s.next_uid = k;
    s.grad_sum.assign(k, 0.0);
    s.grad_count.assign(k, 0);
    s.pos_grad_sum.assign(k * static_cast<std::size_t>(dim), 0.0);
    return s;
}

void AdcState::accumulate(std::span<const double> view_grad, std::span<const std::uint8_t> visible,
                          std::span<const double> position_grad) {
    require(view_grad.size() == size() && visible.size() == size(), "AdcState::accumulate: length must equal K");
    require(position_grad.size() == pos_grad_sum.size(), "AdcState::accumulate: position gradient length");
    for (std::size_t i = 0; i < size(); ++i) {
        if (!visible[i]) continue;
        grad_sum[i] += view_grad[i];
        ++grad_count[i];
    }
    for (std::size_t n = 0; n < position_grad.size(); ++n) pos_grad_sum[n] += position_grad[n];
}

void AdcState::reset_accumulators() {
    std::fill(grad_sum.begin(), grad_sum.end(), 0.0);
    std::fill(grad_count.begin(), grad_count.end(), 0u);
    std::fill(pos_grad_sum.begin(), pos_grad_sum.end(), 0.0);
}

void ema_update(AdcState& state, double loss, double rho, double floor) {
    require(std::isfinite(loss), "ema_update: loss must be finite");
    if (state.has_prev) {
        const double gain = std::max(state.prev_loss - loss, 0.0);
        state.delta_ema = rho * state.delta_ema + (1.0 - rho) * gain;
    }
    state.delta_ema = std::max(state.delta_ema, floor);
    state.prev_loss = loss;
    state.has_prev = true;
}

double gad_threshold(double tau0, double lambda, double k, double n_pixels, double delta_ema) {
    require(tau0 > 0.0 && lambda >= 0.0 && k >= 0.0 && n_pixels > 0.0 && delta_ema > 0.0,
            "gad_threshold: inputs must be positive");
    return tau0 * (1.0 + lambda * k / (n_pixels * delta_ema));
}

double growthcap_factor(double k, double k_max, double sharpness) {
    require(k_max > 0.0, "growthcap_factor: K_max must be > 0");
    if (sharpness <= 0.0) return 1.0;
    const auto sigma = [&](double x) { return 1.0 / (1.0 + std::exp(sharpness * (x - k_max) / k_max)); };
    return std::min(1.0, sigma(k) / sigma(0.0));
}

AdcSummary densify_and_prune(GaussianCloud& cloud, AdcState& state, const AdcConfig& cfg, std::uint64_t iteration,
                             double n_pixels, Rng& rng) {
    const std::size_t k = cloud.size();
    const std::size_t dim = static_cast<std::size_t>(cloud.dim);
    require(state.size() == k && state.uid.size() == k, "densify_and_prune: state size differs from K");

    AdcSummary out;
    out.tau = cfg.gad_lambda > 0.0
                  ? gad_threshold(cfg.tau0, cfg.gad_lambda, static_cast<double>(k), n_pixels, state.delta_ema)
                  : cfg.tau0;
    if (!cfg.enable_all) {
        out.origin.resize(k);
        std::iota(out.origin.begin(), out.origin.end(), std::size_t{0});
        state.reset_accumulators();
        return out;
    }

    std::vector<std::size_t> cand;
    for (std::size_t i = 0; i < k; ++i) {
        if (!(state.mean_gbar(i) > out.tau)) continue;
        const bool big = cloud.scale(i) > cfg.size_threshold;
        if ((big && cfg.enable_split) || (!big && cfg.enable_clone)) cand.push_back(i);
    }
    std::stable_sort(cand.begin(), cand.end(),
                     [&](std::size_t a, std::size_t b) { return state.mean_gbar(a) > state.mean_gbar(b); });
    out.candidates = cand.size();
    std::size_t take = cand.size();
    if (cfg.growthcap_sharpness > 0.0) {
        const double f = growthcap_factor(static_cast<double>(k), cfg.growthcap_kmax, cfg.growthcap_sharpness);
        take = std::min(cand.size(), static_cast<std::size_t>(std::llround(f * static_cast<double>(cand.size()))));
    }
    enum class Act : std::uint8_t { Keep, Split, Clone };
    std::vector<Act> act(k, Act::Keep);
    for (std::size_t n = 0; n < take; ++n)
        act[cand[n]] = cloud.scale(cand[n]) > cfg.size_threshold ? Act::Split : Act::Clone;

    GaussianCloud next;
    next.dim = cloud.dim;
    std::vector<std::size_t> origin;
    std::vector<std::uint64_t> uids;
    const double log_phi = std::log(cfg.split_divisor);
    for (std::size_t i = 0; i < k; ++i) {
        const double gbar = state.mean_gbar(i);
        switch (act[i]) {
            case Act::Keep:
                next.push_back_copy(cloud, i);
                origin.push_back(i);
                uids.push_back(state.uid[i]);
                break;
            case Act::Split: {
                const double sigma = cloud.scale(i);
                AdcEvent ev{iteration, AdcOp::Split, state.uid[i], {}, gbar, out.tau};
                for (int c = 0; c < 2; ++c) {
                    next.push_back_copy(cloud, i);
                    auto p = next.position(next.size() - 1);
                    for (std::size_t d = 0; d < dim; ++d) p[d] += sigma * rng.normal();
                    next.log_scales.back() -= log_phi;
                    origin.push_back(i);
                    uids.push_back(state.next_uid);
                    ev.children.push_back(state.next_uid++);
                }
                state.audit.push_back(std::move(ev));
                ++out.splits;
                break;
            }
            case Act::Clone: {
                next.push_back_copy(cloud, i);
                origin.push_back(i);
                uids.push_back(state.uid[i]);
                next.push_back_copy(cloud, i);
                const double* g = state.pos_grad_sum.data() + i * dim;
                double norm = 0.0;
                for (std::size_t d = 0; d < dim; ++d) norm += g[d] * g[d];
                norm = std::sqrt(norm);
                auto p = next.position(next.size() - 1);
                if (norm > 0.0) {
                    const double step = cfg.clone_offset * cloud.scale(i) / norm;
                    for (std::size_t d = 0; d < dim; ++d) p[d] -= step * g[d];
                }
                origin.push_back(i);
                uids.push_back(state.next_uid);
                state.audit.push_back({iteration, AdcOp::Clone, state.uid[i], {state.next_uid}, gbar, out.tau});
                ++state.next_uid;
                ++out.clones;
                break;
            }
        }
    }

    if (cfg.enable_prune) {
        std::vector<std::size_t> keep;
        for (std::size_t n = 0; n < next.size(); ++n)
            if (!(next.opacity(n) < cfg.prune_opacity)) keep.push_back(n);
        if (keep.empty() && next.size() > 0) {
            std::size_t best = 0;
            for (std::size_t n = 1; n < next.size(); ++n)
                if (next.opacity_logits[n] > next.opacity_logits[best]) best = n;
            keep.push_back(best);
            out.kept_last = true;
            state.audit.push_back({iteration, AdcOp::Warning, uids[best], {}, 0.0, out.tau});
        }
        if (keep.size() < next.size()) {
            std::size_t w = 0;
            for (std::size_t n = 0; n < next.size(); ++n) {
                if (w < keep.size() && keep[w] == n) {
                    ++w;
                    continue;
                }
                state.audit.push_back({iteration, AdcOp::Prune, uids[n], {}, state.mean_gbar(origin[n]), out.tau});
                ++out.prunes;
            }
            next = next.select(keep);
            std::vector<std::size_t> o2;
            std::vector<std::uint64_t> u2;
            for (std::size_t n : keep) {
                o2.push_back(origin[n]);
                u2.push_back(uids[n]);
            }
            origin = std::move(o2);
            uids = std::move(u2);
        }
    }

    cloud = std::move(next);
    state.uid = std::move(uids);
    state.grad_sum.assign(cloud.size(), 0.0);
    state.grad_count.assign(cloud.size(), 0);
    state.pos_grad_sum.assign(cloud.size() * dim, 0.0);
    out.origin = std::move(origin);
    return out;
}

void write_audit_csv(std::ostream& os, std::span<const AdcEvent> events) {
    os << "iteration,op,parent,children,gbar,tau\n";
    for (const auto& e : events) {
        os << e.iteration << ',' << to_string(e.op) << ',' << e.parent << ',';
        for (std::size_t n = 0; n < e.children.size(); ++n) os << (n ? ";" : "") << e.children[n];
        os << ',' << fmt17(e.gbar) << ',' << fmt17(e.tau) << '\n';
    }
}

}  // namespace dgs
