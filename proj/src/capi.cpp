// Copyright 2026 The dgslab Authors
// SPDX-License-Identifier: Apache-2.0

#include "dgslab/dgslab.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <new>
#include <sstream>
#include <string>

#include "dgslab/adc.hpp"
#include "dgslab/container.hpp"
#include "dgslab/csv.hpp"
#include "dgslab/error.hpp"
#include "dgslab/harness.hpp"
#include "dgslab/stats.hpp"

struct dgs_config {
    dgs::ExperimentConfig cfg;
};
struct dgs_scene {
    dgs::Scene scene;
};
struct dgs_run {
    dgs::RunOutput out;
};
struct dgs_checkpoint {
    dgs::Checkpoint ckpt;
};

namespace {

thread_local std::string g_last_error;

dgs_status to_status(dgs::ErrorCode c) {
    switch (c) {
        case dgs::ErrorCode::Ok: return DGS_OK;
        case dgs::ErrorCode::Config: return DGS_ERR_CONFIG;
        case dgs::ErrorCode::Contract: return DGS_ERR_CONTRACT;
        case dgs::ErrorCode::CorruptModel: return DGS_ERR_CORRUPT_MODEL;
        case dgs::ErrorCode::Parse: return DGS_ERR_PARSE;
        case dgs::ErrorCode::UnsupportedVersion: return DGS_ERR_UNSUPPORTED_VERSION;
        case dgs::ErrorCode::Io: return DGS_ERR_IO;
        case dgs::ErrorCode::DegenerateSample: return DGS_ERR_DEGENERATE_SAMPLE;
        case dgs::ErrorCode::UndefinedCorrelation: return DGS_ERR_UNDEFINED_CORRELATION;
        case dgs::ErrorCode::NoInformation: return DGS_ERR_NO_INFORMATION;
        case dgs::ErrorCode::Diverged: return DGS_ERR_DIVERGED;
    }
    return DGS_ERR_INTERNAL;
}

template <class F>
dgs_status guarded(F&& body) {
    g_last_error.clear();
    try {
        body();
        return DGS_OK;
    } catch (const dgs::Error& e) {
        g_last_error = e.what();
        return to_status(e.code());
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
    } catch (const std::exception& e) {
        g_last_error = e.what();
    } catch (...) {
        g_last_error = "unknown exception";
    }
    return DGS_ERR_INTERNAL;
}

void need(const void* p, const char* what) {
    if (p == nullptr) dgs::fail(dgs::ErrorCode::Contract, std::string(what) + " must not be NULL");
}

char* dup(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out == nullptr) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

std::vector<double> copy(const double* p, std::size_t n) { return n ? std::vector<double>(p, p + n) : std::vector<double>{}; }

dgs::PairedSample paired(const double* a, const double* b, size_t n) {
    need(a, "a");
    need(b, "b");
    dgs::PairedSample s;
    s.a = copy(a, n);
    s.b = copy(b, n);
    return s;
}

}  // namespace

extern "C" {

const char* dgs_version(void) { return "1.0.0"; }

const char* dgs_last_error(void) { return g_last_error.c_str(); }

const char* dgs_status_name(dgs_status status) {
    switch (status) {
        case DGS_OK: return "ok";
        case DGS_ERR_CONFIG: return "config error";
        case DGS_ERR_CONTRACT: return "contract violation";
        case DGS_ERR_CORRUPT_MODEL: return "corrupt model";
        case DGS_ERR_PARSE: return "parse error";
        case DGS_ERR_UNSUPPORTED_VERSION: return "unsupported version";
        case DGS_ERR_IO: return "i/o error";
        case DGS_ERR_DEGENERATE_SAMPLE: return "degenerate sample";
        case DGS_ERR_UNDEFINED_CORRELATION: return "undefined correlation";
        case DGS_ERR_NO_INFORMATION: return "no information";
        case DGS_ERR_DIVERGED: return "diverged";
        case DGS_ERR_INTERNAL: return "internal error";
    }
    return "unknown";
}

void dgs_string_free(char* s) { std::free(s); }

dgs_status dgs_config_default(const char* scene_kind, uint64_t seed, dgs_config** out) {
    return guarded([&] {
        need(scene_kind, "scene_kind");
        need(out, "out");
        *out = new dgs_config{dgs::default_config(dgs::scene_kind_from_string(scene_kind), seed)};
    });
}

dgs_status dgs_config_from_json(const char* json, dgs_config** out) {
    return guarded([&] {
        need(json, "json");
        need(out, "out");
        *out = new dgs_config{dgs::config_from_json(json)};
    });
}

dgs_status dgs_config_load(const char* path, dgs_config** out) {
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        *out = new dgs_config{dgs::load_config(path)};
    });
}

dgs_status dgs_config_apply_preset(dgs_config* cfg, const char* preset) {
    return guarded([&] {
        need(cfg, "cfg");
        need(preset, "preset");
        cfg->cfg = dgs::apply_preset(cfg->cfg, preset);
    });
}

dgs_status dgs_config_to_json(const dgs_config* cfg, char** out) {
    return guarded([&] {
        need(cfg, "cfg");
        need(out, "out");
        *out = dup(dgs::config_to_json(cfg->cfg));
    });
}

void dgs_config_free(dgs_config* cfg) { delete cfg; }

dgs_status dgs_scene_generate(const dgs_config* cfg, dgs_scene** out) {
    return guarded([&] {
        need(cfg, "cfg");
        need(out, "out");
        *out = new dgs_scene{dgs::generate_scene(cfg->cfg.scene)};
    });
}

dgs_status dgs_scene_save(const dgs_scene* scene, const char* path) {
    return guarded([&] {
        need(scene, "scene");
        need(path, "path");
        dgs::save_scene(scene->scene, path);
    });
}

dgs_status dgs_scene_load(const char* path, dgs_scene** out) {
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        *out = new dgs_scene{dgs::load_scene(path)};
    });
}

dgs_status dgs_scene_images_csv(const dgs_scene* scene, char** out) {
    return guarded([&] {
        need(scene, "scene");
        need(out, "out");
        std::ostringstream os;
        os << "split,index,theta,t";
        for (int p = 0; p < scene->scene.spec.width; ++p) os << ",p" << p;
        os << '\n';
        auto dump = [&](const char* split, const std::vector<dgs::ViewSample>& views) {
            for (std::size_t i = 0; i < views.size(); ++i) {
                os << split << ',' << i << ',' << dgs::fmt17(views[i].angle) << ',' << dgs::fmt17(views[i].t);
                for (double v : views[i].image) os << ',' << dgs::fmt17(v);
                os << '\n';
            }
        };
        dump("train", scene->scene.train);
        dump("test", scene->scene.test);
        *out = dup(os.str());
    });
}

dgs_status dgs_scene_test_times(const dgs_scene* scene, double* times, size_t capacity, size_t* count) {
    return guarded([&] {
        need(scene, "scene");
        need(count, "count");
        const auto& test = scene->scene.test;
        *count = test.size();
        if (times == nullptr) return;
        for (std::size_t i = 0; i < test.size() && i < capacity; ++i) times[i] = test[i].t;
    });
}

void dgs_scene_free(dgs_scene* scene) { delete scene; }

dgs_status dgs_train(const dgs_config* cfg, int reproducible, dgs_run** out) {
    return guarded([&] {
        need(cfg, "cfg");
        need(out, "out");
        *out = new dgs_run{dgs::run_experiment(cfg->cfg, dgs::RunOptions{reproducible != 0})};
    });
}

dgs_status dgs_run_record_get(const dgs_run* run, dgs_run_record* out) {
    return guarded([&] {
        need(run, "run");
        need(out, "out");
        const dgs::RunRecord& r = run->out.record;
        *out = dgs_run_record{r.seed,       r.iterations,  r.final_k,       r.train_psnr, r.test_psnr, r.gap,
                              r.mean_strain, r.median_strain, r.wall_ms, r.tau0,       r.diverged ? 1 : 0};
    });
}

dgs_status dgs_run_results_csv(const dgs_run* run, char** out) {
    return guarded([&] {
        need(run, "run");
        need(out, "out");
        std::ostringstream os;
        dgs::write_results_header(os);
        dgs::write_results_row(os, run->out.record);
        *out = dup(os.str());
    });
}

dgs_status dgs_run_audit_csv(const dgs_run* run, char** out) {
    return guarded([&] {
        need(run, "run");
        need(out, "out");
        std::ostringstream os;
        dgs::write_audit_csv(os, run->out.audit);
        *out = dup(os.str());
    });
}

dgs_status dgs_run_save_checkpoint(const dgs_run* run, const char* path) {
    return guarded([&] {
        need(run, "run");
        need(path, "path");
        dgs::save_checkpoint(run->out.checkpoint, path);
    });
}

void dgs_run_free(dgs_run* run) { delete run; }

dgs_status dgs_checkpoint_load(const char* path, dgs_checkpoint** out) {
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        *out = new dgs_checkpoint{dgs::load_checkpoint(path)};
    });
}

dgs_status dgs_checkpoint_save(const dgs_checkpoint* ckpt, const char* path) {
    return guarded([&] {
        need(ckpt, "ckpt");
        need(path, "path");
        dgs::save_checkpoint(ckpt->ckpt, path);
    });
}

dgs_status dgs_checkpoint_info(const dgs_checkpoint* ckpt, uint64_t* gaussians, uint64_t* iteration) {
    return guarded([&] {
        need(ckpt, "ckpt");
        if (gaussians) *gaussians = ckpt->ckpt.cloud.size();
        if (iteration) *iteration = ckpt->ckpt.iteration;
    });
}

void dgs_checkpoint_free(dgs_checkpoint* ckpt) { delete ckpt; }

dgs_status dgs_measure_strain(const dgs_checkpoint* ckpt, const double* timesteps, size_t n_timesteps,
                              const char* mode, size_t k, dgs_strain_summary* out) {
    return guarded([&] {
        need(ckpt, "ckpt");
        need(out, "out");
        std::vector<double> ts = timesteps ? copy(timesteps, n_timesteps)
                                           : std::vector<double>(std::begin(dgs::kStrainTimesteps),
                                                                 std::end(dgs::kStrainTimesteps));
        const dgs::NeighborMode m = mode ? dgs::neighbor_mode_from_string(mode) : dgs::NeighborMode::Graph;
        const dgs::StrainReport r = dgs::measure_strain(ckpt->ckpt, ts, m, k);
        *out = dgs_strain_summary{r.k, r.per_gaussian.size(), r.mean, r.median, r.p1, r.p99, r.min, r.max};
    });
}

dgs_status dgs_suite_run(const char* suite_path, const char* output_dir, int reproducible, dgs_progress_fn progress,
                         void* user, size_t* flagged) {
    return guarded([&] {
        need(suite_path, "suite_path");
        dgs::SuiteSpec spec = dgs::load_suite(suite_path);
        if (output_dir) spec.output_dir = output_dir;
        if (reproducible >= 0) spec.reproducible = reproducible != 0;
        if (spec.output_dir.empty()) dgs::fail(dgs::ErrorCode::Config, "suite: output_dir is required");
        dgs::ProgressFn fn;
        if (progress) {
            fn = [&](const dgs::RunRecord& r) {
                progress(r.scene.c_str(), r.preset.c_str(), r.seed, r.final_k, r.gap, r.diverged ? 1 : 0, user);
            };
        }
        const dgs::SuiteResult res = dgs::run_suite(spec, fn);
        if (flagged) {
            *flagged = 0;
            for (const auto& r : res.rows) *flagged += r.diverged || !r.error.empty() ? 1 : 0;
        }
    });
}

dgs_status dgs_paired_effect(const double* a, const double* b, size_t n, dgs_paired_effect_result* out) {
    return guarded([&] {
        need(out, "out");
        try {
            const dgs::PairedEffect e = dgs::paired_effect(paired(a, b, n));
            *out = dgs_paired_effect_result{e.n, e.mean_difference, e.sd_difference, e.cohens_d, e.t, e.p};
        } catch (const dgs::DegenerateSampleError& e) {
            *out = dgs_paired_effect_result{n, e.mean_difference(), 0.0, 0.0, 0.0, 1.0};
            throw;
        }
    });
}

dgs_status dgs_wilcoxon_exact(const double* a, const double* b, size_t n, dgs_wilcoxon_result* out) {
    return guarded([&] {
        need(out, "out");
        const dgs::WilcoxonResult w = dgs::wilcoxon_exact(paired(a, b, n));
        *out = dgs_wilcoxon_result{w.n_used, w.w_plus, w.w_minus, w.w, w.p};
    });
}

dgs_status dgs_correlate(const double* x, const double* y, size_t n, size_t resamples, uint64_t seed,
                         dgs_correlation_result* out) {
    return guarded([&] {
        need(x, "x");
        need(y, "y");
        need(out, "out");
        const auto xs = copy(x, n), ys = copy(y, n);
        const dgs::CorrelationResult c = dgs::correlate(xs, ys, resamples, seed);
        *out = dgs_correlation_result{c.pearson, c.spearman, c.ci_low, c.ci_high, c.resamples};
    });
}

dgs_status dgs_fit_count_gap(const double* k, const double* gap, size_t n, dgs_count_gap_fit* out) {
    return guarded([&] {
        need(k, "k");
        need(gap, "gap");
        need(out, "out");
        std::vector<dgs::CountGapPoint> pts;
        for (size_t i = 0; i < n; ++i) pts.push_back({k[i], gap[i]});
        const dgs::CountGapFit f = dgs::fit_count_gap(pts);
        *out = dgs_count_gap_fit{f.n, f.slope, f.intercept, f.r, f.rho, f.has_endpoint_r ? 1 : 0, f.endpoint_r};
    });
}

dgs_status dgs_stats_report(const char* results_csv, char** out) {
    return guarded([&] {
        need(results_csv, "results_csv");
        need(out, "out");
        std::ifstream in(results_csv, std::ios::binary);
        if (!in) dgs::fail(dgs::ErrorCode::Io, std::string("cannot open ") + results_csv);
        std::ostringstream text;
        text << in.rdbuf();
        *out = dup(dgs::stats_report(dgs::read_results_csv(text.str())));
    });
}

dgs_status dgs_gad_threshold(double tau0, double lambda, double k, double n_pixels, double delta_ema, double* out) {
    return guarded([&] {
        need(out, "out");
        *out = dgs::gad_threshold(tau0, lambda, k, n_pixels, delta_ema);
    });
}

dgs_status dgs_growthcap_factor(double k, double k_max, double sharpness, double* out) {
    return guarded([&] {
        need(out, "out");
        *out = dgs::growthcap_factor(k, k_max, sharpness);
    });
}

dgs_status dgs_image_psnr(const double* a, const double* b, size_t n, double peak, double* out) {
    return guarded([&] {
        need(a, "a");
        need(b, "b");
        need(out, "out");
        *out = dgs::image_psnr(std::span<const double>(a, n), std::span<const double>(b, n), peak);
    });
}

}  // extern "C"
