/* Copyright 2026 The dgslab Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface to the dgslab shared library. Every function returns a
 * dgs_status; on failure the message is available from dgs_last_error() on
 * the calling thread until that thread's next call. Objects are opaque and
 * released with their matching *_free function. Strings returned through
 * char** outputs are owned by the caller and released with dgs_string_free.
 */
#ifndef DGSLAB_DGSLAB_H
#define DGSLAB_DGSLAB_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define DGS_API __declspec(dllexport)
#else
#define DGS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dgs_status {
    DGS_OK = 0,
    DGS_ERR_CONFIG = 1,
    DGS_ERR_CONTRACT = 2,
    DGS_ERR_CORRUPT_MODEL = 3,
    DGS_ERR_PARSE = 4,
    DGS_ERR_UNSUPPORTED_VERSION = 5,
    DGS_ERR_IO = 6,
    DGS_ERR_DEGENERATE_SAMPLE = 7,
    DGS_ERR_UNDEFINED_CORRELATION = 8,
    DGS_ERR_NO_INFORMATION = 9,
    DGS_ERR_DIVERGED = 10,
    DGS_ERR_INTERNAL = 11
} dgs_status;

typedef struct dgs_config dgs_config;
typedef struct dgs_scene dgs_scene;
typedef struct dgs_run dgs_run;
typedef struct dgs_checkpoint dgs_checkpoint;

DGS_API const char* dgs_version(void);
DGS_API const char* dgs_last_error(void);
DGS_API const char* dgs_status_name(dgs_status status);
DGS_API void dgs_string_free(char* s);

/* ---- configuration ---- */
DGS_API dgs_status dgs_config_default(const char* scene_kind, uint64_t seed, dgs_config** out);
DGS_API dgs_status dgs_config_from_json(const char* json, dgs_config** out);
DGS_API dgs_status dgs_config_load(const char* path, dgs_config** out);
DGS_API dgs_status dgs_config_apply_preset(dgs_config* cfg, const char* preset);
DGS_API dgs_status dgs_config_to_json(const dgs_config* cfg, char** out);
DGS_API void dgs_config_free(dgs_config* cfg);

/* ---- scenes ---- */
DGS_API dgs_status dgs_scene_generate(const dgs_config* cfg, dgs_scene** out);
DGS_API dgs_status dgs_scene_save(const dgs_scene* scene, const char* path);
DGS_API dgs_status dgs_scene_load(const char* path, dgs_scene** out);
/* One CSV row per view: split,index,theta,t,p0..p{W-1}. */
DGS_API dgs_status dgs_scene_images_csv(const dgs_scene* scene, char** out);
DGS_API dgs_status dgs_scene_test_times(const dgs_scene* scene, double* times, size_t capacity, size_t* count);
DGS_API void dgs_scene_free(dgs_scene* scene);

/* ---- training ---- */
typedef struct dgs_run_record {
    uint64_t seed;
    uint64_t iterations;
    uint64_t final_k;
    double train_psnr;
    double test_psnr;
    double gap;
    double mean_strain;
    double median_strain;
    double wall_ms;
    double tau0;
    int diverged;
} dgs_run_record;

/* Trains one configuration. A diverged run still returns DGS_OK with
 * record.diverged set; the caller decides how to report it. */
DGS_API dgs_status dgs_train(const dgs_config* cfg, int reproducible, dgs_run** out);
DGS_API dgs_status dgs_run_record_get(const dgs_run* run, dgs_run_record* out);
/* Results CSV (header plus one row). */
DGS_API dgs_status dgs_run_results_csv(const dgs_run* run, char** out);
DGS_API dgs_status dgs_run_audit_csv(const dgs_run* run, char** out);
DGS_API dgs_status dgs_run_save_checkpoint(const dgs_run* run, const char* path);
DGS_API void dgs_run_free(dgs_run* run);

/* ---- checkpoints and strain ---- */
DGS_API dgs_status dgs_checkpoint_load(const char* path, dgs_checkpoint** out);
DGS_API dgs_status dgs_checkpoint_save(const dgs_checkpoint* ckpt, const char* path);
DGS_API dgs_status dgs_checkpoint_info(const dgs_checkpoint* ckpt, uint64_t* gaussians, uint64_t* iteration);
DGS_API void dgs_checkpoint_free(dgs_checkpoint* ckpt);

typedef struct dgs_strain_summary {
    uint64_t k;
    uint64_t count;
    double mean;
    double median;
    double p1;
    double p99;
    double min;
    double max;
} dgs_strain_summary;

/* mode is "graph" or "exhaustive"; timesteps may be NULL for the default
 * four evaluation times. */
DGS_API dgs_status dgs_measure_strain(const dgs_checkpoint* ckpt, const double* timesteps, size_t n_timesteps,
                                      const char* mode, size_t k, dgs_strain_summary* out);

/* ---- suites ---- */
typedef void (*dgs_progress_fn)(const char* scene, const char* preset, uint64_t seed, uint64_t final_k, double gap,
                                int diverged, void* user);

/* output_dir may be NULL to keep the suite file's directory; reproducible < 0
 * keeps the file's setting. flagged receives the number of failed rows. */
DGS_API dgs_status dgs_suite_run(const char* suite_path, const char* output_dir, int reproducible,
                                 dgs_progress_fn progress, void* user, size_t* flagged);

/* ---- statistics ---- */
typedef struct dgs_paired_effect_result {
    uint64_t n;
    double mean_difference;
    double sd_difference;
    double cohens_d;
    double t;
    double p;
} dgs_paired_effect_result;

typedef struct dgs_wilcoxon_result {
    uint64_t n_used;
    double w_plus;
    double w_minus;
    double w;
    double p;
} dgs_wilcoxon_result;

typedef struct dgs_correlation_result {
    double pearson;
    double spearman;
    double ci_low;
    double ci_high;
    uint64_t resamples;
} dgs_correlation_result;

typedef struct dgs_count_gap_fit {
    uint64_t n;
    double slope;
    double intercept;
    double r;
    double rho;
    int has_endpoint_r;
    double endpoint_r;
} dgs_count_gap_fit;

/* Differences are b - a. On DGS_ERR_DEGENERATE_SAMPLE, out->mean_difference
 * still holds the common difference. */
DGS_API dgs_status dgs_paired_effect(const double* a, const double* b, size_t n, dgs_paired_effect_result* out);
DGS_API dgs_status dgs_wilcoxon_exact(const double* a, const double* b, size_t n, dgs_wilcoxon_result* out);
DGS_API dgs_status dgs_correlate(const double* x, const double* y, size_t n, size_t resamples, uint64_t seed,
                                 dgs_correlation_result* out);
DGS_API dgs_status dgs_fit_count_gap(const double* k, const double* gap, size_t n, dgs_count_gap_fit* out);
/* Reads a results CSV file and produces the key = value comparison report. */
DGS_API dgs_status dgs_stats_report(const char* results_csv, char** out);

DGS_API dgs_status dgs_gad_threshold(double tau0, double lambda, double k, double n_pixels, double delta_ema,
                                     double* out);
DGS_API dgs_status dgs_growthcap_factor(double k, double k_max, double sharpness, double* out);
DGS_API dgs_status dgs_image_psnr(const double* a, const double* b, size_t n, double peak, double* out);

#ifdef __cplusplus
}
#endif

#endif /* DGSLAB_DGSLAB_H */
