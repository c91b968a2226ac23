// Copyright 2026 The dgslab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "dgslab/adc.hpp"
#include "dgslab/checkpoint.hpp"
#include "dgslab/diagnostics.hpp"
#include "dgslab/field.hpp"
#include "dgslab/regularizers.hpp"
#include "dgslab/scenes.hpp"

namespace dgs {

// Iteration constants of the reference 20K-iteration schedule. Every one is
// multiplied by s = iterations / reference_iterations before use.
struct Schedule {
    double reference_iterations = 20000;
    double coarse_end = 3000;
    double adc_interval = 100;
    double adc_start = 500;
    double adc_end = 15000;
    double warmup_start = 3000;
    double warmup_end = 10000;
    double ptdrop_start = 5000;
    double ptdrop_end = 12000;
    double graph_rebuild = 500;
};

struct ScaledSchedule {
    double s = 1.0;
    std::uint64_t coarse_end = 0;
    std::uint64_t adc_interval = 1;
    std::uint64_t adc_start = 0;
    std::uint64_t adc_end = 1;
    double warmup_start = 0;
    double warmup_end = 1;
    double ptdrop_start = 0;
    double ptdrop_end = 1;
    std::uint64_t graph_rebuild = 1;
};

struct AdcSettings {
    double tau0 = 0.0;              // <= 0 means calibrate
    double tau_quantile = 0.7;
    double size_threshold = 0.05;
    double prune_opacity = 0.005;
    double split_divisor = 1.6;
    double clone_offset = 0.5;
    bool enable_split = true;
    bool enable_clone = true;
    bool enable_prune = true;
    bool enable_all = true;
    bool gad = false;
    double gad_lambda = 0.05;
    double ema_rho = 0.99;
    double ema_floor = 1e-8;
    bool growthcap = false;
    double growthcap_kmax = 400.0;
    double growthcap_sharpness = 10.0;
    double interval_factor = 1.0;   // A5
    double window_end_factor = 1.0; // A6
    double tau_factor = 1.0;        // A7 / A8
};

struct RegSettings {
    SmoothnessVariant variant = SmoothnessVariant::Off;
    double lambda = 0.05;
    std::size_t k = 8;
    double epsilon = kDefaultEpsilon;
    std::size_t sample_size = 256;
    bool ptdrop = false;
    double ptdrop_p_max = 0.3;
    bool ptdrop_jitter_weighting = true;
    std::uint64_t jitter_every = 5;
};

struct OptimizerSettings {
    double lr_position = 2e-3;
    double lr_scale = 5e-3;
    double lr_opacity = 2e-2;
    double lr_color = 1e-2;
    double lr_field = 2e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-15;
    double min_scale = 0.025;  // world units; training clamps Gaussian scales to [min_scale, max_scale]
    double max_scale = 1.0;
    double lr_decay = 0.1;  // position and field learning rates decay exponentially to lr * lr_decay
};

struct InitSettings {
    std::size_t count = 24;
    double radius = 0.9;
    double scale = 0.12;
    double opacity = 0.5;
    double color = 0.5;
};

struct ExperimentConfig {
    std::string preset = "baseline";
    SceneSpec scene;
    std::uint64_t iterations = 3000;
    std::uint64_t seed = 1;
    Schedule schedule;
    AdcSettings adc;
    RegSettings reg;
    OptimizerSettings optimizer;
    InitSettings init;
    FieldDescriptor field;
    std::uint64_t calibration_iterations = 0;  // 0 means up to the first scheduled densification

    void validate() const;
    ScaledSchedule scaled() const;
    AdcConfig adc_config(double tau0) const;
};

/// All recognised preset names: baseline, A1..A8, gad, eer_strain,
/// eer_on_embed, eer_arap, eer_no_norm, ptdrop, growthcap, gad_eer, full.
const std::vector<std::string>& preset_names();
/// Switches the features named by the preset on top of `cfg`. Magnitudes
/// (EER lambda, GAD lambda, cap size) come from `cfg` itself.
ExperimentConfig apply_preset(ExperimentConfig cfg, const std::string& name);

std::string config_to_json(const ExperimentConfig& cfg, int indent = 2);
ExperimentConfig config_from_json(const std::string& text);  // throws Config / Parse
ExperimentConfig load_config(const std::string& path);
std::uint64_t config_hash(const ExperimentConfig& cfg);

/// Default desk-scale configuration for a scene generator and seed.
ExperimentConfig default_config(SceneKind kind, std::uint64_t seed);

struct KPoint {
    std::uint64_t iteration = 0;
    std::size_t k = 0;
};

struct RunRecord {
    std::string scene;
    std::string preset;
    std::uint64_t seed = 0;
    std::uint64_t iterations = 0;
    double train_psnr = 0.0;
    double test_psnr = 0.0;
    double gap = 0.0;
    std::size_t final_k = 0;
    double mean_strain = 0.0;
    double median_strain = 0.0;
    double wall_ms = 0.0;
    bool diverged = false;
    std::string error;  // non-empty when the run failed outright
    double tau0 = 0.0;
    std::uint64_t config_hash = 0;
    std::vector<KPoint> k_trajectory;
    double frontload_fraction = 0.0;  // growth before the ADC window midpoint / total growth
};

struct RunOutput {
    RunRecord record;
    Checkpoint checkpoint;
    std::vector<AdcEvent> audit;
    StrainReport strain;
};

struct RunOptions {
    bool reproducible = false;  // write wall_ms = 0
};

/// tau0 as the configured quantile of mean view-space gradient magnitude seen
/// by the initial cloud during a short run with densification off.
double calibrate_tau0(const ExperimentConfig& cfg);

/// Trains `cfg` (preset already applied). A non-positive tau0 triggers
/// calibration first.
RunOutput run_experiment(const ExperimentConfig& cfg, const RunOptions& opts = {});
/// Same, on an already generated scene.
RunOutput run_experiment(const ExperimentConfig& cfg, const Scene& scene, const RunOptions& opts = {});

struct SuiteSpec {
    ExperimentConfig base;
    std::vector<std::string> presets;
    std::vector<SceneKind> scenes;
    std::vector<std::uint64_t> seeds;
    std::string output_dir;
    bool reproducible = false;
    bool save_checkpoints = true;
    bool save_audit = true;
    unsigned threads = 0;  // 0 = hardware concurrency
};

SuiteSpec suite_from_json(const std::string& text);
SuiteSpec load_suite(const std::string& path);

struct SuiteResult {
    std::vector<RunRecord> rows;  // preset-major, then scene, then seed
    std::vector<StrainReport> strain;
    std::string report;           // key = value text
};

using ProgressFn = std::function<void(const RunRecord&)>;

/// Runs every (preset, scene, seed) cell and writes results.csv, report.txt,
/// strain.csv, k_trajectory.csv, count_gap.csv, plus audit logs and
/// checkpoints when enabled. Rows are ordered as the suite spec lists them.
SuiteResult run_suite(const SuiteSpec& spec, const ProgressFn& progress = {});

void write_results_header(std::ostream& os);
void write_results_row(std::ostream& os, const RunRecord& r);
std::vector<RunRecord> read_results_csv(const std::string& text);

/// Aggregates, paired comparisons against baseline, the count-gap fit and
/// strain comparisons, as key = value lines.
std::string stats_report(const std::vector<RunRecord>& rows, const std::vector<StrainReport>& strain = {});

}  // namespace dgs
