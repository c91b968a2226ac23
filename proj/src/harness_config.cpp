// Copyright 2026 The dgslab Authors
// SPDX-License-Identifier: Apache-2.0

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <initializer_list>

#include "dgslab/container.hpp"
#include "dgslab/error.hpp"
#include "dgslab/harness.hpp"

namespace dgs {

using json = nlohmann::ordered_json;

namespace {

[[noreturn]] void config_error(const std::string& m) { fail(ErrorCode::Config, "config: " + m); }

void check_keys(const json& j, const char* where, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) config_error(std::string(where) + " must be an object");
    for (const auto& [key, _] : j.items()) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
            config_error("unknown key '" + key + "' in " + where);
    }
}

template <class T>
void read(const json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        config_error(std::string("bad value for '") + key + "': " + e.what());
    }
}

std::uint64_t scale_count(double reference, double s) {
    return static_cast<std::uint64_t>(std::llround(reference * s));
}

}  // namespace

ScaledSchedule ExperimentConfig::scaled() const {
    ScaledSchedule out;
    const Schedule& p = schedule;
    out.s = static_cast<double>(iterations) / p.reference_iterations;
    out.coarse_end = scale_count(p.coarse_end, out.s);
    out.adc_interval = std::max<std::uint64_t>(1, scale_count(p.adc_interval * adc.interval_factor, out.s));
    out.adc_start = std::max(scale_count(p.adc_start, out.s), out.coarse_end);
    out.adc_end = std::max(out.adc_start + 1, scale_count(p.adc_end * adc.window_end_factor, out.s));
    out.warmup_start = p.warmup_start * out.s;
    out.warmup_end = p.warmup_end * out.s;
    out.ptdrop_start = p.ptdrop_start * out.s;
    out.ptdrop_end = p.ptdrop_end * out.s;
    out.graph_rebuild = std::max<std::uint64_t>(1, scale_count(p.graph_rebuild, out.s));
    return out;
}

AdcConfig ExperimentConfig::adc_config(double tau0) const {
    const ScaledSchedule sc = scaled();
    AdcConfig c;
    c.interval = sc.adc_interval;
    c.window_start = sc.adc_start;
    c.window_end = sc.adc_end;
    c.tau0 = tau0 * adc.tau_factor;
    c.size_threshold = adc.size_threshold;
    c.prune_opacity = adc.prune_opacity;
    c.split_divisor = adc.split_divisor;
    c.clone_offset = adc.clone_offset;
    c.enable_split = adc.enable_split;
    c.enable_clone = adc.enable_clone;
    c.enable_prune = adc.enable_prune;
    c.enable_all = adc.enable_all;
    c.gad_lambda = adc.gad ? adc.gad_lambda : 0.0;
    c.ema_rho = adc.ema_rho;
    c.ema_floor = adc.ema_floor;
    c.growthcap_kmax = adc.growthcap_kmax;
    c.growthcap_sharpness = adc.growthcap ? adc.growthcap_sharpness : 0.0;
    return c;
}

void ExperimentConfig::validate() const {
    scene.validate();
    field.validate();
    if (field.dim != scene.dim) config_error("field.dim must equal scene.dim");
    const Schedule& p = schedule;
    if (!(p.reference_iterations > 0.0)) config_error("schedule.reference_iterations must be > 0");
    for (double v : {p.coarse_end, p.adc_interval, p.adc_start, p.adc_end, p.warmup_start, p.warmup_end,
                     p.ptdrop_start, p.ptdrop_end, p.graph_rebuild})
        if (!(v >= 0.0) || v > p.reference_iterations) config_error("schedule entries must lie in [0, reference]");
    if (!(p.adc_interval >= 1.0) || !(p.graph_rebuild >= 1.0)) config_error("intervals must be >= 1");
    if (!(p.adc_start < p.adc_end)) config_error("schedule.adc_start must precede adc_end");
    if (!(p.warmup_start < p.warmup_end)) config_error("schedule.warmup_start must precede warmup_end");
    if (!(p.ptdrop_start < p.ptdrop_end)) config_error("schedule.ptdrop_start must precede ptdrop_end");
    if (!(adc.tau0 >= 0.0) || !std::isfinite(adc.tau0)) config_error("adc.tau0 must be >= 0 (0 = calibrate)");
    if (!(adc.tau_quantile > 0.0 && adc.tau_quantile < 1.0)) config_error("adc.tau_quantile must be in (0,1)");
    if (!(adc.interval_factor > 0.0) || !(adc.window_end_factor > 0.0) || !(adc.tau_factor > 0.0))
        config_error("adc factors must be > 0");
    if (!(adc.gad_lambda >= 0.0)) config_error("adc.gad_lambda must be >= 0");
    if (adc.growthcap && !(adc.growthcap_kmax > 0.0)) config_error("adc.growthcap_kmax must be > 0");
    adc_config(1.0).validate();
    if (reg.k < 1) config_error("reg.k must be >= 1");
    if (!(reg.lambda >= 0.0)) config_error("reg.lambda must be >= 0");
    if (!(reg.epsilon > 0.0)) config_error("reg.epsilon must be > 0");
    if (reg.sample_size < 1) config_error("reg.sample_size must be >= 1");
    if (!(reg.ptdrop_p_max >= 0.0 && reg.ptdrop_p_max < 1.0)) config_error("reg.ptdrop_p_max must be in [0,1)");
    if (reg.jitter_every < 1) config_error("reg.jitter_every must be >= 1");
    const OptimizerSettings& o = optimizer;
    for (double lr : {o.lr_position, o.lr_scale, o.lr_opacity, o.lr_color, o.lr_field})
        if (!(lr >= 0.0) || !std::isfinite(lr)) config_error("learning rates must be finite and >= 0");
    if (!(o.beta1 >= 0.0 && o.beta1 < 1.0) || !(o.beta2 >= 0.0 && o.beta2 < 1.0) || !(o.eps > 0.0))
        config_error("optimizer betas must be in [0,1), eps > 0");
    if (!(o.min_scale > 0.0 && o.min_scale < o.max_scale) || !std::isfinite(o.max_scale))
        config_error("optimizer scales must satisfy 0 < min_scale < max_scale");
    if (!(o.lr_decay > 0.0 && o.lr_decay <= 1.0)) config_error("optimizer.lr_decay must be in (0, 1]");
    if (init.count < 1) config_error("init.count must be >= 1");
    if (!(init.radius > 0.0) || !(init.scale > 0.0)) config_error("init.radius and init.scale must be > 0");
    if (!(init.opacity > 0.0 && init.opacity < 1.0)) config_error("init.opacity must be in (0,1)");
    if (!(init.color >= 0.0 && init.color <= 1.0)) config_error("init.color must be in [0,1]");
    if (std::find(preset_names().begin(), preset_names().end(), preset) == preset_names().end())
        config_error("unknown preset '" + preset + "'");
}

const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names = {
        "baseline", "A1",          "A2",           "A3",        "A4",          "A5",     "A6",
        "A7",       "A8",          "gad",          "eer_strain", "eer_on_embed", "eer_arap", "eer_no_norm",
        "ptdrop",   "growthcap",   "gad_eer",      "full"};
    return names;
}

ExperimentConfig apply_preset(ExperimentConfig cfg, const std::string& name) {
    if (std::find(preset_names().begin(), preset_names().end(), name) == preset_names().end())
        config_error("unknown preset '" + name + "'");
    cfg.preset = name;
    AdcSettings& a = cfg.adc;
    a.enable_split = a.enable_clone = a.enable_prune = a.enable_all = true;
    a.gad = a.growthcap = false;
    a.interval_factor = a.window_end_factor = a.tau_factor = 1.0;
    cfg.reg.variant = SmoothnessVariant::Off;
    cfg.reg.ptdrop = false;

    if (name.size() == 2 && name[0] == 'A') {
        const AdcConfig ref = apply_ablation(AdcConfig{}, ablation_from_string(name));
        a.enable_all = ref.enable_all;
        a.enable_split = ref.enable_split;
        a.enable_clone = ref.enable_clone;
        a.enable_prune = ref.enable_prune;
        if (name == "A5") a.interval_factor = 2.0;
        if (name == "A6") a.window_end_factor = 0.5;
        if (name == "A7") a.tau_factor = 2.0;
        if (name == "A8") a.tau_factor = 0.5;
        return cfg;
    }
    if (name.rfind("eer_", 0) == 0) cfg.reg.variant = smoothness_variant_from_string(name.substr(4));
    if (name == "gad" || name == "gad_eer" || name == "full") a.gad = true;
    if (name == "gad_eer" || name == "full") cfg.reg.variant = SmoothnessVariant::Strain;
    if (name == "ptdrop" || name == "full") cfg.reg.ptdrop = true;
    if (name == "growthcap" || name == "full") a.growthcap = true;
    return cfg;
}

ExperimentConfig default_config(SceneKind kind, std::uint64_t seed) {
    ExperimentConfig cfg;
    cfg.scene = default_scene(kind, seed);
    cfg.seed = seed;
    return cfg;
}

namespace {

json scene_json(const SceneSpec& s) {
    return {{"name", s.name},
            {"kind", std::string(to_string(s.kind))},
            {"gt_count", s.gt_count},
            {"motion_amplitude", s.motion_amplitude},
            {"train_views", s.train_views},
            {"test_views", s.test_views},
            {"width", s.width},
            {"seed", s.seed},
            {"dim", s.dim},
            {"pixel_extent", s.pixel_extent},
            {"background", s.background},
            {"camera_arc", s.camera_arc},
            {"test_angle_offset", s.test_angle_offset}};
}

SceneSpec scene_from(const json& j, SceneSpec s) {
    check_keys(j, "scene", {"name", "kind", "gt_count", "motion_amplitude", "train_views", "test_views", "width",
                            "seed", "dim", "pixel_extent", "background", "camera_arc", "test_angle_offset"});
    if (j.contains("kind")) {
        const SceneKind kind = scene_kind_from_string(j.at("kind").get<std::string>());
        if (kind != s.kind) {
            const auto seed = s.seed;
            s = default_scene(kind, seed);
        }
    }
    read(j, "name", s.name);
    read(j, "gt_count", s.gt_count);
    read(j, "motion_amplitude", s.motion_amplitude);
    read(j, "train_views", s.train_views);
    read(j, "test_views", s.test_views);
    read(j, "width", s.width);
    read(j, "seed", s.seed);
    read(j, "dim", s.dim);
    read(j, "pixel_extent", s.pixel_extent);
    read(j, "background", s.background);
    read(j, "camera_arc", s.camera_arc);
    read(j, "test_angle_offset", s.test_angle_offset);
    return s;
}

json to_json_obj(const ExperimentConfig& c) {
    const Schedule& p = c.schedule;
    const AdcSettings& a = c.adc;
    const RegSettings& r = c.reg;
    const OptimizerSettings& o = c.optimizer;
    return {
        {"preset", c.preset},
        {"iterations", c.iterations},
        {"seed", c.seed},
        {"calibration_iterations", c.calibration_iterations},
        {"scene", scene_json(c.scene)},
        {"schedule",
         {{"reference_iterations", p.reference_iterations},
          {"coarse_end", p.coarse_end},
          {"adc_interval", p.adc_interval},
          {"adc_start", p.adc_start},
          {"adc_end", p.adc_end},
          {"warmup_start", p.warmup_start},
          {"warmup_end", p.warmup_end},
          {"ptdrop_start", p.ptdrop_start},
          {"ptdrop_end", p.ptdrop_end},
          {"graph_rebuild", p.graph_rebuild}}},
        {"adc",
         {{"tau0", a.tau0},
          {"tau_quantile", a.tau_quantile},
          {"size_threshold", a.size_threshold},
          {"prune_opacity", a.prune_opacity},
          {"split_divisor", a.split_divisor},
          {"clone_offset", a.clone_offset},
          {"enable_split", a.enable_split},
          {"enable_clone", a.enable_clone},
          {"enable_prune", a.enable_prune},
          {"enable_all", a.enable_all},
          {"gad", a.gad},
          {"gad_lambda", a.gad_lambda},
          {"ema_rho", a.ema_rho},
          {"ema_floor", a.ema_floor},
          {"growthcap", a.growthcap},
          {"growthcap_kmax", a.growthcap_kmax},
          {"growthcap_sharpness", a.growthcap_sharpness},
          {"interval_factor", a.interval_factor},
          {"window_end_factor", a.window_end_factor},
          {"tau_factor", a.tau_factor}}},
        {"reg",
         {{"variant", std::string(to_string(r.variant))},
          {"lambda", r.lambda},
          {"k", r.k},
          {"epsilon", r.epsilon},
          {"sample_size", r.sample_size},
          {"ptdrop", r.ptdrop},
          {"ptdrop_p_max", r.ptdrop_p_max},
          {"ptdrop_jitter_weighting", r.ptdrop_jitter_weighting},
          {"jitter_every", r.jitter_every}}},
        {"optimizer",
         {{"lr_position", o.lr_position},
          {"lr_scale", o.lr_scale},
          {"lr_opacity", o.lr_opacity},
          {"lr_color", o.lr_color},
          {"lr_field", o.lr_field},
          {"beta1", o.beta1},
          {"beta2", o.beta2},
          {"eps", o.eps},
          {"min_scale", o.min_scale},
          {"max_scale", o.max_scale},
          {"lr_decay", o.lr_decay}}},
        {"init",
         {{"count", c.init.count},
          {"radius", c.init.radius},
          {"scale", c.init.scale},
          {"opacity", c.init.opacity},
          {"color", c.init.color}}},
        {"field",
         {{"spatial_frequencies", c.field.spatial_frequencies},
          {"time_frequencies", c.field.time_frequencies},
          {"position_scale", c.field.position_scale},
          {"hidden", c.field.hidden},
          {"activation", c.field.activation}}},
    };
}

ExperimentConfig from_json_obj(const json& j, ExperimentConfig c) {
    check_keys(j, "config", {"preset", "iterations", "seed", "calibration_iterations", "scene", "schedule", "adc",
                             "reg", "optimizer", "init", "field"});
    if (j.contains("scene")) c.scene = scene_from(j.at("scene"), c.scene);
    read(j, "iterations", c.iterations);
    read(j, "seed", c.seed);
    read(j, "calibration_iterations", c.calibration_iterations);
    if (j.contains("schedule")) {
        const json& s = j.at("schedule");
        check_keys(s, "schedule", {"reference_iterations", "coarse_end", "adc_interval", "adc_start", "adc_end",
                                   "warmup_start", "warmup_end", "ptdrop_start", "ptdrop_end", "graph_rebuild"});
        Schedule& p = c.schedule;
        read(s, "reference_iterations", p.reference_iterations);
        read(s, "coarse_end", p.coarse_end);
        read(s, "adc_interval", p.adc_interval);
        read(s, "adc_start", p.adc_start);
        read(s, "adc_end", p.adc_end);
        read(s, "warmup_start", p.warmup_start);
        read(s, "warmup_end", p.warmup_end);
        read(s, "ptdrop_start", p.ptdrop_start);
        read(s, "ptdrop_end", p.ptdrop_end);
        read(s, "graph_rebuild", p.graph_rebuild);
    }
    // Presets set the switch fields; explicit values in the file win.
    if (j.contains("preset")) c = apply_preset(c, j.at("preset").get<std::string>());
    if (j.contains("adc")) {
        const json& s = j.at("adc");
        check_keys(s, "adc", {"tau0", "tau_quantile", "size_threshold", "prune_opacity", "split_divisor",
                              "clone_offset", "enable_split", "enable_clone", "enable_prune", "enable_all", "gad",
                              "gad_lambda", "ema_rho", "ema_floor", "growthcap", "growthcap_kmax",
                              "growthcap_sharpness", "interval_factor", "window_end_factor", "tau_factor"});
        AdcSettings& a = c.adc;
        read(s, "tau0", a.tau0);
        read(s, "tau_quantile", a.tau_quantile);
        read(s, "size_threshold", a.size_threshold);
        read(s, "prune_opacity", a.prune_opacity);
        read(s, "split_divisor", a.split_divisor);
        read(s, "clone_offset", a.clone_offset);
        read(s, "enable_split", a.enable_split);
        read(s, "enable_clone", a.enable_clone);
        read(s, "enable_prune", a.enable_prune);
        read(s, "enable_all", a.enable_all);
        read(s, "gad", a.gad);
        read(s, "gad_lambda", a.gad_lambda);
        read(s, "ema_rho", a.ema_rho);
        read(s, "ema_floor", a.ema_floor);
        read(s, "growthcap", a.growthcap);
        read(s, "growthcap_kmax", a.growthcap_kmax);
        read(s, "growthcap_sharpness", a.growthcap_sharpness);
        read(s, "interval_factor", a.interval_factor);
        read(s, "window_end_factor", a.window_end_factor);
        read(s, "tau_factor", a.tau_factor);
    }
    if (j.contains("reg")) {
        const json& s = j.at("reg");
        check_keys(s, "reg", {"variant", "lambda", "k", "epsilon", "sample_size", "ptdrop", "ptdrop_p_max",
                              "ptdrop_jitter_weighting", "jitter_every"});
        RegSettings& r = c.reg;
        if (s.contains("variant")) r.variant = smoothness_variant_from_string(s.at("variant").get<std::string>());
        read(s, "lambda", r.lambda);
        read(s, "k", r.k);
        read(s, "epsilon", r.epsilon);
        read(s, "sample_size", r.sample_size);
        read(s, "ptdrop", r.ptdrop);
        read(s, "ptdrop_p_max", r.ptdrop_p_max);
        read(s, "ptdrop_jitter_weighting", r.ptdrop_jitter_weighting);
        read(s, "jitter_every", r.jitter_every);
    }
    if (j.contains("optimizer")) {
        const json& s = j.at("optimizer");
        check_keys(s, "optimizer",
                   {"lr_position", "lr_scale", "lr_opacity", "lr_color", "lr_field", "beta1", "beta2", "eps", "min_scale",
                    "max_scale", "lr_decay"});
        OptimizerSettings& o = c.optimizer;
        read(s, "lr_position", o.lr_position);
        read(s, "lr_scale", o.lr_scale);
        read(s, "lr_opacity", o.lr_opacity);
        read(s, "lr_color", o.lr_color);
        read(s, "lr_field", o.lr_field);
        read(s, "beta1", o.beta1);
        read(s, "beta2", o.beta2);
        read(s, "eps", o.eps);
        read(s, "min_scale", o.min_scale);
        read(s, "max_scale", o.max_scale);
        read(s, "lr_decay", o.lr_decay);
    }
    if (j.contains("init")) {
        const json& s = j.at("init");
        check_keys(s, "init", {"count", "radius", "scale", "opacity", "color"});
        read(s, "count", c.init.count);
        read(s, "radius", c.init.radius);
        read(s, "scale", c.init.scale);
        read(s, "opacity", c.init.opacity);
        read(s, "color", c.init.color);
    }
    if (j.contains("field")) {
        const json& s = j.at("field");
        check_keys(s, "field", {"spatial_frequencies", "time_frequencies", "position_scale", "hidden", "activation"});
        read(s, "spatial_frequencies", c.field.spatial_frequencies);
        read(s, "time_frequencies", c.field.time_frequencies);
        read(s, "position_scale", c.field.position_scale);
        read(s, "hidden", c.field.hidden);
        read(s, "activation", c.field.activation);
    }
    c.field.dim = c.scene.dim;
    return c;
}

json parse(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        fail(ErrorCode::Parse, std::string("config JSON: ") + e.what());
    }
}

}  // namespace

std::string config_to_json(const ExperimentConfig& cfg, int indent) { return to_json_obj(cfg).dump(indent); }

ExperimentConfig config_from_json(const std::string& text) {
    const json j = parse(text);
    ExperimentConfig base;
    if (j.contains("scene") && j.at("scene").contains("kind")) {
        base.scene = default_scene(scene_kind_from_string(j.at("scene").at("kind").get<std::string>()), 1);
    }
    ExperimentConfig cfg = from_json_obj(j, base);
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    try {
        return config_from_json(read_file(path));
    } catch (const Error& e) {
        if (e.code() == ErrorCode::Io) fail(ErrorCode::Config, e.what());
        throw;
    }
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : config_to_json(cfg, -1)) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

SuiteSpec suite_from_json(const std::string& text) {
    const json j = parse(text);
    check_keys(j, "suite",
               {"base", "presets", "scenes", "seeds", "output_dir", "reproducible", "save_checkpoints", "save_audit",
                "threads"});
    SuiteSpec s;
    if (j.contains("base")) s.base = from_json_obj(j.at("base"), ExperimentConfig{});
    read(j, "presets", s.presets);
    std::vector<std::string> scenes;
    read(j, "scenes", scenes);
    for (const auto& name : scenes) s.scenes.push_back(scene_kind_from_string(name));
    read(j, "seeds", s.seeds);
    read(j, "output_dir", s.output_dir);
    read(j, "reproducible", s.reproducible);
    read(j, "save_checkpoints", s.save_checkpoints);
    read(j, "save_audit", s.save_audit);
    read(j, "threads", s.threads);
    if (s.presets.empty() || s.scenes.empty() || s.seeds.empty())
        config_error("suite needs nonempty presets, scenes and seeds");
    for (const auto& p : s.presets)
        if (std::find(preset_names().begin(), preset_names().end(), p) == preset_names().end())
            config_error("unknown preset '" + p + "'");
    s.base.validate();
    return s;
}

SuiteSpec load_suite(const std::string& path) {
    try {
        return suite_from_json(read_file(path));
    } catch (const Error& e) {
        if (e.code() == ErrorCode::Io) fail(ErrorCode::Config, e.what());
        throw;
    }
}

}  // namespace dgs
