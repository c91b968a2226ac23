// Copyright 2026 The dgslab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end. Talks to the library only through dgslab.h.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dgslab/dgslab.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitDiverged = 2;
constexpr int kExitInternal = 3;

struct Failure {
    dgs_status status;
    std::string message;
};

void check(dgs_status st) {
    if (st != DGS_OK) throw Failure{st, dgs_last_error()};
}

struct StringDeleter {
    void operator()(char* s) const { dgs_string_free(s); }
};
using OwnedString = std::unique_ptr<char, StringDeleter>;

template <class T, void (*Free)(T*)>
struct HandleDeleter {
    void operator()(T* p) const { Free(p); }
};
using ConfigPtr = std::unique_ptr<dgs_config, HandleDeleter<dgs_config, dgs_config_free>>;
using RunPtr = std::unique_ptr<dgs_run, HandleDeleter<dgs_run, dgs_run_free>>;
using ScenePtr = std::unique_ptr<dgs_scene, HandleDeleter<dgs_scene, dgs_scene_free>>;
using CheckpointPtr = std::unique_ptr<dgs_checkpoint, HandleDeleter<dgs_checkpoint, dgs_checkpoint_free>>;

void write_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw Failure{DGS_ERR_IO, "cannot write " + path.string()};
}

ConfigPtr load_or_default(const std::string& config_path, const std::string& scene, std::uint64_t seed) {
    dgs_config* cfg = nullptr;
    if (!config_path.empty()) {
        check(dgs_config_load(config_path.c_str(), &cfg));
    } else {
        check(dgs_config_default(scene.c_str(), seed, &cfg));
    }
    return ConfigPtr(cfg);
}

struct TrainArgs {
    std::string config;
    std::string scene = "rigid-orbit";
    std::string preset;
    std::string out = "run";
    std::uint64_t seed = 1;
    bool reproducible = false;
    bool print_config = false;
};

int cmd_train(const TrainArgs& a) {
    ConfigPtr cfg = load_or_default(a.config, a.scene, a.seed);
    if (!a.preset.empty()) check(dgs_config_apply_preset(cfg.get(), a.preset.c_str()));
    char* json = nullptr;
    check(dgs_config_to_json(cfg.get(), &json));
    OwnedString cfg_json(json);
    if (a.print_config) {
        std::cout << cfg_json.get() << '\n';
        return kExitOk;
    }

    dgs_run* raw = nullptr;
    check(dgs_train(cfg.get(), a.reproducible ? 1 : 0, &raw));
    RunPtr run(raw);
    dgs_run_record rec{};
    check(dgs_run_record_get(run.get(), &rec));

    const std::filesystem::path dir(a.out);
    std::filesystem::create_directories(dir);
    char* csv = nullptr;
    check(dgs_run_results_csv(run.get(), &csv));
    write_file(dir / "results.csv", OwnedString(csv).get());
    char* audit = nullptr;
    check(dgs_run_audit_csv(run.get(), &audit));
    write_file(dir / "audit.csv", OwnedString(audit).get());
    write_file(dir / "config.json", std::string(cfg_json.get()) + "\n");
    check(dgs_run_save_checkpoint(run.get(), (dir / "model.ckpt").string().c_str()));

    if (rec.diverged) {
        std::cerr << "training diverged; partial results written to " << dir.string() << '\n';
        return kExitDiverged;
    }
    std::printf("K=%llu train_psnr=%.4f test_psnr=%.4f gap=%.4f mean_strain=%.6g tau0=%.6g\n",
                static_cast<unsigned long long>(rec.final_k), rec.train_psnr, rec.test_psnr, rec.gap,
                rec.mean_strain, rec.tau0);
    return kExitOk;
}

void print_progress(const char* scene, const char* preset, uint64_t seed, uint64_t final_k, double gap, int diverged,
                    void*) {
    std::fprintf(stderr, "  %-22s %-14s seed=%-4llu K=%-6llu gap=%8.4f%s\n", scene, preset,
                 static_cast<unsigned long long>(seed), static_cast<unsigned long long>(final_k), gap,
                 diverged ? "  DIVERGED" : "");
}

struct SuiteArgs {
    std::string suite;
    std::string out;
    bool reproducible = false;
    bool quiet = false;
};

int cmd_suite(const SuiteArgs& a) {
    std::size_t flagged = 0;
    check(dgs_suite_run(a.suite.c_str(), a.out.empty() ? nullptr : a.out.c_str(), a.reproducible ? 1 : -1,
                        a.quiet ? nullptr : print_progress, nullptr, &flagged));
    if (flagged > 0) std::cerr << flagged << " row(s) flagged; see results.csv and report.txt\n";
    return kExitOk;
}

struct DiagnoseArgs {
    std::string checkpoint;
    std::string mode = "graph";
    std::size_t k = 8;
    std::vector<double> timesteps;
};

int cmd_diagnose(const DiagnoseArgs& a) {
    dgs_checkpoint* raw = nullptr;
    check(dgs_checkpoint_load(a.checkpoint.c_str(), &raw));
    CheckpointPtr ckpt(raw);
    std::uint64_t count = 0, iteration = 0;
    check(dgs_checkpoint_info(ckpt.get(), &count, &iteration));
    dgs_strain_summary s{};
    check(dgs_measure_strain(ckpt.get(), a.timesteps.empty() ? nullptr : a.timesteps.data(), a.timesteps.size(),
                             a.mode.c_str(), a.k, &s));
    std::printf("checkpoint = %s\niteration = %llu\ngaussians = %llu\nmode = %s\nk = %llu\n", a.checkpoint.c_str(),
                static_cast<unsigned long long>(iteration), static_cast<unsigned long long>(count), a.mode.c_str(),
                static_cast<unsigned long long>(s.k));
    std::printf("mean = %.17g\nmedian = %.17g\np1 = %.17g\np99 = %.17g\nmin = %.17g\nmax = %.17g\n", s.mean, s.median,
                s.p1, s.p99, s.min, s.max);
    return kExitOk;
}

int cmd_stats(const std::string& results, const std::string& out) {
    char* report = nullptr;
    check(dgs_stats_report(results.c_str(), &report));
    OwnedString owned(report);
    if (out.empty()) {
        std::cout << owned.get();
    } else {
        write_file(out, owned.get());
    }
    return kExitOk;
}

struct SceneArgs {
    std::string config;
    std::string kind = "rigid-orbit";
    std::uint64_t seed = 1;
    std::string out;
    std::string csv;
};

int cmd_scene(const SceneArgs& a) {
    ConfigPtr cfg = load_or_default(a.config, a.kind, a.seed);
    dgs_scene* raw = nullptr;
    check(dgs_scene_generate(cfg.get(), &raw));
    ScenePtr scene(raw);
    if (!a.out.empty()) check(dgs_scene_save(scene.get(), a.out.c_str()));
    char* csv = nullptr;
    check(dgs_scene_images_csv(scene.get(), &csv));
    OwnedString owned(csv);
    if (!a.csv.empty()) {
        write_file(a.csv, owned.get());
    } else if (a.out.empty()) {
        std::cout << owned.get();
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dgslab: desk-scale dynamic Gaussian splatting lab"};
    app.set_version_flag("--version", std::string(dgs_version()));
    app.require_subcommand(1);

    TrainArgs train;
    auto* t = app.add_subcommand("train", "Train one configuration and write results, audit log and checkpoint");
    t->add_option("-c,--config", train.config, "Experiment config JSON")->check(CLI::ExistingFile);
    t->add_option("--scene", train.scene, "Scene kind when no config is given");
    t->add_option("-p,--preset", train.preset, "Preset applied on top of the config");
    t->add_option("-o,--out", train.out, "Output directory");
    t->add_option("--seed", train.seed, "Seed when no config is given");
    t->add_flag("--reproducible", train.reproducible, "Record wall time as 0 so outputs are byte-stable");
    t->add_flag("--print-config", train.print_config, "Print the resolved config and exit");

    SuiteArgs suite;
    auto* su = app.add_subcommand("suite", "Run presets x scenes x seeds and write the suite outputs");
    su->add_option("suite", suite.suite, "Suite JSON")->required()->check(CLI::ExistingFile);
    su->add_option("-o,--out", suite.out, "Output directory (overrides the file)");
    su->add_flag("--reproducible", suite.reproducible, "Record wall time as 0 so outputs are byte-stable");
    su->add_flag("-q,--quiet", suite.quiet, "No per-run progress lines");

    DiagnoseArgs diag;
    auto* d = app.add_subcommand("diagnose", "Measure deformation strain of a checkpoint");
    d->add_option("checkpoint", diag.checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);
    d->add_option("--mode", diag.mode, "graph or exhaustive")->check(CLI::IsMember({"graph", "exhaustive"}));
    d->add_option("-k", diag.k, "Neighbors per Gaussian")->check(CLI::PositiveNumber);
    d->add_option("--timesteps", diag.timesteps, "Evaluation times in [0,1]");

    std::string stats_in, stats_out;
    auto* st = app.add_subcommand("stats", "Build the comparison report from a results CSV");
    st->add_option("results", stats_in, "results.csv")->required()->check(CLI::ExistingFile);
    st->add_option("-o,--out", stats_out, "Write the report here instead of stdout");

    SceneArgs scene;
    auto* sc = app.add_subcommand("scene", "Generate a scene; save it and/or dump its images as CSV");
    sc->add_option("-c,--config", scene.config, "Experiment config JSON")->check(CLI::ExistingFile);
    sc->add_option("--kind", scene.kind, "rigid-orbit, articulated-two-part or bouncing");
    sc->add_option("--seed", scene.seed, "Scene seed");
    sc->add_option("-o,--out", scene.out, "Binary scene file");
    sc->add_option("--csv", scene.csv, "Image CSV file (stdout when neither output is given)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*t) return cmd_train(train);
        if (*su) return cmd_suite(suite);
        if (*d) return cmd_diagnose(diag);
        if (*st) return cmd_stats(stats_in, stats_out);
        if (*sc) return cmd_scene(scene);
    } catch (const Failure& f) {
        std::cerr << "dgslab: " << dgs_status_name(f.status) << ": " << f.message << '\n';
        return f.status == DGS_ERR_INTERNAL ? kExitInternal : kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "dgslab: " << e.what() << '\n';
        return kExitInternal;
    }
    return kExitOk;
}
