// Copyright 2026 The dgslab Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "dgslab/container.hpp"
#include "dgslab/csv.hpp"
#include "dgslab/error.hpp"
#include "dgslab/harness.hpp"
#include "dgslab/stats.hpp"

namespace dgs {
namespace fs = std::filesystem;

void write_results_header(std::ostream& os) {
    os << "scene,preset,seed,iterations,train_psnr,test_psnr,gap,final_K,mean_strain,median_strain,wall_ms,diverged\n";
}

void write_results_row(std::ostream& os, const RunRecord& r) {
    os << r.scene << ',' << r.preset << ',' << r.seed << ',' << r.iterations << ',' << fmt17(r.train_psnr) << ','
       << fmt17(r.test_psnr) << ',' << fmt17(r.gap) << ',' << r.final_k << ',' << fmt17(r.mean_strain) << ','
       << fmt17(r.median_strain) << ',' << fmt17(r.wall_ms) << ',' << (r.diverged ? 1 : 0) << '\n';
}

std::vector<RunRecord> read_results_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) fail(ErrorCode::Parse, "results CSV: missing header");
    std::vector<RunRecord> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (f.size() != 12) fail(ErrorCode::Parse, "results CSV line " + std::to_string(lineno) + ": expected 12 fields");
        try {
            RunRecord r;
            r.scene = f[0];
            r.preset = f[1];
            r.seed = std::stoull(f[2]);
            r.iterations = std::stoull(f[3]);
            r.train_psnr = std::stod(f[4]);
            r.test_psnr = std::stod(f[5]);
            r.gap = std::stod(f[6]);
            r.final_k = std::stoull(f[7]);
            r.mean_strain = std::stod(f[8]);
            r.median_strain = std::stod(f[9]);
            r.wall_ms = std::stod(f[10]);
            r.diverged = f[11] == "1";
            rows.push_back(std::move(r));
        } catch (const std::exception&) {
            fail(ErrorCode::Parse, "results CSV line " + std::to_string(lineno) + ": malformed number");
        }
    }
    return rows;
}

namespace {

struct Accum {
    std::vector<double> v;
    void add(double x) { v.push_back(x); }
    double mean() const { return v.empty() ? std::nan("") : dgs::mean(v); }
    double sd() const { return v.size() < 2 ? 0.0 : sample_sd(v); }
};

void kv(std::ostream& os, const std::string& key, double v) { os << key << " = " << fmt17(v) << '\n'; }
void kv(std::ostream& os, const std::string& key, const std::string& v) { os << key << " = " << v << '\n'; }

bool usable(const RunRecord& r) { return !r.diverged && r.error.empty() && std::isfinite(r.gap); }

}  // namespace

std::string stats_report(const std::vector<RunRecord>& rows, const std::vector<StrainReport>& strain) {
    std::ostringstream os;
    kv(os, "rows", static_cast<double>(rows.size()));
    std::vector<std::string> presets;
    std::vector<std::string> scenes;
    for (const auto& r : rows) {
        if (std::find(presets.begin(), presets.end(), r.preset) == presets.end()) presets.push_back(r.preset);
        if (std::find(scenes.begin(), scenes.end(), r.scene) == scenes.end()) scenes.push_back(r.scene);
    }
    std::size_t flagged = 0;
    for (const auto& r : rows) flagged += usable(r) ? 0 : 1;
    kv(os, "flagged_rows", static_cast<double>(flagged));

    using Key = std::pair<std::string, std::uint64_t>;  // scene, seed
    std::map<std::string, std::map<Key, const RunRecord*>> by_preset;
    std::map<std::string, std::map<Key, std::size_t>> row_index;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (!usable(rows[i])) continue;
        by_preset[rows[i].preset][{rows[i].scene, rows[i].seed}] = &rows[i];
        row_index[rows[i].preset][{rows[i].scene, rows[i].seed}] = i;
    }

    std::vector<CountGapPoint> count_gap;
    for (const auto& p : presets) {
        Accum train, test, gap, k, st;
        for (const auto& [key, r] : by_preset[p]) {
            train.add(r->train_psnr);
            test.add(r->test_psnr);
            gap.add(r->gap);
            k.add(static_cast<double>(r->final_k));
            st.add(r->mean_strain);
        }
        const std::string pre = "preset." + p + ".";
        kv(os, pre + "n", static_cast<double>(gap.v.size()));
        if (gap.v.empty()) continue;
        kv(os, pre + "train_psnr.mean", train.mean());
        kv(os, pre + "train_psnr.sd", train.sd());
        kv(os, pre + "test_psnr.mean", test.mean());
        kv(os, pre + "test_psnr.sd", test.sd());
        kv(os, pre + "gap.mean", gap.mean());
        kv(os, pre + "gap.sd", gap.sd());
        kv(os, pre + "final_K.mean", k.mean());
        kv(os, pre + "final_K.sd", k.sd());
        kv(os, pre + "mean_strain.mean", st.mean());
        count_gap.push_back({k.mean(), gap.mean()});
    }

    const auto base_it = by_preset.find("baseline");
    if (base_it != by_preset.end()) {
        const auto& base = base_it->second;
        for (const auto& p : presets) {
            if (p == "baseline") continue;
            PairedSample gap_s, test_s, k_s, strain_s;
            gap_s.label_a = test_s.label_a = "baseline";
            gap_s.label_b = test_s.label_b = p;
            std::map<std::string, std::pair<Accum, Accum>> strain_by_scene;
            for (const auto& [key, r] : by_preset[p]) {
                const auto b = base.find(key);
                if (b == base.end()) continue;
                gap_s.a.push_back(b->second->gap);
                gap_s.b.push_back(r->gap);
                test_s.a.push_back(b->second->test_psnr);
                test_s.b.push_back(r->test_psnr);
                k_s.a.push_back(static_cast<double>(b->second->final_k));
                k_s.b.push_back(static_cast<double>(r->final_k));
                strain_by_scene[key.first].first.add(b->second->mean_strain);
                strain_by_scene[key.first].second.add(r->mean_strain);
            }
            const std::string pre = "compare." + p + ".";
            kv(os, pre + "pairs", static_cast<double>(gap_s.a.size()));
            if (gap_s.a.empty()) continue;
            const double mk_a = mean(k_s.a), mk_b = mean(k_s.b);
            const double mg_a = mean(gap_s.a), mg_b = mean(gap_s.b);
            kv(os, pre + "K_ratio", mk_b / mk_a);
            kv(os, pre + "gap_reduction_pct", mg_a != 0.0 ? (1.0 - mg_b / mg_a) * 100.0 : std::nan(""));
            kv(os, pre + "test_psnr.mean_difference", mean(test_s.b) - mean(test_s.a));
            std::size_t k_lower = 0;
            for (std::size_t i = 0; i < k_s.a.size(); ++i) k_lower += k_s.b[i] < k_s.a[i] ? 1 : 0;
            kv(os, pre + "K_lower_pairs", static_cast<double>(k_lower));
            for (auto* sample : {&gap_s, &test_s}) {
                const std::string metric = sample == &gap_s ? "gap" : "test_psnr";
                if (sample->a.size() < 2) continue;
                try {
                    const PairedEffect e = paired_effect(*sample);
                    kv(os, pre + metric + ".t", e.t);
                    kv(os, pre + metric + ".p", e.p);
                    kv(os, pre + metric + ".cohens_d", e.cohens_d);
                    kv(os, pre + metric + ".mean_difference", e.mean_difference);
                } catch (const Error& err) {
                    kv(os, pre + metric + ".t", std::string("undefined (") + err.what() + ")");
                }
                try {
                    const WilcoxonResult w = wilcoxon_exact(*sample);
                    kv(os, pre + metric + ".wilcoxon_W", w.w);
                    kv(os, pre + metric + ".wilcoxon_p", w.p);
                } catch (const Error& err) {
                    kv(os, pre + metric + ".wilcoxon_p", std::string("undefined (") + err.what() + ")");
                }
            }
            Accum reductions;
            double min_reduction = std::numeric_limits<double>::infinity();
            for (const auto& [scene, acc] : strain_by_scene) {
                const double b = acc.first.mean(), r = acc.second.mean();
                const double red = b > 0.0 ? (1.0 - r / b) * 100.0 : std::nan("");
                kv(os, pre + "strain_reduction_pct." + scene, red);
                reductions.add(red);
                min_reduction = std::min(min_reduction, red);
            }
            if (!reductions.v.empty()) {
                kv(os, pre + "strain_reduction_pct.mean_of_scenes", reductions.mean());
                kv(os, pre + "strain_reduction_pct.min_scene", min_reduction);
            }

            if (!strain.empty() && strain.size() == rows.size()) {
                std::size_t med_below = 0, p99_below = 0, n = 0;
                for (const auto& [key, idx] : row_index[p]) {
                    const auto b = row_index["baseline"].find(key);
                    if (b == row_index["baseline"].end()) continue;
                    const StrainComparison c = strain_compare(strain[b->second], strain[idx]);
                    med_below += c.reg_median_below_base_p1 ? 1 : 0;
                    p99_below += c.reg_p99_below_base_median ? 1 : 0;
                    ++n;
                }
                kv(os, pre + "strain.median_below_base_p1_pairs", static_cast<double>(med_below));
                kv(os, pre + "strain.p99_below_base_median_pairs", static_cast<double>(p99_below));
                kv(os, pre + "strain.compared_pairs", static_cast<double>(n));
            }
        }
    }

    std::set<double> distinct_k;
    for (const auto& c : count_gap) distinct_k.insert(c.k);
    if (distinct_k.size() >= 3) {
        const CountGapFit fit = fit_count_gap(count_gap);
        kv(os, "count_gap.n", static_cast<double>(fit.n));
        kv(os, "count_gap.slope_db_per_decade", fit.slope);
        kv(os, "count_gap.intercept", fit.intercept);
        kv(os, "count_gap.pearson_r", fit.r);
        kv(os, "count_gap.spearman_rho", fit.rho);
        if (fit.has_endpoint_r) kv(os, "count_gap.endpoint_dropped_r", fit.endpoint_r);
    } else {
        kv(os, "count_gap.n", static_cast<double>(count_gap.size()));
        kv(os, "count_gap.pearson_r", std::string("undefined (fewer than 3 distinct preset mean K)"));
    }
    return os.str();
}

namespace {

std::string cell_name(const RunRecord& r) { return r.scene + "_" + r.preset + "_" + std::to_string(r.seed); }

SceneSpec suite_scene(const SceneSpec& base, SceneKind kind, std::uint64_t seed) {
    SceneSpec s = default_scene(kind, seed);
    s.train_views = base.train_views;
    s.test_views = base.test_views;
    s.width = base.width;
    s.dim = base.dim;
    s.pixel_extent = base.pixel_extent;
    s.background = base.background;
    s.camera_arc = base.camera_arc;
    s.test_angle_offset = base.test_angle_offset;
    return s;
}

template <class F>
void parallel_for(std::size_t n, unsigned threads, F&& body) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) body(i);
    };
    if (threads <= 1) {
        worker();
        return;
    }
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
}

}  // namespace

SuiteResult run_suite(const SuiteSpec& spec, const ProgressFn& progress) {
    require(!spec.presets.empty() && !spec.scenes.empty() && !spec.seeds.empty(), "run_suite: empty suite");

    struct Cell {
        std::size_t scene_seed;
        std::string preset;
    };
    struct SceneSeed {
        ExperimentConfig cfg;
        Scene scene;
        double tau0 = 0.0;
        std::string error;
    };
    std::vector<SceneSeed> ss;
    for (SceneKind kind : spec.scenes) {
        for (std::uint64_t seed : spec.seeds) {
            SceneSeed s;
            s.cfg = spec.base;
            s.cfg.scene = suite_scene(spec.base.scene, kind, seed);
            s.cfg.seed = seed;
            ss.push_back(std::move(s));
        }
    }
    parallel_for(ss.size(), spec.threads, [&](std::size_t i) {
        try {
            ss[i].scene = generate_scene(ss[i].cfg.scene);
            ss[i].tau0 = ss[i].cfg.adc.tau0 > 0.0 ? ss[i].cfg.adc.tau0 : calibrate_tau0(ss[i].cfg);
        } catch (const std::exception& e) {
            ss[i].error = e.what();
        }
    });

    std::vector<Cell> cells;
    for (const auto& p : spec.presets)
        for (std::size_t i = 0; i < ss.size(); ++i) cells.push_back({i, p});

    const bool write = !spec.output_dir.empty();
    const fs::path out(spec.output_dir);
    if (write) {
        fs::create_directories(out);
        if (spec.save_checkpoints) fs::create_directories(out / "checkpoints");
        if (spec.save_audit) fs::create_directories(out / "audit");
    }

    SuiteResult res;
    res.rows.resize(cells.size());
    res.strain.resize(cells.size());
    std::mutex progress_mu;
    parallel_for(cells.size(), spec.threads, [&](std::size_t c) {
        const SceneSeed& s = ss[cells[c].scene_seed];
        RunRecord& row = res.rows[c];
        row.scene = s.cfg.scene.name;
        row.preset = cells[c].preset;
        row.seed = s.cfg.seed;
        try {
            if (!s.error.empty()) fail(ErrorCode::Config, s.error);
            ExperimentConfig cfg = apply_preset(s.cfg, cells[c].preset);
            cfg.adc.tau0 = s.tau0;
            RunOutput run = run_experiment(cfg, s.scene, RunOptions{spec.reproducible});
            row = run.record;
            res.strain[c] = std::move(run.strain);
            if (write && spec.save_checkpoints)
                save_checkpoint(run.checkpoint, (out / "checkpoints" / (cell_name(row) + ".ckpt")).string());
            if (write && spec.save_audit) {
                std::ofstream f(out / "audit" / (cell_name(row) + ".csv"));
                write_audit_csv(f, run.audit);
            }
        } catch (const std::exception& e) {
            row.error = e.what();
            row.diverged = true;
            row.train_psnr = row.test_psnr = row.gap = row.mean_strain = row.median_strain = std::nan("");
        }
        if (progress) {
            std::lock_guard lock(progress_mu);
            progress(row);
        }
    });

    res.report = stats_report(res.rows, res.strain);
    std::ostringstream errors;
    for (const auto& r : res.rows)
        if (!r.error.empty()) errors << "error." << cell_name(r) << " = " << r.error << '\n';
    res.report += errors.str();

    if (write) {
        std::ostringstream csv;
        write_results_header(csv);
        for (const auto& r : res.rows) write_results_row(csv, r);
        write_file((out / "results.csv").string(), csv.str());
        write_file((out / "report.txt").string(), res.report);

        std::ostringstream st;
        write_strain_csv_header(st);
        for (std::size_t c = 0; c < res.rows.size(); ++c)
            if (!res.strain[c].per_gaussian.empty())
                write_strain_csv_row(st, res.rows[c].scene, res.rows[c].preset + "/seed" + std::to_string(res.rows[c].seed),
                                     res.strain[c]);
        write_file((out / "strain.csv").string(), st.str());

        std::ostringstream kt;
        kt << "scene,preset,seed,iteration,K\n";
        for (const auto& r : res.rows)
            for (const auto& p : r.k_trajectory)
                kt << r.scene << ',' << r.preset << ',' << r.seed << ',' << p.iteration << ',' << p.k << '\n';
        write_file((out / "k_trajectory.csv").string(), kt.str());

        std::ostringstream cg;
        cg << "preset,mean_K,mean_gap,mean_train_psnr,mean_test_psnr,mean_frontload\n";
        for (const auto& p : spec.presets) {
            Accum k, gap, tr, te, fl;
            for (const auto& r : res.rows) {
                if (r.preset != p || !usable(r)) continue;
                k.add(static_cast<double>(r.final_k));
                gap.add(r.gap);
                tr.add(r.train_psnr);
                te.add(r.test_psnr);
                fl.add(r.frontload_fraction);
            }
            if (k.v.empty()) continue;
            cg << p << ',' << fmt17(k.mean()) << ',' << fmt17(gap.mean()) << ',' << fmt17(tr.mean()) << ','
               << fmt17(te.mean()) << ',' << fmt17(fl.mean()) << '\n';
        }
        write_file((out / "count_gap.csv").string(), cg.str());
    }
    return res;
}

}  // namespace dgs
