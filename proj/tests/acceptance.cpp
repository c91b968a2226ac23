// Copyright 2026 The dgslab Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance runner: one PASS/FAIL line per criterion. With --strict the exit
// status is 1 when any criterion fails.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dgslab/adc.hpp"
#include "dgslab/harness.hpp"
#include "dgslab/regularizers.hpp"
#include "dgslab/stats.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace dgs;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        pass = pass && ok;
        if (!detail.empty()) detail += "; ";
        detail += what + (ok ? "" : " [miss]");
    }
};

int g_failures = 0;
std::FILE* g_report = nullptr;

void emit(const std::string& line) {
    std::fputs(line.c_str(), stdout);
    std::fflush(stdout);
    if (g_report != nullptr) {
        std::fputs(line.c_str(), g_report);
        std::fflush(g_report);
    }
}

void report(int id, const std::string& title, const Outcome& o) {
    char head[32];
    std::snprintf(head, sizeof head, "criterion %2d %s: ", id, o.pass ? "PASS" : "FAIL");
    emit(head + title + " (" + o.detail + ")\n");
    if (!o.pass) ++g_failures;
}

template <class F>
void guarded(int id, const std::string& title, F&& body) {
    Outcome o;
    try {
        body(o);
    } catch (const std::exception& e) {
        o.require(false, std::string("exception: ") + e.what());
    }
    report(id, title, o);
}

// ---------------------------------------------------------------------------

void published_correlation(Outcome& o) {
    const auto t0 = Clock::now();
    const std::vector<double> k{44516, 2000, 3073, 7378, 45520, 31354, 40293, 16322, 126493};
    const std::vector<double> gap{6.18, 1.13, 1.15, 3.06, 6.25, 5.62, 6.04, 4.60, 7.59};
    std::vector<double> lk;
    std::vector<CountGapPoint> pts;
    for (std::size_t i = 0; i < k.size(); ++i) {
        lk.push_back(std::log10(k[i]));
        pts.push_back({k[i], gap[i]});
    }
    const CorrelationResult c = correlate(lk, gap, 10000, 0);
    const CountGapFit f = fit_count_gap(pts);
    const double secs = seconds_since(t0);
    o.require(std::abs(c.pearson - 0.995) <= 0.005, "r = " + fmt("%.4f", c.pearson));
    o.require(c.spearman == 1.0, "rho = " + fmt("%.4f", c.spearman));
    o.require(f.has_endpoint_r && std::abs(f.endpoint_r - 0.998) <= 0.003,
              "endpoint r = " + fmt("%.4f", f.endpoint_r));
    o.require(secs < 1.0, "runtime " + fmt("%.3f", secs) + " s");
    o.detail += "; CI [" + fmt("%.3f", c.ci_low) + ", " + fmt("%.3f", c.ci_high) + "]";
}

PairedSample diffs_sample(const std::vector<double>& d) {
    PairedSample s;
    s.a.assign(d.size(), 0.0);
    s.b = d;
    return s;
}

void wilcoxon_floor(Outcome& o) {
    const double pos = wilcoxon_exact(diffs_sample({0.4, 1.1, 0.2, 2.5, 0.9, 0.3, 1.7, 0.6})).p;
    const double neg = wilcoxon_exact(diffs_sample({-0.4, -1.1, -0.2, -2.5, -0.9, -0.3, -1.7, -0.6})).p;
    o.require(pos == 0.0078125 && neg == 0.0078125, "n=8 same-sign p = " + fmt("%.7f", pos));

    std::size_t checked = 0, mismatched = 0;
    for (std::size_t n = 2; n <= 10; ++n) {
        // Every sign pattern over distinct magnitudes and over a tied set.
        for (int tied = 0; tied < 2; ++tied)
            for (std::uint64_t m = 0; m < (std::uint64_t{1} << n); ++m) {
                std::vector<double> d(n);
                for (std::size_t i = 0; i < n; ++i) {
                    const double mag = tied ? double(1 + i / 2) : double(i + 1);
                    d[i] = (m >> i & 1U) ? mag : -mag;
                }
                const auto ref = oracle::brute_wilcoxon(d);
                const WilcoxonResult w = wilcoxon_exact(diffs_sample(d));
                ++checked;
                if (std::abs(w.p - ref.p) > 1e-12 || w.w_plus != ref.w_plus) ++mismatched;
            }
    }
    Rng rng(2024);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> d(2 + rng.index(9));
        for (double& v : d) v = std::round(rng.uniform(-5.0, 5.0));
        if (std::all_of(d.begin(), d.end(), [](double v) { return v == 0.0; })) d[0] = 1.0;
        const auto ref = oracle::brute_wilcoxon(d);
        ++checked;
        if (std::abs(wilcoxon_exact(diffs_sample(d)).p - ref.p) > 1e-12) ++mismatched;
    }
    o.require(mismatched == 0, std::to_string(checked - mismatched) + "/" + std::to_string(checked) +
                                   " samples equal the enumeration oracle");
}

// ---------------------------------------------------------------------------
// Desk suite shared by criteria 3 to 7.

struct Cell {
    std::string scene;
    std::uint64_t seed;
    bool operator<(const Cell& o) const { return std::tie(scene, seed) < std::tie(o.scene, o.seed); }
};

struct Desk {
    std::map<std::string, std::map<Cell, RunRecord>> by_preset;
    std::vector<std::string> scenes;
    double seconds = 0.0;        // baseline and the threshold ablations
    double extra_seconds = 0.0;  // GAD and smoothness variants
    bool ok = false;
    std::string error;

    double mean_of(const std::string& preset, const std::function<double(const RunRecord&)>& f) const {
        double s = 0.0;
        for (const auto& [cell, r] : by_preset.at(preset)) s += f(r);
        return s / static_cast<double>(by_preset.at(preset).size());
    }
    double mean_k(const std::string& p) const {
        return mean_of(p, [](const RunRecord& r) { return static_cast<double>(r.final_k); });
    }
    double mean_gap(const std::string& p) const {
        return mean_of(p, [](const RunRecord& r) { return r.gap; });
    }
    double mean_test(const std::string& p) const {
        return mean_of(p, [](const RunRecord& r) { return r.test_psnr; });
    }
    double gap_reduction_pct(const std::string& p) const { return (1.0 - mean_gap(p) / mean_gap("baseline")) * 100.0; }
    double scene_strain(const std::string& p, const std::string& scene) const {
        double s = 0.0;
        int n = 0;
        for (const auto& [cell, r] : by_preset.at(p))
            if (cell.scene == scene) {
                s += r.mean_strain;
                ++n;
            }
        return s / n;
    }
};

// Runs `presets` over the three scenes and seeds and adds the rows to `d`.
// Returns the wall time in seconds.
double add_desk_runs(Desk& d, const std::vector<std::string>& presets, const fs::path& dir, unsigned threads) {
    SuiteSpec spec;
    spec.presets = presets;
    spec.scenes = {SceneKind::RigidOrbit, SceneKind::ArticulatedTwoPart, SceneKind::Bouncing};
    spec.seeds = {1, 2, 3};
    spec.output_dir = dir.string();
    spec.reproducible = true;
    spec.save_checkpoints = false;
    spec.save_audit = false;
    spec.threads = threads;
    const auto t0 = Clock::now();
    const SuiteResult res = run_suite(spec, [](const RunRecord& r) {
        std::fprintf(stderr, "  %-6s %-13s seed %llu  K=%4zu  train %.2f  test %.2f  gap %.2f  strain %.4g\n",
                     r.scene.c_str(), r.preset.c_str(), static_cast<unsigned long long>(r.seed), r.final_k,
                     r.train_psnr, r.test_psnr, r.gap, r.mean_strain);
    });
    for (const RunRecord& r : res.rows) {
        if (!r.error.empty() || r.diverged)
            throw std::runtime_error(r.scene + "/" + r.preset + " seed " + std::to_string(r.seed) +
                                     " failed: " + (r.error.empty() ? "diverged" : r.error));
        d.by_preset[r.preset][{r.scene, r.seed}] = r;
        if (std::find(d.scenes.begin(), d.scenes.end(), r.scene) == d.scenes.end()) d.scenes.push_back(r.scene);
    }
    return seconds_since(t0);
}

Desk run_desk_suite(const fs::path& dir, unsigned threads) {
    Desk d;
    try {
        d.seconds = add_desk_runs(d, {"baseline", "A2", "A7", "A8"}, dir / "density", threads);
        d.extra_seconds =
            add_desk_runs(d, {"gad", "eer_strain", "eer_no_norm", "eer_on_embed"}, dir / "priors", threads);
        d.ok = true;
    } catch (const std::exception& e) {
        d.error = e.what();
    }
    return d;
}

void finding_one(const Desk& d, Outcome& o) {
    const double k_ratio = d.mean_k("A2") / d.mean_k("baseline");
    const double gap_ratio = d.mean_gap("A2") / d.mean_gap("baseline");
    const double drop = d.mean_test("baseline") - d.mean_test("A2");
    o.require(k_ratio <= 0.25, "K ratio " + fmt("%.3f", k_ratio));
    o.require(gap_ratio <= 0.6, "gap ratio " + fmt("%.3f", gap_ratio) + " (" + fmt("%.2f", d.mean_gap("A2")) +
                                    " vs " + fmt("%.2f", d.mean_gap("baseline")) + " dB)");
    o.require(drop >= 1.0, "test PSNR drop " + fmt("%.2f", drop) + " dB");
    o.require(d.seconds < 600.0, "suite " + fmt("%.0f", d.seconds) + " s");
}

void threshold_ordering(const Desk& d, Outcome& o) {
    std::size_t ordered = 0, total = 0;
    for (const auto& [cell, base] : d.by_preset.at("baseline")) {
        const std::size_t k8 = d.by_preset.at("A8").at(cell).final_k, k7 = d.by_preset.at("A7").at(cell).final_k;
        ++total;
        if (k8 > base.final_k && base.final_k > k7) ++ordered;
    }
    o.require(ordered == total, "K(A8) > K(base) > K(A7) on " + std::to_string(ordered) + "/" + std::to_string(total));
    const double g8 = d.mean_gap("A8"), gb = d.mean_gap("baseline"), g7 = d.mean_gap("A7");
    o.require(g8 > gb && gb > g7, "mean gaps " + fmt("%.2f", g8) + " > " + fmt("%.2f", gb) + " > " + fmt("%.2f", g7));
}

void finding_two(const Desk& d, Outcome& o) {
    double worst = 1e300;
    std::string per_scene;
    for (const auto& s : d.scenes) {
        const double red = (1.0 - d.scene_strain("eer_strain", s) / d.scene_strain("baseline", s)) * 100.0;
        worst = std::min(worst, red);
        per_scene += (per_scene.empty() ? "" : ", ") + s + " " + fmt("%.1f", red) + "%";
    }
    o.require(worst >= 90.0, "strain reduction " + per_scene);
    const double gr = d.gap_reduction_pct("eer_strain");
    o.require(gr >= 15.0, "gap reduction " + fmt("%.1f", gr) + "%");
    o.detail += "; K ratio " + fmt("%.3f", d.mean_k("eer_strain") / d.mean_k("baseline"));
}

void normalization(const Desk& d, Outcome& o) {
    const double strain = d.gap_reduction_pct("eer_strain");
    const double no_norm = d.gap_reduction_pct("eer_no_norm");
    const double embed = d.gap_reduction_pct("eer_on_embed");
    o.require(no_norm < strain / 3.0, "no_norm " + fmt("%.1f", no_norm) + "% vs strain " + fmt("%.1f", strain) + "%");
    o.require(std::abs(strain - embed) <= 10.0, "on_embed " + fmt("%.1f", embed) + "% within 10 pp");
}

void gad(const Desk* d, Outcome& o) {
    const double tau = gad_threshold(2e-4, 1.0, 1000.0, 1e6, 1e-3);
    o.require(std::abs(tau - 4e-4) <= 1e-12 * 4e-4, "worked example tau = " + fmt("%.6g", tau));

    Rng rng(77);
    std::size_t violations = 0;
    for (int i = 0; i < 1000; ++i) {
        const double t0 = rng.uniform(1e-5, 1e-2), lam = rng.uniform(0.0, 2.0), k = rng.uniform(1.0, 1e5);
        const double n = rng.uniform(1e3, 1e7), de = rng.uniform(1e-8, 1e-1);
        const double base = gad_threshold(t0, lam, k, n, de);
        const double f = 1.0 + rng.uniform(0.01, 1.0);
        if (base < t0) ++violations;
        if (gad_threshold(t0, lam, k * f, n, de) < base) ++violations;
        if (gad_threshold(t0, lam * f, k, n, de) < base) ++violations;
        if (gad_threshold(t0, lam, k, n, de * f) > base) ++violations;
        if (gad_threshold(t0, lam, k, n * f, de) > base) ++violations;
        if (gad_threshold(t0, 0.0, k, n, de) != t0) ++violations;
    }
    o.require(violations == 0, "1000-point sweep, " + std::to_string(violations) + " monotonicity violations");

    if (d == nullptr || !d->ok) {
        o.require(false, "desk suite unavailable");
        return;
    }
    std::size_t lower = 0, total = 0;
    for (const auto& [cell, base] : d->by_preset.at("baseline")) {
        ++total;
        if (d->by_preset.at("gad").at(cell).final_k < base.final_k) ++lower;
    }
    o.require(lower == total, "K(gad) < K(base) on " + std::to_string(lower) + "/" + std::to_string(total) +
                                  " (mean " + fmt("%.0f", d->mean_k("gad")) + " vs " +
                                  fmt("%.0f", d->mean_k("baseline")) + ")");
}

void gradient_suites(Outcome& o) {
    const auto t0 = Clock::now();
    const gradcheck::Stats r = gradcheck::renderer_suite(60);
    const gradcheck::Stats s = gradcheck::smoothness_suite(60);
    const double secs = seconds_since(t0);
    o.require(r.failures == 0 && r.instances >= 50,
              "renderer " + std::to_string(r.compared) + " coords over " + std::to_string(r.instances) +
                  " instances, max rel err " + fmt("%.2e", r.max_rel_err));
    o.require(s.failures == 0 && s.instances >= 50,
              "smoothness " + std::to_string(s.compared) + " coords over " + std::to_string(s.instances) +
                  " instances, max rel err " + fmt("%.2e", s.max_rel_err));
    o.require(secs < 30.0, "runtime " + fmt("%.1f", secs) + " s");
}

void arap_null_space(Outcome& o) {
    Rng rng(99);
    double worst_arap = 0.0, least_strain = 1e300;
    for (int trial = 0; trial < 100; ++trial) {
        const GaussianCloud c = oracle::random_cloud(rng, 10 + rng.index(40));
        const double a = rng.uniform(-std::numbers::pi, std::numbers::pi);
        const double tx = rng.uniform(-1.0, 1.0), ty = rng.uniform(-1.0, 1.0);
        std::vector<double> u(c.positions.size());
        for (std::size_t i = 0; i < c.size(); ++i) {
            const double x = c.positions[2 * i], y = c.positions[2 * i + 1];
            u[2 * i] = std::cos(a) * x - std::sin(a) * y + tx - x;
            u[2 * i + 1] = std::sin(a) * x + std::cos(a) * y + ty - y;
        }
        const NeighborGraph g = build_neighbor_graph(c, 8);
        std::vector<std::size_t> all(c.size());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        worst_arap = std::max(worst_arap, smoothness_loss(SmoothnessVariant::Arap, c, u, {}, 0, g, all, 1.0).loss);
        if (std::abs(a) > 1e-3)
            least_strain =
                std::min(least_strain, smoothness_loss(SmoothnessVariant::Strain, c, u, {}, 0, g, all, 1.0).loss);
    }
    o.require(worst_arap <= 1e-10, "max arap loss " + fmt("%.2e", worst_arap));
    o.require(least_strain > 0.0, "min strain loss under rotation " + fmt("%.3e", least_strain));
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

void determinism(const std::string& cli, const fs::path& dir, Outcome& o) {
    fs::create_directories(dir);
    const fs::path suite = dir / "suite.json";
    std::ofstream(suite) << R"({
  "base": {"iterations": 400},
  "presets": ["baseline", "A2", "eer_strain", "full"],
  "scenes": ["rigid-orbit", "bouncing"],
  "seeds": [1, 2],
  "reproducible": true
})";
    std::vector<fs::path> outs{dir / "run_a", dir / "run_b"};
    for (const auto& out : outs) {
        fs::remove_all(out);
        const std::string cmd = "\"" + cli + "\" suite \"" + suite.string() + "\" -o \"" + out.string() + "\" -q";
        const int rc = std::system(cmd.c_str());
        if (rc != 0) {
            o.require(false, "`" + cmd + "` exited with " + std::to_string(rc));
            return;
        }
    }
    std::size_t compared = 0, differing = 0, checkpoints = 0;
    for (const auto& entry : fs::recursive_directory_iterator(outs[0])) {
        if (!entry.is_regular_file()) continue;
        const fs::path rel = fs::relative(entry.path(), outs[0]);
        const bool is_ckpt = rel.extension() == ".ckpt";
        if (rel != "results.csv" && !is_ckpt) continue;
        ++compared;
        checkpoints += is_ckpt ? 1 : 0;
        if (!fs::exists(outs[1] / rel) || slurp(entry.path()) != slurp(outs[1] / rel)) ++differing;
    }
    o.require(compared > 1 && checkpoints > 0, "compared results.csv and " + std::to_string(checkpoints) + " checkpoints");
    o.require(differing == 0, std::to_string(differing) + " files differ");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dgslab acceptance runner"};
    std::string cli;
    std::string work = (fs::temp_directory_path() / "dgslab_acceptance").string();
    unsigned threads = 0;
    bool skip_suite = false;
    bool strict = false;
    std::string report_path;
    app.add_option("--cli", cli, "Path to the dgslab command-line tool")->required();
    app.add_option("--work", work, "Scratch directory");
    app.add_option("--threads", threads, "Worker threads for the desk suite (0 = all cores)");
    app.add_flag("--skip-suite", skip_suite, "Skip the desk-scale suite (criteria 3 to 7 then fail)");
    app.add_option("--report", report_path, "Also write the criterion lines to this file");
    app.add_flag("--strict", strict, "Exit with status 1 when any criterion fails");
    CLI11_PARSE(app, argc, argv);

    const fs::path root(work);
    fs::create_directories(root);
    if (!report_path.empty() && (g_report = std::fopen(report_path.c_str(), "w")) == nullptr) {
        std::fprintf(stderr, "cannot open %s\n", report_path.c_str());
        return 2;
    }

    guarded(1, "published count-gap correlation", published_correlation);
    guarded(2, "exact Wilcoxon floor and oracle agreement", wilcoxon_floor);

    Desk desk;
    if (!skip_suite) {
        std::fprintf(stderr, "running desk suite (8 presets x 3 scenes x 3 seeds)\n");
        desk = run_desk_suite(root / "desk_suite", threads);
    } else {
        desk.error = "skipped";
    }
    auto with_desk = [&](int id, const std::string& title, void (*body)(const Desk&, Outcome&)) {
        guarded(id, title, [&](Outcome& o) {
            if (!desk.ok) {
                o.require(false, "desk suite: " + desk.error);
                return;
            }
            body(desk, o);
        });
    };
    with_desk(3, "no-split ablation shrinks K, gap and test PSNR", finding_one);
    with_desk(4, "densification threshold ordering", threshold_ordering);
    with_desk(5, "strain prior cuts strain and gap without shrinking K", finding_two);
    with_desk(6, "canonical-distance normalization is load-bearing", normalization);
    guarded(7, "GAD threshold and desk-scale growth", [&](Outcome& o) { gad(&desk, o); });
    guarded(8, "renderer and smoothness gradients", gradient_suites);
    guarded(9, "ARAP null space vs strain under rotation", arap_null_space);
    guarded(10, "suite determinism through the CLI", [&](Outcome& o) { determinism(cli, root / "determinism", o); });

    emit(std::to_string(g_failures) + " of 10 criteria failed\n");
    if (g_report != nullptr) std::fclose(g_report);
    return strict && g_failures > 0 ? 1 : 0;
}
