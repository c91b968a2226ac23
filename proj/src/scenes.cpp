// Copyright 2026 The dgslab Authors
// SPDX-License-Identifier: Apache-2.0

#include "dgslab/scenes.hpp"

#include <cmath>
#include <numbers>

#include "dgslab/container.hpp"
#include "dgslab/error.hpp"
#include "dgslab/rng.hpp"

namespace dgs {

std::string_view to_string(SceneKind kind) {
    switch (kind) {
        case SceneKind::RigidOrbit: return "rigid-orbit";
        case SceneKind::ArticulatedTwoPart: return "articulated-two-part";
        case SceneKind::Bouncing: return "bouncing";
    }
    return "unknown";
}

SceneKind scene_kind_from_string(std::string_view name) {
    if (name == "rigid-orbit") return SceneKind::RigidOrbit;
    if (name == "articulated-two-part") return SceneKind::ArticulatedTwoPart;
    if (name == "bouncing") return SceneKind::Bouncing;
    fail(ErrorCode::Config, "unknown scene generator kind '" + std::string(name) + "'");
}

void SceneSpec::validate() const {
    auto bad = [](const std::string& m) { fail(ErrorCode::Config, "scene: " + m); };
    if (gt_count < 2) bad("gt_count must be >= 2");
    if (!(motion_amplitude >= 0.0) || !std::isfinite(motion_amplitude)) bad("motion_amplitude must be >= 0");
    if (train_views < 2) bad("train_views must be >= 2");
    if (test_views < 1 || test_views >= train_views) bad("test_views must be in [1, train_views)");
    if (width < 1) bad("width must be >= 1");
    if (dim != 2 && dim != 3) bad("dim must be 2 or 3");
    if (!(pixel_extent > 0.0)) bad("pixel_extent must be > 0");
    if (!std::isfinite(camera_arc) || !std::isfinite(test_angle_offset) || !std::isfinite(background))
        bad("non-finite camera parameter");
    if (kind == SceneKind::ArticulatedTwoPart && gt_count < 4) bad("articulated scenes need gt_count >= 4");
    if (kind == SceneKind::Bouncing && gt_count < 3) bad("bouncing scenes need gt_count >= 3");
}

std::vector<double> GroundTruth::part_displacement(int p, double t) const {
    const double* m = motion.data() + 4 * p;
    const double dir_x = m[0], dir_y = m[1], phase = m[2], freq = m[3];
    double dx = 0.0, dy = 0.0;
    switch (kind) {
        case SceneKind::RigidOrbit: {
            const double a = 2.0 * std::numbers::pi * freq * t + phase;
            dx = amplitude * (std::cos(a) - std::cos(phase));
            dy = amplitude * (std::sin(a) - std::sin(phase));
            break;
        }
        case SceneKind::ArticulatedTwoPart: {
            const double s = amplitude * (std::sin(2.0 * std::numbers::pi * freq * t + phase) - std::sin(phase));
            dx = s * dir_x;
            dy = s * dir_y;
            break;
        }
        case SceneKind::Bouncing: {
            const double s = amplitude * (std::abs(std::sin(std::numbers::pi * (freq * t + phase))) -
                                          std::abs(std::sin(std::numbers::pi * phase)));
            dx = s * dir_x;
            dy = s * dir_y;
            break;
        }
    }
    std::vector<double> d(cloud.dim, 0.0);
    d[0] = dx;
    d[1] = dy;
    return d;
}

std::vector<double> GroundTruth::displacement(double t) const {
    const std::size_t dim = static_cast<std::size_t>(cloud.dim);
    std::vector<double> u(cloud.size() * dim, 0.0);
    std::vector<std::vector<double>> per_part;
    for (int p = 0; p < part_count(); ++p) per_part.push_back(part_displacement(p, t));
    for (std::size_t i = 0; i < cloud.size(); ++i)
        for (std::size_t c = 0; c < dim; ++c) u[i * dim + c] = per_part[part[i]][c];
    return u;
}

Image Scene::render_truth(double angle, double t) const {
    const auto u = truth.displacement(t);
    return render_forward(truth.cloud, u, camera(angle));
}

namespace {

struct Blob {
    double cx, cy, rx, ry;
    int part;
};

void scatter(GroundTruth& gt, const Blob& b, int count, int dim, Rng& rng) {
    for (int n = 0; n < count; ++n) {
        double x, y;
        do {
            x = rng.uniform(-1.0, 1.0);
            y = rng.uniform(-1.0, 1.0);
        } while (x * x + y * y > 1.0);
        gt.cloud.positions.push_back(b.cx + b.rx * x);
        gt.cloud.positions.push_back(b.cy + b.ry * y);
        if (dim == 3) gt.cloud.positions.push_back(rng.uniform(-0.3, 0.3));
        gt.cloud.log_scales.push_back(std::log(rng.uniform(0.035, 0.08)));
        gt.cloud.opacity_logits.push_back(logit(rng.uniform(0.6, 0.95)));
        gt.cloud.colors.push_back(rng.uniform(0.25, 1.0));
        gt.cloud.depth_keys.push_back(0.0);
        gt.part.push_back(b.part);
    }
}

GroundTruth make_truth(const SceneSpec& spec, Rng& rng) {
    GroundTruth gt;
    gt.kind = spec.kind;
    gt.amplitude = spec.motion_amplitude;
    gt.cloud.dim = spec.dim;
    const double two_pi = 2.0 * std::numbers::pi;
    switch (spec.kind) {
        case SceneKind::RigidOrbit: {
            const Blob blobs[] = {{-0.25, 0.05, 0.45, 0.3, 0}, {0.3, -0.1, 0.3, 0.4, 0}, {0.05, 0.35, 0.35, 0.2, 0}};
            const int per = spec.gt_count / 3;
            scatter(gt, blobs[0], spec.gt_count - 2 * per, spec.dim, rng);
            scatter(gt, blobs[1], per, spec.dim, rng);
            scatter(gt, blobs[2], per, spec.dim, rng);
            gt.motion = {0.0, 0.0, rng.uniform(0.0, two_pi), 1.0};
            break;
        }
        case SceneKind::ArticulatedTwoPart: {
            const int limb = spec.gt_count / 3;
            scatter(gt, {-0.3, 0.0, 0.5, 0.35, 0}, spec.gt_count - limb, spec.dim, rng);
            scatter(gt, {0.45, 0.0, 0.3, 0.13, 1}, limb, spec.dim, rng);
            gt.motion = {0.0, 0.0, 0.0, 1.0,  //
                         0.0, 1.0, rng.uniform(0.0, two_pi), 1.0};
            break;
        }
        case SceneKind::Bouncing: {
            const int per = spec.gt_count / 3;
            const int counts[] = {spec.gt_count - 2 * per, per, per};
            for (int b = 0; b < 3; ++b) {
                scatter(gt, {-0.65 + 0.65 * b, -0.25, 0.22, 0.22, b}, counts[b], spec.dim, rng);
                gt.motion.insert(gt.motion.end(), {0.0, 1.0, rng.uniform(0.0, 1.0), 1.0 + 0.5 * b});
            }
            break;
        }
    }
    return gt;
}

}  // namespace

Scene generate_scene(const SceneSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    Scene scene;
    scene.spec = spec;
    scene.truth = make_truth(spec, rng);
    const double angle0 = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const auto trajectory = [&](double t) { return angle0 + spec.camera_arc * t; };

    const int n = spec.train_views;
    for (int k = 0; k < n; ++k) {
        const double t = (k + 0.5) / n;
        scene.train.push_back({trajectory(t), t, scene.render_truth(trajectory(t), t)});
    }
    for (int j = 0; j < spec.test_views; ++j) {
        const int k = static_cast<int>((static_cast<long long>(j) * n) / spec.test_views);
        const double t = static_cast<double>(k + 1) / n;  // midway between training timesteps k and k+1
        const double angle = trajectory(t) + (j % 2 == 0 ? 1.0 : -1.0) * spec.test_angle_offset;
        scene.test.push_back({angle, t, scene.render_truth(angle, t)});
    }
    return scene;
}

SceneSpec default_scene(SceneKind kind, std::uint64_t seed) {
    SceneSpec s;
    s.kind = kind;
    s.seed = seed;
    switch (kind) {
        case SceneKind::RigidOrbit:
            s.name = "orbit";
            s.gt_count = 48;
            s.motion_amplitude = 0.3;
            break;
        case SceneKind::ArticulatedTwoPart:
            s.name = "jacks";
            s.gt_count = 60;
            s.motion_amplitude = 0.3;
            break;
        case SceneKind::Bouncing:
            s.name = "balls";
            s.gt_count = 45;
            s.motion_amplitude = 0.45;
            break;
    }
    return s;
}

namespace {

void write_view(BinaryWriter& w, const ViewSample& v) {
    w.f64(v.angle);
    w.f64(v.t);
    w.f64s(v.image);
}

ViewSample read_view(BinaryReader& r) {
    ViewSample v;
    v.angle = r.f64();
    v.t = r.f64();
    v.image = r.f64s();
    return v;
}

}  // namespace

std::string encode_scene(const Scene& scene) {
    BinaryWriter w;
    w.header(PayloadKind::Scene);
    const SceneSpec& s = scene.spec;
    w.str(s.name);
    w.str(to_string(s.kind));
    w.i32(s.gt_count);
    w.f64(s.motion_amplitude);
    w.i32(s.train_views);
    w.i32(s.test_views);
    w.i32(s.width);
    w.u64(s.seed);
    w.i32(s.dim);
    w.f64(s.pixel_extent);
    w.f64(s.background);
    w.f64(s.camera_arc);
    w.f64(s.test_angle_offset);
    write_cloud(w, scene.truth.cloud);
    w.i32s(scene.truth.part);
    w.f64(scene.truth.amplitude);
    w.f64s(scene.truth.motion);
    w.u64(scene.train.size());
    for (const auto& v : scene.train) write_view(w, v);
    w.u64(scene.test.size());
    for (const auto& v : scene.test) write_view(w, v);
    return w.bytes();
}

Scene decode_scene(std::string_view bytes) {
    BinaryReader r(bytes);
    r.header(PayloadKind::Scene);
    Scene scene;
    SceneSpec& s = scene.spec;
    s.name = r.str();
    try {
        s.kind = scene_kind_from_string(r.str());
    } catch (const Error&) {
        fail(ErrorCode::Parse, "scene file names an unknown generator kind");
    }
    s.gt_count = r.i32();
    s.motion_amplitude = r.f64();
    s.train_views = r.i32();
    s.test_views = r.i32();
    s.width = r.i32();
    s.seed = r.u64();
    s.dim = r.i32();
    s.pixel_extent = r.f64();
    s.background = r.f64();
    s.camera_arc = r.f64();
    s.test_angle_offset = r.f64();
    scene.truth.kind = s.kind;
    scene.truth.cloud = read_cloud(r);
    scene.truth.part = r.i32s();
    scene.truth.amplitude = r.f64();
    scene.truth.motion = r.f64s();
    const auto n_train = r.u64();
    for (std::uint64_t i = 0; i < n_train; ++i) scene.train.push_back(read_view(r));
    const auto n_test = r.u64();
    for (std::uint64_t i = 0; i < n_test; ++i) scene.test.push_back(read_view(r));
    if (!r.at_end()) fail(ErrorCode::Parse, "trailing bytes after scene payload");
    if (scene.truth.part.size() != scene.truth.cloud.size() || scene.truth.motion.size() % 4 != 0)
        fail(ErrorCode::Parse, "inconsistent ground-truth record");
    return scene;
}

void save_scene(const Scene& scene, const std::string& path) { write_file(path, encode_scene(scene)); }

Scene load_scene(const std::string& path) { return decode_scene(read_file(path)); }

}  // namespace dgs
