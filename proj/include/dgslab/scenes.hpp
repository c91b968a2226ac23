// Copyright 2026 The dgslab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "dgslab/cloud.hpp"
#include "dgslab/renderer.hpp"

namespace dgs {

enum class SceneKind { RigidOrbit, ArticulatedTwoPart, Bouncing };

std::string_view to_string(SceneKind kind);
SceneKind scene_kind_from_string(std::string_view name);  // throws Config

struct SceneSpec {
    std::string name = "orbit";
    SceneKind kind = SceneKind::RigidOrbit;
    int gt_count = 48;
    double motion_amplitude = 0.3;  // world units
    int train_views = 24;
    int test_views = 12;
    int width = 64;
    std::uint64_t seed = 1;
    int dim = 2;
    double pixel_extent = 0.05;
    double background = 0.0;
    double camera_arc = 6.283185307179586;  // radians swept by the training trajectory over t in [0,1]
    double test_angle_offset = 0.5;         // radians off the trajectory for held-out poses

    void validate() const;
    bool operator==(const SceneSpec&) const = default;
};

// Every part moves by pure translation, so the true strain is zero inside a
// part and only neighbor pairs straddling two parts see relative motion.
struct GroundTruth {
    SceneKind kind = SceneKind::RigidOrbit;
    GaussianCloud cloud;
    std::vector<int> part;       // per Gaussian
    double amplitude = 0.0;
    std::vector<double> motion;  // per part: dir_x, dir_y, phase, frequency

    int part_count() const { return static_cast<int>(motion.size() / 4); }
    std::vector<double> part_displacement(int p, double t) const;  // dim entries
    std::vector<double> displacement(double t) const;              // K*dim

    bool operator==(const GroundTruth&) const = default;
};

struct ViewSample {
    double angle = 0.0;
    double t = 0.0;
    Image image;

    bool operator==(const ViewSample&) const = default;
};

struct Scene {
    SceneSpec spec;
    GroundTruth truth;
    std::vector<ViewSample> train;
    std::vector<ViewSample> test;

    Camera camera(double angle) const { return Camera{angle, spec.width, spec.pixel_extent, spec.background}; }
    /// Renders the ground truth at (angle, t).
    Image render_truth(double angle, double t) const;
    std::size_t train_pixel_count() const { return train.size() * static_cast<std::size_t>(spec.width); }

    bool operator==(const Scene&) const = default;
};

/// Deterministic in spec.seed. One training view per training timestep on
/// the trajectory angle(t) = angle0 + arc * t; held-out views sit at
/// interleaved timesteps and off-trajectory angles.
Scene generate_scene(const SceneSpec& spec);

std::string encode_scene(const Scene& scene);
Scene decode_scene(std::string_view bytes);
void save_scene(const Scene& scene, const std::string& path);
Scene load_scene(const std::string& path);

/// Desk presets spanning the three motion regimes.
SceneSpec default_scene(SceneKind kind, std::uint64_t seed);

}  // namespace dgs
