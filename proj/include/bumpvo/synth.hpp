#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "bumpvo/config.hpp"
#include "bumpvo/geometry.hpp"
#include "bumpvo/image.hpp"

namespace bumpvo::synth {

// World frame: z up, ground plane at z = plane_height, nominal travel along +x.

struct SceneConfig {
    double plane_height = 0.0;  // m
    std::uint64_t texture_seed = 1;
    int texture_octaves = 4;
    double texture_cell = 0.5;  // m, coarsest lattice spacing
    int texture_period_cells = 64;  // lattice repeats every period_cells * cell metres
    double camera_height = 1.5;  // m above the plane
    CameraIntrinsics K{};
    int width = 640;
    int height = 480;
    // Textured side walls at y = +-wall_offset rising wall_height above the
    // plane; wall_offset <= 0 renders the bare ground plane.
    double wall_offset = 4.0;
    double wall_height = 3.0;
    int supersample = 2;  // n x n samples per pixel

    void validate() const;
};

struct BurstWindow {
    double start = 0.0;
    double end = 0.0;
};

struct VibrationProfile {
    double pitch_amplitude_deg = 0.0;
    double roll_amplitude_deg = 0.0;
    double frequency_hz = 8.0;
    double bounce_amplitude = 0.0;  // m
    std::vector<BurstWindow> windows;  // empty: vibration never active
    std::uint64_t seed = 7;

    bool active(double t) const;
};

struct VibrationSample {
    double pitch_deg = 0.0;
    double roll_deg = 0.0;
    double bounce = 0.0;
};

/// Perturbation at time t; zero outside every burst window.
VibrationSample vibration_at(const VibrationProfile& vib, double t);

enum class PathKind { Straight, Arc };

struct MotionConfig {
    double duration = 6.0;  // s
    double fps = 10.0;
    double speed = 1.5;  // m/s
    PathKind path = PathKind::Straight;
    double arc_radius = 20.0;  // m, left turn
    double camera_pitch_deg = 30.0;  // downward
};

/// Multi-octave value noise in [0, 255]; pure in all arguments and periodic
/// with period `period_cells * cell` metres along both axes.
double texture(double u, double v, std::uint64_t seed, int octaves, double cell = 0.5, int period_cells = 64);

/// Camera pose (world-from-camera) on the undisturbed path at time t.
PoseSE3 base_pose(const MotionConfig& motion, double camera_height, double plane_height, double t);
/// Pose with vibration applied.
PoseSE3 camera_pose(const MotionConfig& motion, const VibrationProfile& vib, double camera_height,
                    double plane_height, double t);

Trajectory generate_trajectory(const MotionConfig& motion, const VibrationProfile& vib, double camera_height,
                               double plane_height);

/// Ray-casts the scene. `noise_seed` drives the per-pixel sky noise.
GrayImage render(const PoseSE3& pose, const SceneConfig& scene, std::uint64_t noise_seed = 0);

struct SequenceConfig {
    SceneConfig scene;
    MotionConfig motion;
    VibrationProfile vibration;

    /// Reads every documented key; duration, fps and speed are required.
    static SequenceConfig from_config(const KeyValueConfig& kv);
    std::string manifest() const;
    int frame_count() const;
};

std::vector<BurstWindow> parse_windows(const std::string& text);
std::string format_windows(const std::vector<BurstWindow>& windows);

/// Writes NNNNNN.pgm, times.txt, groundtruth.txt (TUM) and manifest.txt.
void generate_sequence(const SequenceConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace bumpvo::synth
