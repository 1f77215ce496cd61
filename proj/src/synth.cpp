#include "bumpvo/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "bumpvo/eval.hpp"
#include "bumpvo/io_util.hpp"

namespace bumpvo::synth {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr double kFarLimit = 1000.0;
constexpr double kSkyLevel = 32.0;

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

double unit_hash(std::uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; }

double lattice(std::int64_t ix, std::int64_t iy, int octave, std::uint64_t seed) {
    std::uint64_t h = splitmix(seed ^ 0xA5A5A5A5DEADBEEFull);
    h = splitmix(h ^ static_cast<std::uint64_t>(octave));
    h = splitmix(h ^ static_cast<std::uint64_t>(ix));
    h = splitmix(h ^ static_cast<std::uint64_t>(iy));
    return unit_hash(h);
}

std::int64_t wrap(std::int64_t i, std::int64_t period) { return ((i % period) + period) % period; }

}  // namespace

double texture(double u, double v, std::uint64_t seed, int octaves, double cell, int period_cells) {
    if (octaves < 1) throw InvalidArgument("texture: octaves must be >= 1");
    double sum = 0.0, norm = 0.0, amp = 1.0;
    for (int k = 0; k < octaves; ++k) {
        const double c = cell / std::ldexp(1.0, k);
        const std::int64_t period = static_cast<std::int64_t>(period_cells) << k;
        const double gu = u / c, gv = v / c;
        const double fu = std::floor(gu), fv = std::floor(gv);
        const double au = gu - fu, av = gv - fv;
        const auto iu = static_cast<std::int64_t>(fu), iv = static_cast<std::int64_t>(fv);
        const double v00 = lattice(wrap(iu, period), wrap(iv, period), k, seed);
        const double v10 = lattice(wrap(iu + 1, period), wrap(iv, period), k, seed);
        const double v01 = lattice(wrap(iu, period), wrap(iv + 1, period), k, seed);
        const double v11 = lattice(wrap(iu + 1, period), wrap(iv + 1, period), k, seed);
        const double val = (1 - av) * ((1 - au) * v00 + au * v10) + av * ((1 - au) * v01 + au * v11);
        sum += amp * val;
        norm += amp;
        amp *= 0.5;
    }
    return 255.0 * sum / norm;
}

// --- motion ---------------------------------------------------------------

bool VibrationProfile::active(double t) const {
    return std::any_of(windows.begin(), windows.end(), [t](const BurstWindow& w) { return t >= w.start && t <= w.end; });
}

VibrationSample vibration_at(const VibrationProfile& vib, double t) {
    if (!vib.active(t)) return {};
    const std::uint64_t h = splitmix(vib.seed);
    const double phase_p = 2.0 * std::numbers::pi * unit_hash(h);
    const double phase_r = 2.0 * std::numbers::pi * unit_hash(splitmix(h + 1));
    const double phase_z = 2.0 * std::numbers::pi * unit_hash(splitmix(h + 2));
    const double w = 2.0 * std::numbers::pi * vib.frequency_hz * t;
    return {vib.pitch_amplitude_deg * std::sin(w + phase_p), vib.roll_amplitude_deg * std::sin(w + phase_r),
            vib.bounce_amplitude * std::sin(w + phase_z)};
}

namespace {

PoseSE3 pose_from(const Eigen::Vector3d& position, const Eigen::Vector3d& heading, double pitch_rad, double roll_rad) {
    const Eigen::Vector3d up(0.0, 0.0, 1.0);
    const Eigen::Vector3d forward = std::cos(pitch_rad) * heading - std::sin(pitch_rad) * up;
    const Eigen::Vector3d right0 = heading.cross(up).normalized();
    const Eigen::Vector3d down0 = forward.cross(right0);
    const Eigen::Vector3d right = std::cos(roll_rad) * right0 + std::sin(roll_rad) * down0;
    const Eigen::Vector3d down = -std::sin(roll_rad) * right0 + std::cos(roll_rad) * down0;
    Eigen::Matrix3d R;
    R.col(0) = right;
    R.col(1) = down;
    R.col(2) = forward;
    return PoseSE3(R, position);
}

void path_at(const MotionConfig& m, double t, Eigen::Vector3d& pos, Eigen::Vector3d& heading) {
    const double s = m.speed * t;
    if (m.path == PathKind::Straight) {
        pos = Eigen::Vector3d(s, 0.0, 0.0);
        heading = Eigen::Vector3d(1.0, 0.0, 0.0);
    } else {
        const double phi = s / m.arc_radius;
        pos = Eigen::Vector3d(m.arc_radius * std::sin(phi), m.arc_radius * (1.0 - std::cos(phi)), 0.0);
        heading = Eigen::Vector3d(std::cos(phi), std::sin(phi), 0.0);
    }
}

}  // namespace

PoseSE3 base_pose(const MotionConfig& motion, double camera_height, double plane_height, double t) {
    return camera_pose(motion, VibrationProfile{}, camera_height, plane_height, t);
}

PoseSE3 camera_pose(const MotionConfig& motion, const VibrationProfile& vib, double camera_height,
                    double plane_height, double t) {
    Eigen::Vector3d pos, heading;
    path_at(motion, t, pos, heading);
    const VibrationSample s = vibration_at(vib, t);
    pos.z() = plane_height + camera_height + s.bounce;
    return pose_from(pos, heading, (motion.camera_pitch_deg + s.pitch_deg) * kDeg, s.roll_deg * kDeg);
}

Trajectory generate_trajectory(const MotionConfig& motion, const VibrationProfile& vib, double camera_height,
                               double plane_height) {
    if (!(motion.duration > 0.0) || !(motion.fps > 0.0) || !(motion.speed > 0.0))
        throw InvalidArgument("generate_trajectory: duration, fps and speed must be > 0");
    Trajectory traj;
    const int n = static_cast<int>(std::lround(motion.duration * motion.fps));
    for (int i = 0; i < n; ++i) {
        const double t = i / motion.fps;
        traj.push_back(t, camera_pose(motion, vib, camera_height, plane_height, t));
    }
    return traj;
}

// --- rendering ------------------------------------------------------------

void SceneConfig::validate() const {
    if (width < 64 || height < 64) throw InvalidArgument("scene: image must be at least 64x64");
    if (!(camera_height > 0.0)) throw InvalidArgument("scene: camera must be above the plane");
    if (texture_octaves < 1) throw InvalidArgument("scene: texture_octaves must be >= 1");
    if (!(texture_cell > 0.0) || texture_period_cells < 1) throw InvalidArgument("scene: bad texture lattice");
    if (supersample < 1) throw InvalidArgument("scene: supersample must be >= 1");
    K.validate(width, height);
}

namespace {

// Returns the intensity seen along `dir` from `origin`, or a negative value
// when the ray escapes to the sky.
double shade(const SceneConfig& sc, const Eigen::Vector3d& origin, const Eigen::Vector3d& dir) {
    double best_t = kFarLimit;
    double value = -1.0;
    if (dir.z() < 0.0) {
        const double t = (sc.plane_height - origin.z()) / dir.z();
        if (t > 0.0 && t < best_t) {
            const Eigen::Vector3d p = origin + t * dir;
            best_t = t;
            value = texture(p.x(), p.y(), sc.texture_seed, sc.texture_octaves, sc.texture_cell, sc.texture_period_cells);
        }
    }
    if (sc.wall_offset > 0.0 && dir.y() != 0.0) {
        for (int side : {1, -1}) {
            const double t = (side * sc.wall_offset - origin.y()) / dir.y();
            if (!(t > 0.0 && t < best_t)) continue;
            const Eigen::Vector3d p = origin + t * dir;
            const double h = p.z() - sc.plane_height;
            if (h < 0.0 || h > sc.wall_height) continue;
            best_t = t;
            value = texture(p.x(), p.z(), sc.texture_seed + (side > 0 ? 101 : 202), sc.texture_octaves,
                            sc.texture_cell, sc.texture_period_cells);
        }
    }
    return value;
}

}  // namespace

GrayImage render(const PoseSE3& pose, const SceneConfig& scene, std::uint64_t noise_seed) {
    scene.validate();
    if (!(pose.translation.z() > scene.plane_height)) throw InvalidArgument("render: camera below the ground plane");

    const Eigen::Matrix3d R = pose.R();
    const Eigen::Vector3d C = pose.translation;
    const int n = scene.supersample;
    GrayImage img(scene.width, scene.height);
    for (int y = 0; y < scene.height; ++y)
        for (int x = 0; x < scene.width; ++x) {
            const std::uint64_t h = splitmix(noise_seed ^ splitmix((static_cast<std::uint64_t>(y) << 32) | x));
            const double sky = kSkyLevel + static_cast<double>(static_cast<int>(h % 5) - 2);
            double acc = 0.0;
            for (int sy = 0; sy < n; ++sy)
                for (int sx = 0; sx < n; ++sx) {
                    // sub-sample offsets centred on the pixel
                    const double u = x + (sx + 0.5) / n - 0.5;
                    const double v = y + (sy + 0.5) / n - 0.5;
                    const Eigen::Vector3d d =
                        R * Eigen::Vector3d((u - scene.K.cx) / scene.K.fx, (v - scene.K.cy) / scene.K.fy, 1.0);
                    const double s = shade(scene, C, d);
                    acc += s >= 0.0 ? s : sky;
                }
            img.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::round(acc / (n * n)), 0.0, 255.0));
        }
    return img;
}

// --- sequences ------------------------------------------------------------

std::vector<BurstWindow> parse_windows(const std::string& text) {
    std::vector<BurstWindow> out;
    if (text == "none" || text.empty()) return out;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        const size_t colon = item.find(':');
        if (colon == std::string::npos) throw ConfigError("burst_windows", "expected start:end, got '" + item + "'");
        try {
            out.push_back({std::stod(item.substr(0, colon)), std::stod(item.substr(colon + 1))});
        } catch (const std::exception&) {
            throw ConfigError("burst_windows", "not a number in '" + item + "'");
        }
        if (!(out.back().end >= out.back().start)) throw ConfigError("burst_windows", "window ends before it starts");
    }
    return out;
}

std::string format_windows(const std::vector<BurstWindow>& windows) {
    if (windows.empty()) return "none";
    std::string s;
    for (size_t i = 0; i < windows.size(); ++i) {
        if (i) s += ",";
        s += format_double(windows[i].start) + ":" + format_double(windows[i].end);
    }
    return s;
}

SequenceConfig SequenceConfig::from_config(const KeyValueConfig& kv) {
    SequenceConfig c;
    auto& m = c.motion;
    m.duration = kv.require_double("duration");
    m.fps = kv.require_double("fps");
    m.speed = kv.require_double("speed");
    const std::string path = kv.get_string("path", "straight");
    if (path == "straight")
        m.path = PathKind::Straight;
    else if (path == "arc")
        m.path = PathKind::Arc;
    else
        throw ConfigError("path", "expected 'straight' or 'arc'");
    m.arc_radius = kv.get_double("arc_radius", m.arc_radius);
    m.camera_pitch_deg = kv.get_double("camera_pitch_deg", m.camera_pitch_deg);
    if (!(m.duration > 0.0)) throw ConfigError("duration", "must be > 0");
    if (!(m.fps > 0.0)) throw ConfigError("fps", "must be > 0");
    if (!(m.speed > 0.0)) throw ConfigError("speed", "must be > 0");
    if (!(m.arc_radius > 0.0)) throw ConfigError("arc_radius", "must be > 0");

    auto& s = c.scene;
    s.plane_height = kv.get_double("plane_height", s.plane_height);
    s.texture_seed = static_cast<std::uint64_t>(kv.get_int("texture_seed", static_cast<int>(s.texture_seed)));
    s.texture_octaves = kv.get_int("texture_octaves", s.texture_octaves);
    s.texture_cell = kv.get_double("texture_cell", s.texture_cell);
    s.texture_period_cells = kv.get_int("texture_period_cells", s.texture_period_cells);
    s.camera_height = kv.get_double("camera_height", s.camera_height);
    s.K.fx = kv.get_double("fx", s.K.fx);
    s.K.fy = kv.get_double("fy", s.K.fy);
    s.K.cx = kv.get_double("cx", s.K.cx);
    s.K.cy = kv.get_double("cy", s.K.cy);
    s.width = kv.get_int("width", s.width);
    s.height = kv.get_int("height", s.height);
    s.wall_offset = kv.get_double("wall_offset", s.wall_offset);
    s.wall_height = kv.get_double("wall_height", s.wall_height);
    s.supersample = kv.get_int("supersample", s.supersample);
    if (s.texture_octaves < 1) throw ConfigError("texture_octaves", "must be >= 1");
    if (!(s.camera_height > 0.0)) throw ConfigError("camera_height", "camera must be above the plane");
    if (s.width < 64) throw ConfigError("width", "must be >= 64");
    if (s.height < 64) throw ConfigError("height", "must be >= 64");
    if (s.supersample < 1) throw ConfigError("supersample", "must be >= 1");
    try {
        s.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError("scene", e.what());
    }

    auto& v = c.vibration;
    v.pitch_amplitude_deg = kv.get_double("pitch_amplitude_deg", v.pitch_amplitude_deg);
    v.roll_amplitude_deg = kv.get_double("roll_amplitude_deg", v.roll_amplitude_deg);
    v.frequency_hz = kv.get_double("frequency_hz", v.frequency_hz);
    v.bounce_amplitude = kv.get_double("bounce_amplitude", v.bounce_amplitude);
    v.seed = static_cast<std::uint64_t>(kv.get_int("vibration_seed", static_cast<int>(v.seed)));
    if (kv.has("burst_windows"))
        v.windows = parse_windows(kv.get_string("burst_windows", ""));
    else
        v.windows = {{0.0, m.duration}};
    if (v.pitch_amplitude_deg < 0.0) throw ConfigError("pitch_amplitude_deg", "must be >= 0");
    if (v.roll_amplitude_deg < 0.0) throw ConfigError("roll_amplitude_deg", "must be >= 0");
    if (v.bounce_amplitude < 0.0) throw ConfigError("bounce_amplitude", "must be >= 0");
    for (const auto& w : v.windows)
        if (w.start < 0.0 || w.end > m.duration) throw ConfigError("burst_windows", "window outside the sequence");
    return c;
}

int SequenceConfig::frame_count() const { return static_cast<int>(std::lround(motion.duration * motion.fps)); }

std::string SequenceConfig::manifest() const {
    ManifestWriter w;
    w.comment("synthetic sequence, resolved configuration");
    w.add("duration", motion.duration);
    w.add("fps", motion.fps);
    w.add("speed", motion.speed);
    w.add("path", std::string(motion.path == PathKind::Straight ? "straight" : "arc"));
    w.add("arc_radius", motion.arc_radius);
    w.add("camera_pitch_deg", motion.camera_pitch_deg);
    w.add("plane_height", scene.plane_height);
    w.add("texture_seed", std::to_string(scene.texture_seed));
    w.add("texture_octaves", scene.texture_octaves);
    w.add("texture_cell", scene.texture_cell);
    w.add("texture_period_cells", scene.texture_period_cells);
    w.add("camera_height", scene.camera_height);
    w.add("fx", scene.K.fx);
    w.add("fy", scene.K.fy);
    w.add("cx", scene.K.cx);
    w.add("cy", scene.K.cy);
    w.add("width", scene.width);
    w.add("height", scene.height);
    w.add("wall_offset", scene.wall_offset);
    w.add("wall_height", scene.wall_height);
    w.add("supersample", scene.supersample);
    w.add("pitch_amplitude_deg", vibration.pitch_amplitude_deg);
    w.add("roll_amplitude_deg", vibration.roll_amplitude_deg);
    w.add("frequency_hz", vibration.frequency_hz);
    w.add("bounce_amplitude", vibration.bounce_amplitude);
    w.add("burst_windows", format_windows(vibration.windows));
    w.add("vibration_seed", std::to_string(vibration.seed));
    return w.str();
}

void generate_sequence(const SequenceConfig& cfg, const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec || !std::filesystem::is_directory(out_dir)) throw IoError("cannot create " + out_dir.string());

    const Trajectory gt =
        generate_trajectory(cfg.motion, cfg.vibration, cfg.scene.camera_height, cfg.scene.plane_height);
    std::vector<double> times;
    for (size_t i = 0; i < gt.size(); ++i) {
        const auto& e = gt.entries[i];
        save_pgm(render(e.pose, cfg.scene, cfg.scene.texture_seed ^ static_cast<std::uint64_t>(i)),
                 out_dir / frame_filename(static_cast<int>(i)));
        times.push_back(e.timestamp);
    }
    write_times(times, out_dir / "times.txt");
    write_tum(gt, out_dir / "groundtruth.txt");
    write_file_atomic(out_dir / "manifest.txt", cfg.manifest());
}

}  // namespace bumpvo::synth
