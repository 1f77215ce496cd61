#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "bumpvo/pose.hpp"

namespace bumpvo {

// --- TUM trajectory format -------------------------------------------------
// `timestamp tx ty tz qx qy qz qw`, whitespace separated, '#' starts a comment.

Trajectory parse_tum(const std::string& text);
std::string format_tum(const Trajectory& traj);
Trajectory read_tum(const std::filesystem::path& path);
void write_tum(const Trajectory& traj, const std::filesystem::path& path);

/// Quaternions whose norm is further than this from 1 are rejected on read.
inline constexpr double kQuaternionTolerance = 1e-3;

// --- association & alignment ----------------------------------------------

struct IndexPair {
    size_t a = 0;
    size_t b = 0;
    bool operator==(const IndexPair&) const = default;
};

/// Greedy nearest-timestamp pairing in order of a's timestamps; each entry is
/// used at most once. Throws EmptyAssociation when nothing pairs.
std::vector<IndexPair> associate(const Trajectory& a, const Trajectory& b, double max_dt);

struct AlignmentTransform {
    double scale = 1.0;
    Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();

    Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return scale * (rotation * p) + translation; }
};

/// Closed-form least-squares fit of dst ~ s R src + t (Umeyama 1991) with
/// reflection correction. `with_scale == false` pins s to 1.
AlignmentTransform umeyama(const std::vector<Eigen::Vector3d>& src, const std::vector<Eigen::Vector3d>& dst,
                           bool with_scale);

// --- error metrics --------------------------------------------------------

struct ErrorStats {
    double rmse = 0.0;
    double mean = 0.0;
    double median = 0.0;
    double min = 0.0;
    double max = 0.0;
    size_t n = 0;
};

ErrorStats compute_stats(std::vector<double> errors);

struct AteResult {
    ErrorStats stats;
    AlignmentTransform alignment;
};

AteResult ate(const Trajectory& est, const Trajectory& gt, bool with_scale, double max_dt);

struct RpeResult {
    ErrorStats translational;  // meters
    ErrorStats rotational;     // degrees
};

/// Relative pose error over `delta` associated frames.
RpeResult rpe(const Trajectory& est, const Trajectory& gt, int delta, double max_dt);

// --- plotting -------------------------------------------------------------

struct NamedTrajectory {
    std::string name;
    Trajectory traj;
};

/// Top-down (x, y) polyline plot with metric ticks and a legend.
std::string plot_svg(const std::vector<NamedTrajectory>& trajectories);
void write_plot_svg(const std::vector<NamedTrajectory>& trajectories, const std::filesystem::path& out);

}  // namespace bumpvo
