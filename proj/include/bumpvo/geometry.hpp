#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "bumpvo/flow.hpp"
#include "bumpvo/pose.hpp"

namespace bumpvo {

struct CameraIntrinsics {
    double fx = 400.0, fy = 400.0;
    double cx = 320.0, cy = 240.0;

    /// Throws InvalidArgument unless focal lengths are positive and the
    /// principal point lies inside a `width` x `height` image.
    void validate(int width, int height) const;
    Eigen::Matrix3d matrix() const;
};

std::vector<Eigen::Vector2d> normalize(const std::vector<Point2>& pixels, const CameraIntrinsics& K);
Eigen::Vector2d normalize(const Point2& pixel, const CameraIntrinsics& K);
Point2 denormalize(const Eigen::Vector2d& unit, const CameraIntrinsics& K);

/// A correspondence on the unit plane: x1 in the first view, x2 in the second.
struct Correspondence {
    Eigen::Vector2d x1;
    Eigen::Vector2d x2;
};

/// Relative motion mapping view-1 coordinates into view 2: X2 = R X1 + t.
struct RelativePose {
    Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
    Eigen::Vector3d t = Eigen::Vector3d::Zero();
};

/// Linear 8-point estimate projected onto the essential manifold with
/// singular values (1, 1, 0), i.e. Frobenius norm sqrt(2).
Eigen::Matrix3d eight_point(const std::vector<Correspondence>& corr);

/// First-order geometric distance to the epipolar constraint, in unit-plane units.
double sampson_distance(const Eigen::Matrix3d& E, const Correspondence& c);

struct RansacResult {
    Eigen::Matrix3d E;
    std::vector<bool> inliers;
    int n_inliers = 0;
};

/// Seeded 8-point RANSAC; the consensus set is refitted once. Pure in all
/// arguments. Throws PoseEstimationFailed when fewer than 8 inliers remain.
RansacResult ransac_essential(const std::vector<Correspondence>& corr, int iters, double thresh, std::uint64_t seed);

/// Cheirality-based choice among the four (R, t) factorizations of E. The
/// winner must have at least twice the positive-depth count of the runner-up.
RelativePose decompose(const Eigen::Matrix3d& E, const std::vector<Correspondence>& corr);

/// Levenberg-Marquardt refinement of (R, t) minimising the summed squared
/// Sampson distance. t stays unit length. Returns the input when no step
/// lowers the cost.
RelativePose refine_pose(const RelativePose& init, const std::vector<Correspondence>& corr, int max_iters = 20);

struct TriangulatedPoint {
    Eigen::Vector3d X;  // world frame
    double depth_a = 0.0;
    double depth_b = 0.0;
    bool far = false;  // depth above kFarDepth or a point at infinity
};

inline constexpr double kFarDepth = 1e6;

/// Linear (DLT) triangulation. Poses are world-from-camera.
std::vector<TriangulatedPoint> triangulate(const PoseSE3& pose_a, const PoseSE3& pose_b,
                                           const std::vector<Correspondence>& corr);

/// Median over shared tracks of prev_depth / cur_depth, both measured in the
/// frame common to the two pairs. Needs at least 5 positive pairs.
double propagate_scale(const std::vector<double>& prev_depths, const std::vector<double>& cur_depths);

inline constexpr int kMinScaleTracks = 5;

/// Left-composes relative motions onto the identity: pose_k = pose_{k-1} * rel_k.
/// `timestamps` has one entry per output pose (relatives.size() + 1).
Trajectory chain(const std::vector<PoseSE3>& relatives, const std::vector<double>& timestamps);

}  // namespace bumpvo
