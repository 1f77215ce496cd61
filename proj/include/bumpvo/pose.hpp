#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <vector>

#include "bumpvo/errors.hpp"

namespace bumpvo {

/// Rigid transform, world-from-camera when used as a camera pose.
struct PoseSE3 {
    Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();

    PoseSE3() = default;
    PoseSE3(const Eigen::Quaterniond& q, const Eigen::Vector3d& t) : rotation(q.normalized()), translation(t) {}
    PoseSE3(const Eigen::Matrix3d& R, const Eigen::Vector3d& t) : rotation(Eigen::Quaterniond(R).normalized()), translation(t) {}

    static PoseSE3 identity() { return {}; }

    Eigen::Matrix3d R() const { return rotation.toRotationMatrix(); }
    Eigen::Matrix4d matrix() const {
        Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
        m.topLeftCorner<3, 3>() = R();
        m.topRightCorner<3, 1>() = translation;
        return m;
    }

    PoseSE3 inverse() const {
        const Eigen::Quaterniond qi = rotation.conjugate();
        return PoseSE3(qi, -(qi * translation));
    }

    /// Composition renormalizes the quaternion so drift never accumulates.
    PoseSE3 operator*(const PoseSE3& o) const {
        return PoseSE3((rotation * o.rotation).normalized(), translation + rotation * o.translation);
    }

    Eigen::Vector3d operator*(const Eigen::Vector3d& p) const { return rotation * p + translation; }
};

/// Rotation angle of `q` in radians, in [0, pi].
double rotation_angle(const Eigen::Quaterniond& q);

struct TimedPose {
    double timestamp = 0.0;
    PoseSE3 pose;
};

/// Timestamped poses with strictly increasing timestamps.
struct Trajectory {
    std::vector<TimedPose> entries;

    size_t size() const { return entries.size(); }
    bool empty() const { return entries.empty(); }
    void push_back(double t, const PoseSE3& p);
};

}  // namespace bumpvo
