#include "bumpvo/pose.hpp"

#include <cmath>

namespace bumpvo {

double rotation_angle(const Eigen::Quaterniond& q) {
    const Eigen::Quaterniond n = q.normalized();
    return 2.0 * std::atan2(n.vec().norm(), std::abs(n.w()));
}

void Trajectory::push_back(double t, const PoseSE3& p) {
    if (!entries.empty() && !(t > entries.back().timestamp))
        throw InvalidArgument("trajectory timestamps must be strictly increasing");
    entries.push_back(TimedPose{t, p});
}

}  // namespace bumpvo
