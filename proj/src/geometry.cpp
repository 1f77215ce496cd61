#include "bumpvo/geometry.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>

namespace bumpvo {

void CameraIntrinsics::validate(int width, int height) const {
    if (!(fx > 0.0) || !(fy > 0.0)) throw InvalidArgument("intrinsics: focal lengths must be positive");
    if (!(cx >= 0.0 && cy >= 0.0 && cx <= width - 1 && cy <= height - 1))
        throw InvalidArgument("intrinsics: principal point outside the image");
}

Eigen::Matrix3d CameraIntrinsics::matrix() const {
    Eigen::Matrix3d K;
    K << fx, 0, cx, 0, fy, cy, 0, 0, 1;
    return K;
}

Eigen::Vector2d normalize(const Point2& p, const CameraIntrinsics& K) {
    return {(p.x - K.cx) / K.fx, (p.y - K.cy) / K.fy};
}

std::vector<Eigen::Vector2d> normalize(const std::vector<Point2>& pixels, const CameraIntrinsics& K) {
    std::vector<Eigen::Vector2d> out;
    out.reserve(pixels.size());
    for (const auto& p : pixels) out.push_back(normalize(p, K));
    return out;
}

Point2 denormalize(const Eigen::Vector2d& u, const CameraIntrinsics& K) {
    return {u.x() * K.fx + K.cx, u.y() * K.fy + K.cy};
}

// --- essential matrix -----------------------------------------------------

namespace {

// Isotropic conditioning: centroid to origin, mean distance sqrt(2).
Eigen::Matrix3d conditioning(const std::vector<Eigen::Vector2d>& pts) {
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    for (const auto& p : pts) mean += p;
    mean /= static_cast<double>(pts.size());
    double d = 0.0;
    for (const auto& p : pts) d += (p - mean).norm();
    d /= static_cast<double>(pts.size());
    const double s = d > 0.0 ? std::sqrt(2.0) / d : 1.0;
    Eigen::Matrix3d T;
    T << s, 0, -s * mean.x(), 0, s, -s * mean.y(), 0, 0, 1;
    return T;
}

Eigen::Matrix3d project_to_essential(const Eigen::Matrix3d& F) {
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(F, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::Vector3d sv = svd.singularValues();
    const double sigma = 0.5 * (sv(0) + sv(1));
    if (!(sigma > 0.0)) throw DegenerateConfiguration("eight_point: zero essential matrix");
    // (sigma, sigma, 0) rescaled so that ||E||_F = sqrt(2)
    return svd.matrixU() * Eigen::Vector3d(1.0, 1.0, 0.0).asDiagonal() * svd.matrixV().transpose();
}

}  // namespace

Eigen::Matrix3d eight_point(const std::vector<Correspondence>& corr) {
    const size_t n = corr.size();
    if (n < 8) throw DegenerateConfiguration("eight_point: need at least 8 correspondences");

    std::vector<Eigen::Vector2d> p1(n), p2(n);
    for (size_t i = 0; i < n; ++i) {
        p1[i] = corr[i].x1;
        p2[i] = corr[i].x2;
    }
    const Eigen::Matrix3d T1 = conditioning(p1), T2 = conditioning(p2);

    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(std::max<size_t>(n, 9)), 9);
    for (size_t i = 0; i < n; ++i) {
        const Eigen::Vector3d a = T1 * p1[i].homogeneous();
        const Eigen::Vector3d b = T2 * p2[i].homogeneous();
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) A(static_cast<Eigen::Index>(i), 3 * r + c) = b(r) * a(c);
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
    const Eigen::VectorXd sv = svd.singularValues();
    if (!(sv(0) > 0.0) || sv(7) <= 1e-9 * sv(0))
        throw DegenerateConfiguration("eight_point: epipolar system is rank deficient");

    const Eigen::VectorXd e = svd.matrixV().col(8);
    Eigen::Matrix3d Fn;
    Fn << e(0), e(1), e(2), e(3), e(4), e(5), e(6), e(7), e(8);
    return project_to_essential(T2.transpose() * Fn * T1);
}

double sampson_distance(const Eigen::Matrix3d& E, const Correspondence& c) {
    const Eigen::Vector3d x1 = c.x1.homogeneous(), x2 = c.x2.homogeneous();
    const Eigen::Vector3d Ex1 = E * x1;
    const Eigen::Vector3d Etx2 = E.transpose() * x2;
    const double num = x2.dot(Ex1);
    const double den = Ex1.x() * Ex1.x() + Ex1.y() * Ex1.y() + Etx2.x() * Etx2.x() + Etx2.y() * Etx2.y();
    if (den <= 0.0) return std::abs(num) > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    return std::abs(num) / std::sqrt(den);
}

namespace {

int score(const Eigen::Matrix3d& E, const std::vector<Correspondence>& corr, double thresh, std::vector<bool>* mask) {
    int n = 0;
    if (mask) mask->assign(corr.size(), false);
    for (size_t i = 0; i < corr.size(); ++i)
        if (sampson_distance(E, corr[i]) < thresh) {
            ++n;
            if (mask) (*mask)[i] = true;
        }
    return n;
}

}  // namespace

RansacResult ransac_essential(const std::vector<Correspondence>& corr, int iters, double thresh, std::uint64_t seed) {
    const size_t n = corr.size();
    if (n < 8) throw PoseEstimationFailed("ransac_essential: fewer than 8 correspondences");

    std::mt19937_64 rng(seed);
    int best_count = -1;
    Eigen::Matrix3d best_E = Eigen::Matrix3d::Zero();
    std::vector<Correspondence> sample(8);
    std::array<size_t, 8> idx{};

    for (int it = 0; it < iters; ++it) {
        for (int k = 0; k < 8; ++k) {
            size_t pick = 0;
            do {
                pick = static_cast<size_t>(rng() % n);
            } while (std::find(idx.begin(), idx.begin() + k, pick) != idx.begin() + k);
            idx[k] = pick;
            sample[k] = corr[pick];
        }
        Eigen::Matrix3d E;
        try {
            E = eight_point(sample);
        } catch (const DegenerateConfiguration&) {
            continue;
        }
        const int c = score(E, corr, thresh, nullptr);
        if (c > best_count) {  // strict: earliest iteration wins ties
            best_count = c;
            best_E = E;
        }
    }
    if (best_count < 8) throw PoseEstimationFailed("ransac_essential: fewer than 8 inliers");

    RansacResult res;
    res.E = best_E;
    res.n_inliers = score(best_E, corr, thresh, &res.inliers);

    std::vector<Correspondence> consensus;
    for (size_t i = 0; i < n; ++i)
        if (res.inliers[i]) consensus.push_back(corr[i]);
    try {
        const Eigen::Matrix3d refit = eight_point(consensus);
        std::vector<bool> mask;
        const int c = score(refit, corr, thresh, &mask);
        if (c >= res.n_inliers) {
            res.E = refit;
            res.inliers = std::move(mask);
            res.n_inliers = c;
        }
    } catch (const DegenerateConfiguration&) {
    }
    return res;
}

// --- decomposition & triangulation ---------------------------------------

namespace {

using Proj = Eigen::Matrix<double, 3, 4>;

Eigen::Vector4d dlt(const Proj& Pa, const Proj& Pb, const Eigen::Vector2d& xa, const Eigen::Vector2d& xb) {
    Eigen::Matrix4d A;
    A.row(0) = xa.x() * Pa.row(2) - Pa.row(0);
    A.row(1) = xa.y() * Pa.row(2) - Pa.row(1);
    A.row(2) = xb.x() * Pb.row(2) - Pb.row(0);
    A.row(3) = xb.y() * Pb.row(2) - Pb.row(1);
    Eigen::JacobiSVD<Eigen::Matrix4d> svd(A, Eigen::ComputeFullV);
    return svd.matrixV().col(3);
}

Proj projection(const Eigen::Matrix3d& R, const Eigen::Vector3d& t) {
    Proj P;
    P.leftCols<3>() = R;
    P.col(3) = t;
    return P;
}

}  // namespace

RelativePose decompose(const Eigen::Matrix3d& E, const std::vector<Correspondence>& corr) {
    if (corr.empty()) throw AmbiguousPose("decompose: no correspondences");
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(E, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d U = svd.matrixU(), V = svd.matrixV();
    if (U.determinant() < 0) U = -U;
    if (V.determinant() < 0) V = -V;
    Eigen::Matrix3d W;
    W << 0, -1, 0, 1, 0, 0, 0, 0, 1;
    const Eigen::Matrix3d R1 = U * W * V.transpose();
    const Eigen::Matrix3d R2 = U * W.transpose() * V.transpose();
    const Eigen::Vector3d t = U.col(2).normalized();

    const std::array<RelativePose, 4> cand = {RelativePose{R1, t}, RelativePose{R1, -t}, RelativePose{R2, t},
                                              RelativePose{R2, -t}};
    const Proj P1 = projection(Eigen::Matrix3d::Identity(), Eigen::Vector3d::Zero());
    std::array<int, 4> good{};
    for (int k = 0; k < 4; ++k) {
        const Proj P2 = projection(cand[k].R, cand[k].t);
        for (const auto& c : corr) {
            const Eigen::Vector4d Xh = dlt(P1, P2, c.x1, c.x2);
            if (Xh(3) == 0.0) continue;
            const Eigen::Vector3d X = Xh.head<3>() / Xh(3);
            const double z1 = X.z();
            const double z2 = (cand[k].R * X + cand[k].t).z();
            if (std::isfinite(z1) && std::isfinite(z2) && z1 > 0.0 && z2 > 0.0) ++good[k];
        }
    }

    int best = 0;
    for (int k = 1; k < 4; ++k)
        if (good[k] > good[best]) best = k;
    int runner_up = 0;
    for (int k = 0; k < 4; ++k)
        if (k != best) runner_up = std::max(runner_up, good[k]);
    if (good[best] == 0 || good[best] < 2 * runner_up)
        throw AmbiguousPose("decompose: no cheirality candidate dominates (" + std::to_string(good[best]) + " vs " +
                            std::to_string(runner_up) + ")");
    return cand[best];
}

namespace {

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
    Eigen::Matrix3d S;
    S << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
    return S;
}

// Signed Sampson residuals of E = [t]x R.
Eigen::VectorXd sampson_residuals(const RelativePose& p, const std::vector<Correspondence>& corr) {
    const Eigen::Matrix3d E = skew(p.t) * p.R;
    Eigen::VectorXd r(static_cast<Eigen::Index>(corr.size()));
    for (size_t i = 0; i < corr.size(); ++i) {
        const Eigen::Vector3d x1 = corr[i].x1.homogeneous(), x2 = corr[i].x2.homogeneous();
        const Eigen::Vector3d Ex1 = E * x1, Etx2 = E.transpose() * x2;
        const double den = Ex1.head<2>().squaredNorm() + Etx2.head<2>().squaredNorm();
        r(static_cast<Eigen::Index>(i)) = den > 0.0 ? x2.dot(Ex1) / std::sqrt(den) : 0.0;
    }
    return r;
}

// Rotation increment on the left, translation moved in the tangent plane of
// the unit sphere.
RelativePose perturb(const RelativePose& p, const Eigen::Matrix<double, 5, 1>& d) {
    Eigen::Vector3d a = p.t.unitOrthogonal();
    const Eigen::Vector3d b = p.t.cross(a);
    const Eigen::Vector3d w = d.head<3>();
    RelativePose out;
    out.R = (w.norm() > 0.0 ? Eigen::AngleAxisd(w.norm(), w.normalized()).toRotationMatrix()
                            : Eigen::Matrix3d::Identity()) *
            p.R;
    out.t = (p.t + d(3) * a + d(4) * b).normalized();
    return out;
}

}  // namespace

RelativePose refine_pose(const RelativePose& init, const std::vector<Correspondence>& corr, int max_iters) {
    if (corr.size() < 5) return init;
    RelativePose cur = init;
    Eigen::VectorXd r = sampson_residuals(cur, corr);
    double cost = r.squaredNorm();
    double lambda = 1e-3;
    const double h = 1e-7;
    for (int it = 0; it < max_iters; ++it) {
        Eigen::MatrixXd J(r.size(), 5);
        for (int k = 0; k < 5; ++k) {
            Eigen::Matrix<double, 5, 1> d = Eigen::Matrix<double, 5, 1>::Zero();
            d(k) = h;
            const Eigen::VectorXd rp = sampson_residuals(perturb(cur, d), corr);
            d(k) = -h;
            const Eigen::VectorXd rm = sampson_residuals(perturb(cur, d), corr);
            J.col(k) = (rp - rm) / (2.0 * h);
        }
        const Eigen::Matrix<double, 5, 5> A = J.transpose() * J;
        const Eigen::Matrix<double, 5, 1> g = J.transpose() * r;
        bool improved = false;
        while (lambda < 1e8) {
            Eigen::Matrix<double, 5, 5> Ad = A;
            Ad.diagonal() *= 1.0 + lambda;
            const Eigen::Matrix<double, 5, 1> step = Ad.ldlt().solve(-g);
            const RelativePose cand = perturb(cur, step);
            const Eigen::VectorXd rc = sampson_residuals(cand, corr);
            const double c = rc.squaredNorm();
            if (c < cost) {
                improved = cost - c > 1e-12 * cost;
                cur = cand;
                r = rc;
                cost = c;
                lambda = std::max(lambda * 0.1, 1e-9);
                break;
            }
            lambda *= 10.0;
        }
        if (!improved) break;
    }
    return cur;
}

std::vector<TriangulatedPoint> triangulate(const PoseSE3& pose_a, const PoseSE3& pose_b,
                                           const std::vector<Correspondence>& corr) {
    if ((pose_a.translation - pose_b.translation).norm() < 1e-9)
        throw DegenerateConfiguration("triangulate: baseline below 1e-9");
    const PoseSE3 a_cw = pose_a.inverse(), b_cw = pose_b.inverse();
    const Proj Pa = projection(a_cw.R(), a_cw.translation);
    const Proj Pb = projection(b_cw.R(), b_cw.translation);

    std::vector<TriangulatedPoint> out;
    out.reserve(corr.size());
    for (const auto& c : corr) {
        const Eigen::Vector4d Xh = dlt(Pa, Pb, c.x1, c.x2);
        TriangulatedPoint tp;
        if (std::abs(Xh(3)) <= 1e-15 * Xh.head<3>().norm()) {
            tp.X = Xh.head<3>() * 1e15;
            tp.far = true;
        } else {
            tp.X = Xh.head<3>() / Xh(3);
        }
        tp.depth_a = (a_cw * tp.X).z();
        tp.depth_b = (b_cw * tp.X).z();
        if (!std::isfinite(tp.depth_a) || !std::isfinite(tp.depth_b) || std::abs(tp.depth_a) > kFarDepth ||
            std::abs(tp.depth_b) > kFarDepth)
            tp.far = true;
        out.push_back(tp);
    }
    return out;
}

double propagate_scale(const std::vector<double>& prev_depths, const std::vector<double>& cur_depths) {
    if (prev_depths.size() != cur_depths.size()) throw InvalidArgument("propagate_scale: length mismatch");
    std::vector<double> ratios;
    for (size_t i = 0; i < prev_depths.size(); ++i)
        if (prev_depths[i] > 0.0 && cur_depths[i] > 0.0 && std::isfinite(prev_depths[i]) && std::isfinite(cur_depths[i]))
            ratios.push_back(prev_depths[i] / cur_depths[i]);
    if (static_cast<int>(ratios.size()) < kMinScaleTracks)
        throw ScaleLost("propagate_scale: only " + std::to_string(ratios.size()) + " shared tracks");
    const size_t mid = ratios.size() / 2;
    std::nth_element(ratios.begin(), ratios.begin() + static_cast<long>(mid), ratios.end());
    if (ratios.size() % 2 == 1) return ratios[mid];
    const double hi = ratios[mid];
    const double lo = *std::max_element(ratios.begin(), ratios.begin() + static_cast<long>(mid));
    return 0.5 * (lo + hi);
}

Trajectory chain(const std::vector<PoseSE3>& relatives, const std::vector<double>& timestamps) {
    if (timestamps.size() != relatives.size() + 1)
        throw InvalidArgument("chain: need one timestamp per output pose");
    Trajectory traj;
    PoseSE3 pose = PoseSE3::identity();
    traj.push_back(timestamps[0], pose);
    for (size_t i = 0; i < relatives.size(); ++i) {
        pose = pose * relatives[i];
        traj.push_back(timestamps[i + 1], pose);
    }
    return traj;
}

}  // namespace bumpvo
