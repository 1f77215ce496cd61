#include <gtest/gtest.h>

#include "bumpvo/geometry.hpp"
#include "oracles.hpp"

using namespace bumpvo;
using Eigen::Matrix3d;
using Eigen::Vector3d;

namespace {

Matrix3d skew(const Vector3d& v) {
    Matrix3d m;
    m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
    return m;
}

double epipolar(const Matrix3d& E, const Correspondence& c) {
    return c.x2.homogeneous().dot(E * c.x1.homogeneous());
}

}  // namespace

TEST(Normalize, PrincipalPointAndUnitOffset) {
    const CameraIntrinsics K;
    EXPECT_EQ(normalize(Point2{320, 240}, K), Eigen::Vector2d(0, 0));
    EXPECT_EQ(normalize(Point2{720, 240}, K), Eigen::Vector2d(1, 0));
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0, 640);
    for (int i = 0; i < 100; ++i) {
        const Point2 p{u(rng), u(rng) * 0.75};
        const Point2 q = denormalize(normalize(p, K), K);
        EXPECT_NEAR(p.x, q.x, 1e-12);
        EXPECT_NEAR(p.y, q.y, 1e-12);
    }
}

TEST(Intrinsics, Validate) {
    CameraIntrinsics K;
    EXPECT_NO_THROW(K.validate(640, 480));
    K.cx = 700;
    EXPECT_THROW(K.validate(640, 480), InvalidArgument);
    K = {};
    K.fx = 0;
    EXPECT_THROW(K.validate(640, 480), InvalidArgument);
}

TEST(EightPoint, NoiseFreeResidualsVanish) {
    const auto p = oracle::two_view(1, 50);
    const Matrix3d E = eight_point(p.corr);
    for (const auto& c : p.corr) EXPECT_LT(std::abs(epipolar(E, c)), 1e-10);
    EXPECT_NEAR(E.norm(), std::sqrt(2.0), 1e-12);
}

TEST(EightPoint, MatchesCrossProductForm) {
    const auto p = oracle::two_view(2, 8);
    Matrix3d E = eight_point(p.corr);
    Matrix3d T = skew(p.t) * p.R;
    T *= std::sqrt(2.0) / T.norm();
    if (E.cwiseProduct(T).sum() < 0) E = -E;
    EXPECT_LT((E - T).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(EightPoint, PureRotationIsRejectedOrFlagged) {
    std::mt19937_64 rng(3);
    const Matrix3d R = oracle::random_rotation(rng, 0.3);
    std::vector<Correspondence> corr;
    std::uniform_real_distribution<double> u(-1, 1);
    for (int i = 0; i < 30; ++i) {
        const Vector3d X(u(rng), u(rng), 5 + u(rng));
        corr.push_back({X.hnormalized(), (R * X).hnormalized()});
    }
    bool flagged = false;
    try {
        const Matrix3d E = eight_point(corr);
        decompose(E, corr);
    } catch (const DegenerateConfiguration&) {
        flagged = true;
    } catch (const AmbiguousPose&) {
        flagged = true;
    }
    EXPECT_TRUE(flagged);
}

TEST(EightPoint, TooFewThrows) {
    auto p = oracle::two_view(4, 7);
    EXPECT_THROW(eight_point(p.corr), DegenerateConfiguration);
}

TEST(Ransac, NoiseFreeAllInliers) {
    const auto p = oracle::two_view(5, 60);
    const RansacResult r = ransac_essential(p.corr, 50, 1.5 / 400, 1);
    EXPECT_EQ(r.n_inliers, 60);
    for (size_t i = 0; i < p.corr.size(); ++i) EXPECT_LT(sampson_distance(r.E, p.corr[i]), 1.5 / 400);
}

TEST(Ransac, ZeroItersFails) {
    const auto p = oracle::two_view(6, 20);
    EXPECT_THROW(ransac_essential(p.corr, 0, 1e-3, 1), PoseEstimationFailed);
}

TEST(Ransac, PureFunctionOfSeed) {
    auto p = oracle::two_view(7, 80);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-0.6, 0.6);
    for (int i = 0; i < 30; ++i) p.corr[i].x2 = {u(rng), u(rng)};
    const auto a = ransac_essential(p.corr, 100, 3e-3, 42);
    const auto b = ransac_essential(p.corr, 100, 3e-3, 42);
    EXPECT_EQ(a.inliers, b.inliers);
    EXPECT_EQ(a.E, b.E);
    for (size_t i = 0; i < p.corr.size(); ++i)
        if (a.inliers[i]) EXPECT_LT(sampson_distance(a.E, p.corr[i]), 3e-3);
}

TEST(RefinePose, ConvergesFromPerturbedStart) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto p = oracle::two_view(300 + seed, 60);
        RelativePose start{Eigen::AngleAxisd(0.02, Vector3d::UnitX()).toRotationMatrix() * p.R,
                           (p.t + Vector3d(0.05, -0.03, 0.02)).normalized()};
        const RelativePose r = refine_pose(start, p.corr);
        EXPECT_LT(oracle::rotation_error_deg(r.R, p.R), 1e-4) << seed;
        EXPECT_LT(oracle::angle_between_deg(r.t, p.t), 1e-4) << seed;
        EXPECT_NEAR(r.t.norm(), 1.0, 1e-12);
    }
}

TEST(RefinePose, NeverRaisesCost) {
    auto p = oracle::two_view(400, 40);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g(0, 1e-3);
    for (auto& c : p.corr) c.x2 += Eigen::Vector2d(g(rng), g(rng));
    auto cost = [&](const RelativePose& q) {
        double s = 0;
        for (const auto& c : p.corr) s += std::pow(sampson_distance(skew(q.t) * q.R, c), 2);
        return s;
    };
    const RelativePose truth{p.R, p.t};
    EXPECT_LE(cost(refine_pose(truth, p.corr)), cost(truth));
}

TEST(Decompose, PlantedYawAndX) {
    std::mt19937_64 rng(8);
    const Matrix3d R = Eigen::AngleAxisd(10.0 * M_PI / 180.0, Vector3d::UnitY()).toRotationMatrix();
    const Vector3d t = Vector3d::UnitX();
    std::vector<Correspondence> corr;
    std::uniform_real_distribution<double> u(-2, 2), uz(4, 10);
    for (int i = 0; i < 40; ++i) {
        const Vector3d X(u(rng), u(rng), uz(rng));
        corr.push_back({X.hnormalized(), (R * X + t).hnormalized()});
    }
    const RelativePose rp = decompose(eight_point(corr), corr);
    EXPECT_LT(oracle::rotation_error_deg(rp.R, R), 0.1);
    EXPECT_LT(oracle::angle_between_deg(rp.t, t), 0.1);
}

TEST(Decompose, ForwardMotion) {
    std::mt19937_64 rng(9);
    std::vector<Correspondence> corr;
    std::uniform_real_distribution<double> u(-2, 2), uz(4, 10);
    for (int i = 0; i < 40; ++i) {
        const Vector3d X(u(rng), u(rng), uz(rng));
        corr.push_back({X.hnormalized(), (X + Vector3d::UnitZ()).hnormalized()});
    }
    const RelativePose rp = decompose(eight_point(corr), corr);
    EXPECT_LT(oracle::rotation_error_deg(rp.R, Matrix3d::Identity()), 1e-6);
    EXPECT_LT(oracle::angle_between_deg(rp.t, Vector3d::UnitZ()), 1e-6);
}

TEST(Decompose, NoDominantCandidateIsAmbiguous) {
    // no correspondences: every candidate scores zero
    const auto p = oracle::two_view(10, 20);
    const Matrix3d E = eight_point(p.corr);
    EXPECT_THROW(decompose(E, {}), AmbiguousPose);
}

TEST(Triangulate, KnownPoint) {
    const PoseSE3 a = PoseSE3::identity();
    const PoseSE3 b(Eigen::Quaterniond::Identity(), Vector3d(1, 0, 0));
    const Vector3d X(0, 0, 5);
    const Correspondence c{X.hnormalized(), (X - Vector3d(1, 0, 0)).hnormalized()};
    const auto pts = triangulate(a, b, {c});
    EXPECT_LT((pts[0].X - X).norm(), 1e-9);
    EXPECT_NEAR(pts[0].depth_a, 5.0, 1e-9);
    EXPECT_NEAR(pts[0].depth_b, 5.0, 1e-9);
    EXPECT_FALSE(pts[0].far);
}

TEST(Triangulate, ParallelRaysAreFar) {
    const PoseSE3 b(Eigen::Quaterniond::Identity(), Vector3d(1, 0, 0));
    const Correspondence c{{0.1, 0.2}, {0.1, 0.2}};
    EXPECT_TRUE(triangulate(PoseSE3::identity(), b, {c})[0].far);
}

TEST(Triangulate, RandomPosesNoiseFree) {
    std::mt19937_64 rng(11);
    const PoseSE3 a(Eigen::Quaterniond(oracle::random_rotation(rng, 0.3)), Vector3d(0.2, -0.1, 0.3));
    const PoseSE3 b(Eigen::Quaterniond(oracle::random_rotation(rng, 0.3)), Vector3d(1.1, 0.4, -0.2));
    std::uniform_real_distribution<double> u(-2, 2), uz(5, 12);
    std::vector<Correspondence> corr;
    std::vector<Vector3d> Xs;
    while (Xs.size() < 100) {
        const Vector3d X(u(rng), u(rng), uz(rng));
        const Vector3d Xa = a.inverse() * X, Xb = b.inverse() * X;
        if (Xa.z() < 1 || Xb.z() < 1) continue;
        Xs.push_back(X);
        corr.push_back({Xa.hnormalized(), Xb.hnormalized()});
    }
    const auto pts = triangulate(a, b, corr);
    double worst = 0;
    for (size_t i = 0; i < Xs.size(); ++i) worst = std::max(worst, (pts[i].X - Xs[i]).norm());
    EXPECT_LT(worst, 1e-8);
}

TEST(Triangulate, ZeroBaselineThrows) {
    EXPECT_THROW(triangulate(PoseSE3::identity(), PoseSE3::identity(), {{{0, 0}, {0, 0}}}), DegenerateConfiguration);
}

TEST(Scale, HalfTranslationGivesTwo) {
    // same structure; the current pair's translation estimated at half size
    // shrinks its depths by the same factor
    std::vector<double> prev, cur;
    for (int i = 0; i < 20; ++i) {
        prev.push_back(3.0 + 0.2 * i);
        cur.push_back(prev.back() / 2.0);
    }
    EXPECT_NEAR(propagate_scale(prev, cur), 2.0, 1e-6);
    EXPECT_DOUBLE_EQ(propagate_scale(prev, prev), 1.0);
}

TEST(Scale, TooFewTracksIsLost) {
    EXPECT_THROW(propagate_scale({1, 2, 3, 4}, {1, 2, 3, 4}), ScaleLost);
}

TEST(Chain, IdentityAndUnitSteps) {
    const auto flat = chain({PoseSE3::identity(), PoseSE3::identity()}, {0, 1, 2});
    for (const auto& e : flat.entries) EXPECT_EQ(e.pose.translation, Vector3d::Zero());
    const PoseSE3 step(Eigen::Quaterniond::Identity(), Vector3d(1, 0, 0));
    const auto two = chain({step, step}, {0, 1, 2});
    EXPECT_EQ(two.entries.back().pose.translation, Vector3d(2, 0, 0));
}

TEST(Chain, MatchesHomogeneousProduct) {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> g(0, 1);
    std::vector<PoseSE3> rel;
    std::vector<double> ts = {0};
    Eigen::Matrix4d M = Eigen::Matrix4d::Identity();
    std::vector<Eigen::Matrix4d> expect = {M};
    for (int i = 0; i < 10; ++i) {
        rel.emplace_back(Eigen::Quaterniond(oracle::random_rotation(rng, 1.0)), Vector3d(g(rng), g(rng), g(rng)));
        Eigen::Matrix4d T = Eigen::Matrix4d::Identity();
        T.topLeftCorner<3, 3>() = rel.back().R();
        T.topRightCorner<3, 1>() = rel.back().translation;
        M = M * T;
        expect.push_back(M);
        ts.push_back(i + 1.0);
    }
    const Trajectory tr = chain(rel, ts);
    ASSERT_EQ(tr.size(), 11u);
    for (size_t i = 0; i < tr.size(); ++i) {
        EXPECT_LT((tr.entries[i].pose.matrix() - expect[i]).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_NEAR(tr.entries[i].pose.rotation.norm(), 1.0, 1e-9);
    }
}

TEST(Pose, CompositionKeepsUnitQuaternion) {
    std::mt19937_64 rng(13);
    PoseSE3 p;
    for (int i = 0; i < 10000; ++i) {
        p = p * PoseSE3(Eigen::Quaterniond(oracle::random_rotation(rng, 0.2)), Vector3d(0.01, 0, 0));
        ASSERT_NEAR(p.rotation.norm(), 1.0, 1e-9);
    }
    const PoseSE3 q = p * p.inverse();
    EXPECT_LT(q.translation.norm(), 1e-9);
    EXPECT_LT(rotation_angle(q.rotation), 1e-7);
}

TEST(TwoView, SeededProblemsRecoverPose) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto p = oracle::two_view(100 + seed, 60);
        const RansacResult r = ransac_essential(p.corr, 200, 1.5 / 400, seed);
        std::vector<Correspondence> inl;
        for (size_t i = 0; i < p.corr.size(); ++i)
            if (r.inliers[i]) inl.push_back(p.corr[i]);
        const RelativePose rp = decompose(r.E, inl);
        ASSERT_LT(oracle::rotation_error_deg(rp.R, p.R), 0.1) << "seed " << seed;
        ASSERT_LT(oracle::angle_between_deg(rp.t, p.t), 0.1) << "seed " << seed;
    }
}
