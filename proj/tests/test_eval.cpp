#include <gtest/gtest.h>

#include "bumpvo/eval.hpp"
#include "oracles.hpp"

using namespace bumpvo;
using Eigen::Quaterniond;
using Eigen::Vector3d;

namespace {

Trajectory random_trajectory(int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0, 3);
    Trajectory t;
    for (int i = 0; i < n; ++i)
        t.push_back(0.1 * i + 1000.0, PoseSE3(Quaterniond(oracle::random_rotation(rng, M_PI)), Vector3d(g(rng), g(rng), g(rng))));
    return t;
}

Trajectory straight(int n, double step) {
    Trajectory t;
    for (int i = 0; i < n; ++i) t.push_back(0.1 * i, PoseSE3(Quaterniond::Identity(), Vector3d(step * i, 0, 0)));
    return t;
}

Trajectory transformed(const Trajectory& in, double s, const Eigen::Matrix3d& R, const Vector3d& t) {
    Trajectory out;
    for (const auto& e : in.entries)
        out.push_back(e.timestamp, PoseSE3(Quaterniond(R) * e.pose.rotation, s * (R * e.pose.translation) + t));
    return out;
}

std::vector<Vector3d> random_points(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0, 2);
    std::vector<Vector3d> v;
    for (int i = 0; i < n; ++i) v.emplace_back(g(rng), g(rng), g(rng));
    return v;
}

}  // namespace

TEST(Tum, ParsesIdentityLine) {
    const Trajectory t = parse_tum("# header\n0.0 0 0 0 0 0 0 1\n");
    ASSERT_EQ(t.size(), 1u);
    EXPECT_EQ(t.entries[0].timestamp, 0.0);
    EXPECT_EQ(t.entries[0].pose.translation, Vector3d::Zero());
    EXPECT_NEAR(t.entries[0].pose.rotation.w(), 1.0, 0.0);
}

TEST(Tum, RoundTripWithinTolerance) {
    const Trajectory a = random_trajectory(100, 1);
    const Trajectory b = parse_tum(format_tum(a));
    ASSERT_EQ(b.size(), a.size());
    double worst = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        worst = std::max(worst, std::abs(a.entries[i].timestamp - b.entries[i].timestamp));
        worst = std::max(worst, (a.entries[i].pose.translation - b.entries[i].pose.translation).cwiseAbs().maxCoeff());
        worst = std::max(worst, (a.entries[i].pose.rotation.coeffs() - b.entries[i].pose.rotation.coeffs()).cwiseAbs().maxCoeff());
    }
    EXPECT_LT(worst, 1e-9);
}

TEST(Tum, NonUnitQuaternionNamesLine) {
    try {
        parse_tum("0 0 0 0 0 0 0 1\n1 0 0 0 0 0 0 0.5\n");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.offset(), 2);
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    }
}

TEST(Tum, RejectsDisorderAndMalformed) {
    EXPECT_THROW(parse_tum("1 0 0 0 0 0 0 1\n0.5 0 0 0 0 0 0 1\n"), ParseError);
    EXPECT_THROW(parse_tum("1 0 0 0 0 0 1\n"), ParseError);
    EXPECT_THROW(parse_tum("1 0 0 x 0 0 0 1\n"), ParseError);
}

TEST(Tum, SmallNormErrorIsRenormalized) {
    const Trajectory t = parse_tum("0 0 0 0 0 0 0 1.0005\n");
    EXPECT_NEAR(t.entries[0].pose.rotation.norm(), 1.0, 1e-12);
}

TEST(Associate, IdenticalOffsetAndDisjoint) {
    const Trajectory a = straight(10, 1.0);
    const auto pairs = associate(a, a, 0.02);
    ASSERT_EQ(pairs.size(), 10u);
    for (size_t i = 0; i < 10; ++i) EXPECT_EQ(pairs[i], (IndexPair{i, i}));

    Trajectory b;
    for (const auto& e : a.entries) b.push_back(e.timestamp + 0.001, e.pose);
    EXPECT_EQ(associate(a, b, 0.01).size(), 10u);

    Trajectory c;
    for (const auto& e : a.entries) c.push_back(e.timestamp + 100.0, e.pose);
    EXPECT_THROW(associate(a, c, 0.02), EmptyAssociation);
}

TEST(Associate, EachEntryUsedOnce) {
    Trajectory a, b;
    a.push_back(0.0, {});
    a.push_back(0.004, {});
    b.push_back(0.002, {});
    const auto pairs = associate(a, b, 0.01);
    ASSERT_EQ(pairs.size(), 1u);
    EXPECT_EQ(pairs[0], (IndexPair{0, 0}));
}

TEST(Umeyama, IdentityOnEqualSets) {
    std::mt19937_64 rng(2);
    const auto p = random_points(10, rng);
    const AlignmentTransform T = umeyama(p, p, true);
    EXPECT_NEAR(T.scale, 1.0, 1e-12);
    EXPECT_LT(rotation_angle(T.rotation), 1e-7);
    EXPECT_LT(T.translation.norm(), 1e-12);
}

TEST(Umeyama, RecoversSimilarity) {
    std::mt19937_64 rng(3);
    const auto src = random_points(20, rng);
    const Eigen::Matrix3d R0 = oracle::random_rotation(rng, M_PI);
    const Vector3d t0(1, -2, 0.5);
    std::vector<Vector3d> dst;
    for (const auto& p : src) dst.push_back(2.5 * R0 * p + t0);
    const AlignmentTransform T = umeyama(src, dst, true);
    EXPECT_NEAR(T.scale, 2.5, 1e-9);
    EXPECT_LT((T.rotation.toRotationMatrix() - R0).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT((T.translation - t0).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Umeyama, RigidFitOnScaledDataLeavesResidual) {
    std::mt19937_64 rng(4);
    const auto src = random_points(15, rng);
    std::vector<Vector3d> dst;
    for (const auto& p : src) dst.push_back(3.0 * p);
    const AlignmentTransform T = umeyama(src, dst, false);
    EXPECT_EQ(T.scale, 1.0);
    double res = 0;
    for (size_t i = 0; i < src.size(); ++i) res += (dst[i] - T.apply(src[i])).squaredNorm();
    EXPECT_GT(res, 1.0);
}

TEST(Umeyama, ReflectionIsNotReturned) {
    std::mt19937_64 rng(5);
    const auto src = random_points(12, rng);
    std::vector<Vector3d> dst;
    for (const auto& p : src) dst.emplace_back(-p.x(), p.y(), p.z());
    const AlignmentTransform T = umeyama(src, dst, true);
    EXPECT_NEAR(T.rotation.toRotationMatrix().determinant(), 1.0, 1e-9);
}

TEST(Umeyama, DegenerateInputs) {
    std::vector<Vector3d> line = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}};
    EXPECT_THROW(umeyama(line, line, true), DegenerateAlignment);
    std::vector<Vector3d> two = {{0, 0, 0}, {1, 1, 0}};
    EXPECT_THROW(umeyama(two, two, true), DegenerateAlignment);
    std::vector<Vector3d> same(5, Vector3d(1, 2, 3));
    EXPECT_THROW(umeyama(same, same, true), DegenerateAlignment);
}

TEST(Umeyama, MatchesNumericalMinimizer) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        std::mt19937_64 rng(seed);
        const auto src = random_points(12, rng);
        std::normal_distribution<double> noise(0, 0.3);
        const Eigen::Matrix3d R0 = oracle::random_rotation(rng, M_PI);
        std::vector<Vector3d> dst;
        for (const auto& p : src) dst.push_back(1.7 * R0 * p + Vector3d(noise(rng), noise(rng), noise(rng)));
        for (bool with_scale : {true, false}) {
            const AlignmentTransform T = umeyama(src, dst, with_scale);
            const oracle::Similarity S = oracle::minimize_similarity(src, dst, with_scale, seed);
            EXPECT_NEAR(T.scale, S.s, 1e-6);
            EXPECT_LT((T.rotation.toRotationMatrix() - S.R).cwiseAbs().maxCoeff(), 1e-6);
            EXPECT_LT((T.translation - S.t).cwiseAbs().maxCoeff(), 1e-6);
        }
    }
}

TEST(Ate, ZeroForEqualAndOffset) {
    const Trajectory gt = random_trajectory(30, 6);
    EXPECT_NEAR(ate(gt, gt, true, 0.02).stats.rmse, 0.0, 1e-9);
    const Trajectory off = transformed(gt, 1.0, Eigen::Matrix3d::Identity(), Vector3d(3, -1, 2));
    EXPECT_NEAR(ate(off, gt, false, 0.02).stats.rmse, 0.0, 1e-9);
}

TEST(Ate, AlternatingOffsetsGiveExactRmse) {
    // every gt position appears twice, so the alternating offsets are
    // uncorrelated with the structure and the best rigid fit is the identity
    const double d = 0.37;
    Trajectory gt, est;
    const int n = 40;
    for (int i = 0; i < n; ++i) {
        const double th = 2 * M_PI * (i / 2) / (n / 2);
        const Vector3d p(0, std::cos(th), std::sin(th));
        gt.push_back(0.1 * i, PoseSE3(Quaterniond::Identity(), p));
        est.push_back(0.1 * i, PoseSE3(Quaterniond::Identity(), p + Vector3d((i % 2 ? -d : d), 0, 0)));
    }
    const AteResult r = ate(est, gt, false, 0.02);
    EXPECT_NEAR(r.stats.rmse, d, 1e-9);

    std::vector<Vector3d> src, dst;
    for (int i = 0; i < n; ++i) {
        src.push_back(est.entries[i].pose.translation);
        dst.push_back(gt.entries[i].pose.translation);
    }
    const oracle::Similarity S = oracle::minimize_similarity(src, dst, false, 1);
    EXPECT_NEAR(std::sqrt(oracle::similarity_cost(S, src, dst) / n), d, 1e-9);
}

TEST(Ate, InvariantUnderSimilarityOfEstimate) {
    const Trajectory gt = random_trajectory(40, 7);
    Trajectory est;
    std::mt19937_64 rng(8);
    std::normal_distribution<double> g(0, 0.1);
    for (const auto& e : gt.entries)
        est.push_back(e.timestamp, PoseSE3(e.pose.rotation, e.pose.translation + Vector3d(g(rng), g(rng), g(rng))));
    const double base = ate(est, gt, true, 0.02).stats.rmse;
    const Trajectory moved = transformed(est, 0.3, oracle::random_rotation(rng, M_PI), Vector3d(10, 5, -3));
    EXPECT_NEAR(ate(moved, gt, true, 0.02).stats.rmse, base, 1e-9);
}

TEST(Rpe, ZeroForEqual) {
    const Trajectory gt = random_trajectory(20, 9);
    const RpeResult r = rpe(gt, gt, 1, 0.02);
    EXPECT_NEAR(r.translational.rmse, 0.0, 1e-9);
    EXPECT_NEAR(r.rotational.rmse, 0.0, 1e-6);
}

TEST(Rpe, DriftPerFrame) {
    const Trajectory gt = straight(50, 0.3);
    Trajectory est;
    for (size_t i = 0; i < gt.size(); ++i) {
        const auto& e = gt.entries[i];
        est.push_back(e.timestamp, PoseSE3(e.pose.rotation, e.pose.translation + Vector3d(0.05 * i, 0, 0)));
    }
    EXPECT_NEAR(rpe(est, gt, 1, 0.02).translational.rmse, 0.05, 1e-9);
}

TEST(Rpe, GlobalRigidMotionInvariant) {
    const Trajectory gt = random_trajectory(30, 10);
    std::mt19937_64 rng(11);
    const Trajectory moved = transformed(gt, 1.0, oracle::random_rotation(rng, M_PI), Vector3d(1, 2, 3));
    const RpeResult r = rpe(moved, gt, 1, 0.02);
    EXPECT_NEAR(r.translational.rmse, 0.0, 1e-9);
    EXPECT_NEAR(r.rotational.rmse, 0.0, 1e-5);
}

TEST(Rpe, InsufficientOverlap) {
    const Trajectory gt = straight(3, 1.0);
    EXPECT_THROW(rpe(gt, gt, 5, 0.02), InsufficientOverlap);
}

TEST(Stats, Ordering) {
    std::mt19937_64 rng(12);
    std::exponential_distribution<double> e(1.0);
    for (int k = 0; k < 50; ++k) {
        std::vector<double> v;
        for (int i = 0; i < 1 + k; ++i) v.push_back(e(rng));
        const ErrorStats s = compute_stats(v);
        EXPECT_LE(s.min, s.median);
        EXPECT_LE(s.median, s.max);
        EXPECT_GE(s.rmse, s.mean - 1e-15);
        EXPECT_EQ(s.n, v.size());
    }
}

TEST(Plot, StructureAndDeterminism) {
    Trajectory sq;
    const double xs[] = {0, 1, 1, 0, 0}, ys[] = {0, 0, 1, 1, 0};
    for (int i = 0; i < 5; ++i) sq.push_back(i, PoseSE3(Quaterniond::Identity(), Vector3d(xs[i], ys[i], 0)));
    const std::string one = plot_svg({{"square", sq}});
    auto count = [](const std::string& s, const std::string& needle) {
        size_t n = 0;
        for (size_t p = s.find(needle); p != std::string::npos; p = s.find(needle, p + 1)) ++n;
        return n;
    };
    EXPECT_EQ(count(one, "<polyline"), 1u);
    const size_t b = one.find("points=\"", one.find("<polyline")) + 8;
    const std::string pts = one.substr(b, one.find('"', b) - b);
    EXPECT_EQ(count(pts, ",") , 5u);

    const std::string two = plot_svg({{"a", sq}, {"b", straight(5, 0.5)}});
    EXPECT_EQ(count(two, "<polyline"), 2u);
    EXPECT_NE(two.find(">a</text>"), std::string::npos);
    EXPECT_NE(two.find(">b</text>"), std::string::npos);
    EXPECT_EQ(two, plot_svg({{"a", sq}, {"b", straight(5, 0.5)}}));
}
