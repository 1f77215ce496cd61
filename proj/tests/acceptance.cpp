// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "bumpvo/cli.hpp"
#include "bumpvo/eval.hpp"
#include "bumpvo/features.hpp"
#include "bumpvo/flow.hpp"
#include "bumpvo/geometry.hpp"
#include "bumpvo/hybrid.hpp"
#include "bumpvo/io_util.hpp"
#include "bumpvo/synth.hpp"
#include "oracles.hpp"

using namespace bumpvo;
namespace fs = std::filesystem;
using Eigen::Vector3d;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

const std::vector<int> kGrid = {0, 1, 2, 3, 5};
const std::vector<std::string> kModes = {"hybrid", "descriptor-only"};

fs::path work_dir() {
    static const fs::path d = [] {
        const fs::path p = fs::temp_directory_path() / "bumpvo_acceptance";
        fs::remove_all(p);
        fs::create_directories(p);
        return p;
    }();
    return d;
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

fs::path sequence_dir(int amp) { return work_dir() / ("seq_" + std::to_string(amp)); }
fs::path traj_path(const std::string& mode, int amp) {
    return work_dir() / (mode + "_" + std::to_string(amp) + ".txt");
}

// Benchmark sequences: 6 s left arc at 1.5 m/s, 10 fps, pitch and roll
// jitter of the grid amplitude at 8 Hz over the whole run.
void render_grid() {
    for (int amp : kGrid) {
        std::ostringstream cfg;
        cfg << "duration = 6\nfps = 10\nspeed = 1.5\npath = arc\nfrequency_hz = 8\nvibration_seed = 7\n"
            << "pitch_amplitude_deg = " << amp << "\nroll_amplitude_deg = " << amp << "\n";
        const synth::SequenceConfig sc = synth::SequenceConfig::from_config(KeyValueConfig::parse(cfg.str()));
        synth::generate_sequence(sc, sequence_dir(amp));
    }
}

void run_grid() {
    for (int amp : kGrid)
        for (const auto& mode : kModes) {
            std::ostringstream out, err;
            const int rc = cli::cmd_vo(sequence_dir(amp), {}, traj_path(mode, amp), mode, 0, out, err);
            if (rc != cli::kOk) throw std::runtime_error("vo " + mode + " failed: " + err.str());
        }
}

int lost_frames(const std::string& mode, int amp) {
    int n = 0;
    for (const auto& r : parse_stats_csv(read_file(cli::vo_outputs(traj_path(mode, amp)).stats))) n += r.lost;
    return n;
}

Outcome ac1() {
    Outcome o{true, ""};
    for (int amp : kGrid) {
        const int h = lost_frames("hybrid", amp), d = lost_frames("descriptor-only", amp);
        o.detail += std::to_string(amp) + "deg lost hybrid/desc " + std::to_string(h) + "/" + std::to_string(d) + "; ";
        if (h > d) o.pass = false;
        if (amp == kGrid.back() && !(d >= 1 && h == 0)) o.pass = false;
    }
    return o;
}

Outcome ac2() {
    const Trajectory gt = read_tum(sequence_dir(0) / "groundtruth.txt");
    double length = 0.0;
    for (size_t i = 1; i < gt.size(); ++i)
        length += (gt.entries[i].pose.translation - gt.entries[i - 1].pose.translation).norm();
    const double h = ate(read_tum(traj_path("hybrid", 0)), gt, true, 0.02).stats.rmse;
    const double d = ate(read_tum(traj_path("descriptor-only", 0)), gt, true, 0.02).stats.rmse;
    const bool pass = h <= 1.5 * d && h < 0.02 * length && d < 0.02 * length;
    return {pass, "ate hybrid " + fmt("%.4f", h) + " desc " + fmt("%.4f", d) + " path " + fmt("%.2f", length) + " m"};
}

Outcome ac3() {
    int logs = 0, rows = 0;
    for (int amp : kGrid)
        for (const auto& mode : kModes) {
            TrackerConfig tc;
            tc.mode = parse_mode(mode);
            const auto log = parse_stats_csv(read_file(cli::vo_outputs(traj_path(mode, amp)).stats));
            const auto expect = replay_budget(tc.initial_controller(), log);
            for (size_t i = 0; i < log.size(); ++i)
                if (expect[i] != log[i].flow_budget)
                    return {false, mode + " " + std::to_string(amp) + "deg row " + std::to_string(i)};
            ++logs;
            rows += static_cast<int>(log.size());
        }
    return {true, std::to_string(logs) + " logs, " + std::to_string(rows) + " rows replayed"};
}

Outcome ac4() {
    std::vector<double> err;
    bool zero_ok = true;
    std::mt19937_64 rng(4);
    for (int pair = 0; pair < 50; ++pair) {
        const FloatImage img = oracle::blob_texture(160, 120, 500 + pair);
        int sx = 0, sy = 0;
        while (sx == 0 && sy == 0) {
            sx = static_cast<int>(rng() % 11) - 5;
            sy = static_cast<int>(rng() % 11) - 5;
        }
        const FlowPyramid p0 = make_flow_pyramid(build_pyramid(img, 4, 2.0));
        const FlowPyramid p1 = make_flow_pyramid(build_pyramid(oracle::roll(img, sx, sy), 4, 2.0));
        std::vector<Point2> pts;
        std::uniform_real_distribution<double> ux(30, 130), uy(30, 90);
        for (int i = 0; i < 20; ++i) pts.push_back({ux(rng), uy(rng)});
        const FlowResult r = track(p0, p1, pts);
        for (size_t i = 0; i < pts.size(); ++i)
            err.push_back(r.status[i] == FlowStatus::Ok ? distance(r.tracked[i], {pts[i].x + sx, pts[i].y + sy})
                                                        : std::numeric_limits<double>::infinity());
        const FlowResult z = track(p0, p0, pts);
        for (size_t i = 0; i < pts.size(); ++i)
            zero_ok = zero_ok && z.status[i] == FlowStatus::Ok && distance(z.tracked[i], pts[i]) < 1e-6;
    }
    std::sort(err.begin(), err.end());
    const double p95 = err[static_cast<size_t>(std::ceil(0.95 * err.size())) - 1];
    return {p95 < 0.1 && zero_ok, "p95 " + fmt("%.4f", p95) + " px, zero shift " + (zero_ok ? "ok" : "bad")};
}

Outcome ac5() {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const FloatImage img = oracle::random_gray_image(64, 64, 7000 + seed);
        std::set<std::pair<int, int>> got;
        for (const auto& k : detect_fast(img, 20)) got.insert({static_cast<int>(k.x), static_cast<int>(k.y)});
        if (got != oracle::fast_corners(img, 20)) return {false, "seed " + std::to_string(seed)};
    }
    return {true, "100 images"};
}

Outcome ac6() {
    double worst_r = 0, worst_t = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto p = oracle::two_view(9000 + seed, 50);
        const RelativePose rp = decompose(eight_point(p.corr), p.corr);
        worst_r = std::max(worst_r, oracle::rotation_error_deg(rp.R, p.R));
        worst_t = std::max(worst_t, oracle::angle_between_deg(rp.t, p.t));
    }
    int tp = 0, fp = 0, fn = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto p = oracle::two_view(9500 + seed, 100);
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> u(-0.6, 0.6);
        std::vector<bool> planted(p.corr.size(), true);
        for (size_t i = 0; i < 30; ++i) {
            p.corr[i].x2 = {u(rng), u(rng)};
            planted[i] = false;
        }
        const RansacResult r = ransac_essential(p.corr, 200, 1.5 / 400, seed);
        for (size_t i = 0; i < planted.size(); ++i) {
            tp += r.inliers[i] && planted[i];
            fp += r.inliers[i] && !planted[i];
            fn += !r.inliers[i] && planted[i];
        }
    }
    const double precision = static_cast<double>(tp) / (tp + fp), recall = static_cast<double>(tp) / (tp + fn);
    const bool pass = worst_r < 0.1 && worst_t < 0.1 && precision >= 0.95 && recall >= 0.95;
    return {pass, "rot " + fmt("%.2e", worst_r) + " deg, dir " + fmt("%.2e", worst_t) + " deg, ransac P " +
                      fmt("%.3f", precision) + " R " + fmt("%.3f", recall)};
}

Outcome ac7() {
    double worst = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> g(0, 2), noise(0, 0.3);
        std::vector<Vector3d> src, dst;
        const Eigen::Matrix3d R0 = oracle::random_rotation(rng, std::numbers::pi);
        for (int i = 0; i < 12; ++i) {
            src.emplace_back(g(rng), g(rng), g(rng));
            dst.push_back(1.7 * R0 * src.back() + Vector3d(noise(rng), noise(rng), noise(rng)));
        }
        const AlignmentTransform T = umeyama(src, dst, true);
        const oracle::Similarity S = oracle::minimize_similarity(src, dst, true, seed);
        worst = std::max({worst, std::abs(T.scale - S.s), (T.rotation.toRotationMatrix() - S.R).cwiseAbs().maxCoeff(),
                          (T.translation - S.t).cwiseAbs().maxCoeff()});
    }
    Trajectory gt, off, drift;
    for (int i = 0; i < 50; ++i) {
        const Vector3d p(0.3 * i, std::sin(0.2 * i), 0.1 * std::cos(0.3 * i));
        gt.push_back(0.1 * i, PoseSE3(Eigen::Quaterniond::Identity(), p));
        off.push_back(0.1 * i, PoseSE3(Eigen::Quaterniond::Identity(), p + Vector3d(3, -1, 2)));
        drift.push_back(0.1 * i, PoseSE3(Eigen::Quaterniond::Identity(), p + Vector3d(0.05 * i, 0, 0)));
    }
    const double a = ate(off, gt, false, 0.02).stats.rmse;
    const double r = rpe(drift, gt, 1, 0.02).translational.rmse;
    const bool pass = worst < 1e-6 && std::abs(a) < 1e-9 && std::abs(r - 0.05) < 1e-9;
    return {pass, "umeyama gap " + fmt("%.1e", worst) + ", offset ate " + fmt("%.1e", a) + ", drift rpe " +
                      fmt("%.12f", r)};
}

Outcome ac8() {
    const fs::path a = work_dir() / "det_a", b = work_dir() / "det_b";
    fs::create_directories(a);
    fs::create_directories(b);
    for (const auto& d : {a, b}) {
        std::ostringstream out, err;
        if (cli::cmd_vo(sequence_dir(5), {}, d / "t.txt", std::string("hybrid"), 42, out, err) != cli::kOk)
            return {false, err.str()};
    }
    for (const char* f : {"t.txt", "t.stats.csv", "t.manifest.txt"})
        if (read_file(a / f) != read_file(b / f)) return {false, std::string(f) + " differs"};
    return {true, "trajectory, stats and manifest identical"};
}

Outcome ac9() {
    const double w = 2 * std::numbers::pi / 30;
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 200; ++trial) {
        std::normal_distribution<double> g(0.0, 0.3);
        std::uniform_real_distribution<double> u(0.0, 2 * std::numbers::pi);
        std::vector<double> d;
        for (int i = 0; i < 100; ++i) d.push_back(g(rng));
        for (int i = 0; i < 15; ++i) d.push_back(u(rng));
        for (auto& v : d) v = (std::floor(v / w) + 0.5) * w;
        const auto base = rotation_vote(d, {});
        for (int k = -31; k <= 31; k += 3) {
            std::vector<double> s = d;
            for (auto& v : s) v += k * w;
            if (rotation_vote(s, {}) != base) return {false, "shift changed the set, trial " + std::to_string(trial)};
        }
        // 99 consistent matches plus one outlier at least 3 bins away
        const double centre = u(rng);
        std::vector<double> c;
        for (int i = 0; i < 99; ++i) c.push_back(centre + 0.5 * w * std::sin(i));
        c.push_back(centre + (3 + static_cast<int>(rng() % 24)) * w);
        const auto keep = rotation_vote(c, {});
        if (keep.back()) return {false, "outlier kept, trial " + std::to_string(trial)};
    }
    return {true, "200 trials"};
}

}  // namespace

int main() {
    using clock = std::chrono::steady_clock;
    std::vector<std::pair<std::string, std::function<Outcome()>>> pure = {
        {"AC4", ac4}, {"AC5", ac5}, {"AC6", ac6}, {"AC7", ac7}, {"AC9", ac9}};
    std::map<std::string, Outcome> results;
    auto guarded = [](const std::function<Outcome()>& f) {
        try {
            return f();
        } catch (const std::exception& e) {
            return Outcome{false, std::string("exception: ") + e.what()};
        }
    };

    const auto t0 = clock::now();
    std::string grid_error;
    try {
        render_grid();
        run_grid();
    } catch (const std::exception& e) {
        grid_error = e.what();
    }
    const double grid_s = std::chrono::duration<double>(clock::now() - t0).count();
    auto grid = [&](const std::function<Outcome()>& f) {
        return grid_error.empty() ? guarded(f) : Outcome{false, "benchmark failed: " + grid_error};
    };
    results["AC1"] = grid(ac1);
    results["AC1"].detail += "grid " + fmt("%.0f", grid_s) + " s";
    if (grid_s >= 600) results["AC1"].pass = false;
    results["AC2"] = grid(ac2);
    results["AC3"] = grid(ac3);
    results["AC8"] = grid(ac8);
    for (const auto& [name, f] : pure) results[name] = guarded(f);

    int failed = 0;
    for (const auto& [name, o] : results) {
        std::printf("%s %s  %s\n", name.c_str(), o.pass ? "PASS" : "FAIL", o.detail.c_str());
        failed += !o.pass;
    }
    std::fflush(stdout);
    return failed == 0 ? 0 : 1;
}
