#include "bumpvo/eval.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <sstream>

#include "bumpvo/io_util.hpp"

namespace bumpvo {

// --- TUM ------------------------------------------------------------------

Trajectory parse_tum(const std::string& text) {
    Trajectory traj;
    std::istringstream in(text);
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;

        std::istringstream ls(line);
        std::array<double, 8> v{};
        for (double& x : v)
            if (!(ls >> x))
                throw ParseError("TUM line " + std::to_string(lineno) + ": expected 8 numeric fields", lineno);
        std::string extra;
        if (ls >> extra) throw ParseError("TUM line " + std::to_string(lineno) + ": trailing field '" + extra + "'", lineno);

        Eigen::Quaterniond q(v[7], v[4], v[5], v[6]);
        const double norm = q.norm();
        if (!(std::abs(norm - 1.0) <= kQuaternionTolerance))
            throw ParseError("TUM line " + std::to_string(lineno) + ": quaternion norm " + std::to_string(norm) +
                                 " is not unit",
                             lineno);
        if (!traj.empty() && !(v[0] > traj.entries.back().timestamp))
            throw ParseError("TUM line " + std::to_string(lineno) + ": timestamps not strictly increasing", lineno);
        traj.push_back(v[0], PoseSE3(q, Eigen::Vector3d(v[1], v[2], v[3])));
    }
    return traj;
}

std::string format_tum(const Trajectory& traj) {
    std::string out;
    char buf[256];
    for (const auto& e : traj.entries) {
        const auto& t = e.pose.translation;
        const auto& q = e.pose.rotation;
        std::snprintf(buf, sizeof(buf), "%.9f %.12f %.12f %.12f %.12f %.12f %.12f %.12f\n", e.timestamp, t.x(), t.y(),
                      t.z(), q.x(), q.y(), q.z(), q.w());
        out += buf;
    }
    return out;
}

Trajectory read_tum(const std::filesystem::path& path) { return parse_tum(read_file(path)); }

void write_tum(const Trajectory& traj, const std::filesystem::path& path) { write_file_atomic(path, format_tum(traj)); }

// --- association ----------------------------------------------------------

std::vector<IndexPair> associate(const Trajectory& a, const Trajectory& b, double max_dt) {
    if (!(max_dt >= 0.0)) throw InvalidArgument("associate: max_dt must be >= 0");
    std::vector<IndexPair> out;
    std::vector<bool> used(b.size(), false);
    for (size_t i = 0; i < a.size(); ++i) {
        const double t = a.entries[i].timestamp;
        const auto it = std::lower_bound(b.entries.begin(), b.entries.end(), t,
                                         [](const TimedPose& p, double v) { return p.timestamp < v; });
        const size_t pivot = static_cast<size_t>(it - b.entries.begin());
        size_t best = b.size();
        double best_dt = std::numeric_limits<double>::infinity();
        // walk outwards; timestamps are sorted so we can stop once beyond max_dt
        for (size_t j = pivot; j < b.size() && b.entries[j].timestamp - t <= max_dt; ++j)
            if (!used[j]) {
                best = j;
                best_dt = b.entries[j].timestamp - t;
                break;
            }
        for (size_t j = pivot; j-- > 0 && t - b.entries[j].timestamp <= max_dt;)
            if (!used[j]) {
                if (t - b.entries[j].timestamp < best_dt) best = j;
                break;
            }
        if (best < b.size()) {
            used[best] = true;
            out.push_back({i, best});
        }
    }
    if (out.empty()) throw EmptyAssociation("associate: no timestamps within max_dt");
    return out;
}

// --- Umeyama --------------------------------------------------------------

AlignmentTransform umeyama(const std::vector<Eigen::Vector3d>& src, const std::vector<Eigen::Vector3d>& dst,
                           bool with_scale) {
    if (src.size() != dst.size()) throw InvalidArgument("umeyama: point lists differ in length");
    if (src.size() < 3) throw DegenerateAlignment("umeyama: need at least 3 point pairs");
    const double n = static_cast<double>(src.size());

    Eigen::Vector3d mu_s = Eigen::Vector3d::Zero(), mu_d = Eigen::Vector3d::Zero();
    for (size_t i = 0; i < src.size(); ++i) {
        mu_s += src[i];
        mu_d += dst[i];
    }
    mu_s /= n;
    mu_d /= n;

    double var_s = 0.0;
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (size_t i = 0; i < src.size(); ++i) {
        const Eigen::Vector3d a = src[i] - mu_s, b = dst[i] - mu_d;
        var_s += a.squaredNorm();
        cov += b * a.transpose();
    }
    var_s /= n;
    cov /= n;

    Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::Vector3d d = svd.singularValues();
    if (!(var_s > 0.0) || !(d(0) > 0.0) || d(1) <= 1e-12 * d(0))
        throw DegenerateAlignment("umeyama: point set is collinear or degenerate");

    Eigen::Vector3d S(1.0, 1.0, 1.0);
    if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) S(2) = -1.0;
    const Eigen::Matrix3d R = svd.matrixU() * S.asDiagonal() * svd.matrixV().transpose();

    AlignmentTransform T;
    T.scale = with_scale ? d.dot(S) / var_s : 1.0;
    T.rotation = Eigen::Quaterniond(R).normalized();
    T.translation = mu_d - T.scale * (R * mu_s);
    return T;
}

// --- metrics --------------------------------------------------------------

ErrorStats compute_stats(std::vector<double> errors) {
    if (errors.empty()) throw InvalidArgument("compute_stats: no samples");
    ErrorStats s;
    s.n = errors.size();
    double sum = 0.0, sq = 0.0;
    for (double e : errors) {
        sum += e;
        sq += e * e;
    }
    s.mean = sum / static_cast<double>(s.n);
    s.rmse = std::sqrt(sq / static_cast<double>(s.n));
    std::sort(errors.begin(), errors.end());
    s.min = errors.front();
    s.max = errors.back();
    const size_t mid = s.n / 2;
    s.median = s.n % 2 ? errors[mid] : 0.5 * (errors[mid - 1] + errors[mid]);
    return s;
}

AteResult ate(const Trajectory& est, const Trajectory& gt, bool with_scale, double max_dt) {
    const std::vector<IndexPair> pairs = associate(est, gt, max_dt);
    std::vector<Eigen::Vector3d> src, dst;
    for (const auto& p : pairs) {
        src.push_back(est.entries[p.a].pose.translation);
        dst.push_back(gt.entries[p.b].pose.translation);
    }
    AteResult res;
    res.alignment = umeyama(src, dst, with_scale);
    std::vector<double> err;
    err.reserve(src.size());
    for (size_t i = 0; i < src.size(); ++i) err.push_back((dst[i] - res.alignment.apply(src[i])).norm());
    res.stats = compute_stats(std::move(err));
    return res;
}

RpeResult rpe(const Trajectory& est, const Trajectory& gt, int delta, double max_dt) {
    if (delta < 1) throw InvalidArgument("rpe: delta must be >= 1");
    const std::vector<IndexPair> pairs = associate(est, gt, max_dt);
    if (pairs.size() < static_cast<size_t>(delta) + 1)
        throw InsufficientOverlap("rpe: " + std::to_string(pairs.size()) + " associated poses for delta " +
                                  std::to_string(delta));
    std::vector<double> terr, rerr;
    for (size_t i = 0; i + delta < pairs.size(); ++i) {
        const PoseSE3& e0 = est.entries[pairs[i].a].pose;
        const PoseSE3& e1 = est.entries[pairs[i + delta].a].pose;
        const PoseSE3& g0 = gt.entries[pairs[i].b].pose;
        const PoseSE3& g1 = gt.entries[pairs[i + delta].b].pose;
        const PoseSE3 E = (g0.inverse() * g1).inverse() * (e0.inverse() * e1);
        terr.push_back(E.translation.norm());
        rerr.push_back(rotation_angle(E.rotation) * 180.0 / std::numbers::pi);
    }
    return {compute_stats(std::move(terr)), compute_stats(std::move(rerr))};
}

// --- SVG ------------------------------------------------------------------

namespace {

constexpr std::array<const char*, 8> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                 "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

double nice_step(double span) {
    if (!(span > 0.0)) return 1.0;
    const double raw = span / 6.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (double m : {1.0, 2.0, 5.0, 10.0})
        if (m * mag >= raw) return m * mag;
    return 10.0 * mag;
}

}  // namespace

std::string plot_svg(const std::vector<NamedTrajectory>& trajectories) {
    if (trajectories.empty()) throw InvalidArgument("plot_svg: nothing to plot");
    constexpr double kSize = 800.0, kMargin = 70.0;

    double min_x = std::numeric_limits<double>::infinity(), max_x = -min_x;
    double min_y = min_x, max_y = -min_x;
    for (const auto& nt : trajectories)
        for (const auto& e : nt.traj.entries) {
            min_x = std::min(min_x, e.pose.translation.x());
            max_x = std::max(max_x, e.pose.translation.x());
            min_y = std::min(min_y, e.pose.translation.y());
            max_y = std::max(max_y, e.pose.translation.y());
        }
    if (!std::isfinite(min_x)) min_x = max_x = min_y = max_y = 0.0;
    // equal aspect: square world window around the data
    double span = std::max({max_x - min_x, max_y - min_y, 1e-3});
    const double step = nice_step(span);
    const double cx = 0.5 * (min_x + max_x), cy = 0.5 * (min_y + max_y);
    const double lo_x = std::floor((cx - 0.55 * span) / step) * step;
    const double lo_y = std::floor((cy - 0.55 * span) / step) * step;
    span = std::max(std::ceil((cx + 0.55 * span) / step) * step - lo_x, std::ceil((cy + 0.55 * span) / step) * step - lo_y);
    const double px_per_m = (kSize - 2 * kMargin) / span;
    auto sx = [&](double x) { return kMargin + (x - lo_x) * px_per_m; };
    auto sy = [&](double y) { return kSize - kMargin - (y - lo_y) * px_per_m; };

    std::string svg;
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" viewBox=\"0 0 %d %d\">\n",
                  static_cast<int>(kSize), static_cast<int>(kSize), static_cast<int>(kSize), static_cast<int>(kSize));
    svg += buf;
    svg += "<rect x=\"0\" y=\"0\" width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    svg += "<g class=\"axes\" stroke=\"#999\" stroke-width=\"0.5\" font-family=\"sans-serif\" font-size=\"11\">\n";
    for (double v = lo_x; v <= lo_x + span + 1e-9 * step; v += step) {
        std::snprintf(buf, sizeof(buf),
                      "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\"/><text x=\"%.2f\" y=\"%.2f\" "
                      "text-anchor=\"middle\" stroke=\"none\">%g</text>\n",
                      sx(v), kMargin, sx(v), kSize - kMargin, sx(v), kSize - kMargin + 16, v);
        svg += buf;
    }
    for (double v = lo_y; v <= lo_y + span + 1e-9 * step; v += step) {
        std::snprintf(buf, sizeof(buf),
                      "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\"/><text x=\"%.2f\" y=\"%.2f\" "
                      "text-anchor=\"end\" stroke=\"none\">%g</text>\n",
                      kMargin, sy(v), kSize - kMargin, sy(v), kMargin - 6, sy(v) + 4, v);
        svg += buf;
    }
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%.2f\" y=\"%.2f\" text-anchor=\"middle\" stroke=\"none\">x [m]</text>\n"
                  "<text x=\"%.2f\" y=\"%.2f\" text-anchor=\"middle\" stroke=\"none\">y [m]</text>\n</g>\n",
                  kSize / 2, kSize - 20, 20.0, kSize / 2);
    svg += buf;

    for (size_t k = 0; k < trajectories.size(); ++k) {
        const char* color = kPalette[k % kPalette.size()];
        std::snprintf(buf, sizeof(buf), "<polyline fill=\"none\" stroke=\"%s\" stroke-width=\"1.5\" points=\"", color);
        svg += buf;
        bool first = true;
        for (const auto& e : trajectories[k].traj.entries) {
            std::snprintf(buf, sizeof(buf), "%s%.3f,%.3f", first ? "" : " ", sx(e.pose.translation.x()),
                          sy(e.pose.translation.y()));
            svg += buf;
            first = false;
        }
        svg += "\"/>\n";
    }

    svg += "<g class=\"legend\" font-family=\"sans-serif\" font-size=\"12\">\n";
    for (size_t k = 0; k < trajectories.size(); ++k) {
        const double y = kMargin + 18.0 * static_cast<double>(k);
        std::snprintf(buf, sizeof(buf),
                      "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"%s\" stroke-width=\"3\"/>",
                      kSize - kMargin - 150, y, kSize - kMargin - 125, y, kPalette[k % kPalette.size()]);
        svg += buf;
        std::snprintf(buf, sizeof(buf), "<text x=\"%.2f\" y=\"%.2f\">", kSize - kMargin - 118, y + 4);
        svg += buf;
        for (char c : trajectories[k].name) {
            switch (c) {
                case '<': svg += "&lt;"; break;
                case '>': svg += "&gt;"; break;
                case '&': svg += "&amp;"; break;
                default: svg += c;
            }
        }
        svg += "</text>\n";
    }
    svg += "</g>\n</svg>\n";
    return svg;
}

void write_plot_svg(const std::vector<NamedTrajectory>& trajectories, const std::filesystem::path& out) {
    write_file_atomic(out, plot_svg(trajectories));
}

}  // namespace bumpvo
