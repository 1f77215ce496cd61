#include "bumpvo/hybrid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <sstream>

namespace bumpvo {

// --- budget ---------------------------------------------------------------

BudgetController BudgetController::make(int n_features, int match_floor, double multiplier, double decay) {
    BudgetController c;
    c.n_features = n_features;
    c.n_flow = n_features / 2;
    c.n_flow_min = n_features / 8;
    c.n_flow_max = 2 * n_features;
    c.match_floor = match_floor;
    c.multiplier = multiplier;
    c.decay = decay;
    return c;
}

BudgetController BudgetController::disabled(int n_features) {
    BudgetController c = make(n_features);
    c.n_flow = c.n_flow_min = c.n_flow_max = 0;
    return c;
}

BudgetController update_budget(const BudgetController& c, int n_matched) {
    BudgetController next = c;
    if (n_matched < c.match_floor)
        next.n_flow = static_cast<int>(std::min<long>(std::lround(c.n_flow * c.multiplier), c.n_flow_max));
    else
        next.n_flow = static_cast<int>(std::max<long>(std::lround(c.n_flow * c.decay), c.n_flow_min));
    return next;
}

// --- stages ---------------------------------------------------------------

std::vector<int> select_flow_points(const FrameFeatures& features, int n_flow) {
    const int n = static_cast<int>(features.size());
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    if (n_flow <= 0) return {};
    if (n_flow >= n) return idx;
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
        return features.keypoints[a].response > features.keypoints[b].response;
    });
    idx.resize(n_flow);
    std::sort(idx.begin(), idx.end());
    return idx;
}

std::vector<Match> fuse(const MatchSet& desc, const FrameFeatures& cur, const FlowResult& flow,
                        const std::vector<int>& flow_kf_idx, double disagree_thresh) {
    if (flow_kf_idx.size() != flow.tracked.size()) throw InvalidArgument("fuse: flow index list length mismatch");
    std::map<int, Match> by_kf;
    for (const auto& m : desc) {
        Match out;
        out.kf_idx = m.a_idx;
        out.cur_idx = m.b_idx;
        out.cur_pos = Point2{cur.keypoints[m.b_idx].x, cur.keypoints[m.b_idx].y};
        out.source = MatchSource::Descriptor;
        out.score = m.distance;
        by_kf.emplace(m.a_idx, out);
    }
    for (size_t i = 0; i < flow_kf_idx.size(); ++i) {
        if (flow.status[i] != FlowStatus::Ok) continue;
        const int k = flow_kf_idx[i];
        const auto it = by_kf.find(k);
        if (it != by_kf.end()) {
            if (it->second.source == MatchSource::Descriptor &&
                distance(it->second.cur_pos, flow.tracked[i]) > disagree_thresh)
                by_kf.erase(it);
            continue;
        }
        Match out;
        out.kf_idx = k;
        out.cur_pos = flow.tracked[i];
        out.source = MatchSource::Flow;
        out.score = flow.residual[i];
        by_kf.emplace(k, out);
    }
    std::vector<Match> result;
    result.reserve(by_kf.size());
    for (auto& [k, m] : by_kf) result.push_back(m);
    return result;
}

std::vector<bool> rotation_vote(const std::vector<double>& deltas, const RotationFilterParams& params) {
    if (params.bins < 3) throw InvalidArgument("rotation_vote: bins must be >= 3");
    if (params.keep_top < 1) throw InvalidArgument("rotation_vote: keep_top must be >= 1");
    const double two_pi = 2.0 * std::numbers::pi;
    const double width = two_pi / params.bins;

    std::vector<int> bin_of(deltas.size());
    std::vector<int> pop(params.bins, 0);
    for (size_t i = 0; i < deltas.size(); ++i) {
        double d = std::fmod(deltas[i], two_pi);
        if (d < 0.0) d += two_pi;
        int b = static_cast<int>(d / width);
        if (b >= params.bins) b -= params.bins;
        bin_of[i] = b;
        ++pop[b];
    }

    std::vector<int> nonempty;
    for (int b = 0; b < params.bins; ++b)
        if (pop[b] > 0) nonempty.push_back(b);
    std::vector<bool> keep(deltas.size(), false);
    if (nonempty.empty()) return keep;
    std::stable_sort(nonempty.begin(), nonempty.end(), [&](int a, int b) { return pop[a] > pop[b]; });

    const int top = pop[nonempty.front()];
    const int cutoff = pop[nonempty[std::min<size_t>(params.keep_top, nonempty.size()) - 1]];
    std::vector<bool> bin_kept(params.bins, false);
    for (int b : nonempty)
        bin_kept[b] = pop[b] >= cutoff && pop[b] >= params.min_bin_share * top;
    for (size_t i = 0; i < deltas.size(); ++i) keep[i] = bin_kept[bin_of[i]];
    return keep;
}

std::vector<Match> rotation_filter(const std::vector<Match>& matches, const FrameFeatures& kf, const Pyramid& cur,
                                   const RotationFilterParams& params, int* dropped_out_of_image) {
    std::vector<Match> candidates;
    std::vector<double> deltas;
    int dropped = 0;
    for (const auto& m : matches) {
        const Keypoint& k = kf.keypoints[m.kf_idx];
        const int level = std::min(k.level, cur.n_levels() - 1);
        const double s = cur.scale(level);
        const FloatImage& img = cur.levels[level];
        const double x = m.cur_pos.x / s, y = m.cur_pos.y / s;
        if (!orientation_fits(img, x, y)) {
            ++dropped;
            continue;
        }
        candidates.push_back(m);
        deltas.push_back(k.angle - orientation(img, x, y));
    }
    if (dropped_out_of_image) *dropped_out_of_image = dropped;

    const std::vector<bool> keep = rotation_vote(deltas, params);
    std::vector<Match> out;
    for (size_t i = 0; i < candidates.size(); ++i)
        if (keep[i]) out.push_back(candidates[i]);
    return out;
}

// --- stats ----------------------------------------------------------------

const char* to_string(TrackingMode m) {
    switch (m) {
        case TrackingMode::Hybrid: return "hybrid";
        case TrackingMode::DescriptorOnly: return "descriptor-only";
        case TrackingMode::FlowOnly: return "flow-only";
    }
    return "?";
}

TrackingMode parse_mode(const std::string& s) {
    if (s == "hybrid") return TrackingMode::Hybrid;
    if (s == "descriptor-only") return TrackingMode::DescriptorOnly;
    if (s == "flow-only") return TrackingMode::FlowOnly;
    throw InvalidArgument("unknown tracking mode '" + s + "'");
}

std::string stats_csv_header() { return "frame,desc_matches,flow_matches,post_filter,flow_budget,lost"; }

std::string stats_csv(const std::vector<StatsRow>& rows) {
    std::string out = stats_csv_header() + "\n";
    char buf[128];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%d,%d,%d,%d,%d,%d\n", r.frame, r.desc_matches, r.flow_matches, r.post_filter,
                      r.flow_budget, r.lost ? 1 : 0);
        out += buf;
    }
    return out;
}

std::vector<StatsRow> parse_stats_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != stats_csv_header()) throw ParseError("stats csv: bad header", 1);
    std::vector<StatsRow> rows;
    long lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        StatsRow r;
        int lost = 0;
        if (std::sscanf(line.c_str(), "%d,%d,%d,%d,%d,%d", &r.frame, &r.desc_matches, &r.flow_matches, &r.post_filter,
                        &r.flow_budget, &lost) != 6)
            throw ParseError("stats csv line " + std::to_string(lineno) + ": malformed", lineno);
        r.lost = lost != 0;
        rows.push_back(r);
    }
    return rows;
}

std::vector<int> replay_budget(const BudgetController& initial, const std::vector<StatsRow>& rows) {
    std::vector<int> out;
    BudgetController c = initial;
    for (const auto& r : rows) {
        out.push_back(c.n_flow);
        c = update_budget(c, r.post_filter);
    }
    return out;
}

// --- tracker --------------------------------------------------------------

BudgetController TrackerConfig::initial_controller() const {
    if (mode == TrackingMode::DescriptorOnly) return BudgetController::disabled(extractor.n_features);
    return BudgetController::make(extractor.n_features, match_floor, budget_multiplier, budget_decay);
}

Tracker::Tracker(TrackerConfig cfg) : cfg_(std::move(cfg)), controller_(cfg_.initial_controller()) {}

Tracker::FrameData Tracker::preprocess(const GrayImage& image, double timestamp, int index) const {
    FrameData f;
    f.index = index;
    f.timestamp = timestamp;
    const FloatImage smooth = gaussian_blur(image, cfg_.preprocess_sigma);
    f.orb = build_pyramid(smooth, cfg_.pyramid_levels, cfg_.pyramid_scale, cfg_.pyramid_blur);
    f.flow = make_flow_pyramid(build_pyramid(smooth, cfg_.flow.max_level + 1, cfg_.flow_pyramid_scale, cfg_.pyramid_blur));
    f.features = extract(f.orb, cfg_.extractor, index, timestamp);
    return f;
}

PoseSE3 Tracker::extrapolate() const {
    const auto& e = trajectory_.entries;
    if (e.empty()) return PoseSE3::identity();
    if (e.size() == 1) return e.back().pose;
    const PoseSE3& last = e[e.size() - 1].pose;
    const PoseSE3& prev = e[e.size() - 2].pose;
    return last * (prev.inverse() * last);
}

void Tracker::seed_keyframe(FrameData&& frame, const PoseSE3& pose, std::vector<double> depth) {
    depth.resize(frame.features.size(), 0.0);
    keyframe_ = Keyframe{std::move(frame), pose, std::move(depth)};
}

namespace {

double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<long>(mid), v.end());
    return v[mid];
}

}  // namespace

FrameResult Tracker::track_frame(const GrayImage& image, double timestamp) {
    const int index = frame_count_++;
    FrameData cur = preprocess(image, timestamp, index);
    FrameResult res;
    res.stats.frame = index;
    res.stats.flow_budget = controller_.n_flow;

    if (!keyframe_) {
        // Initialisation (or re-seeding after a loss): the frame trivially
        // matches itself.
        const int n = static_cast<int>(cur.features.size());
        res.stats.desc_matches = n;
        res.stats.post_filter = n;
        res.stats.lost = n < cfg_.min_tracked;
        res.pose = trajectory_.empty() ? PoseSE3::identity() : extrapolate();
        res.pose_source = trajectory_.empty() ? PoseSource::Initial : PoseSource::Extrapolated;
        controller_ = update_budget(controller_, n);
        if (!res.stats.lost) {
            seed_keyframe(std::move(cur), res.pose);
            res.promoted = true;
        }
        trajectory_.push_back(timestamp, res.pose);
        stats_.push_back(res.stats);
        return res;
    }

    Keyframe& kf = *keyframe_;

    MatchSet desc;
    if (cfg_.mode != TrackingMode::FlowOnly) desc = match(kf.frame.features, cur.features, cfg_.matching);

    const std::vector<int> flow_idx = select_flow_points(kf.frame.features, controller_.n_flow);
    std::vector<Point2> origin;
    origin.reserve(flow_idx.size());
    for (int i : flow_idx) origin.push_back({kf.frame.features.keypoints[i].x, kf.frame.features.keypoints[i].y});
    FlowResult flow = track(kf.frame.flow, cur.flow, origin, cfg_.flow);
    flow.status = fb_check(kf.frame.flow, cur.flow, origin, flow.tracked, flow.status, cfg_.fb_thresh, cfg_.flow);

    const std::vector<Match> fused = fuse(desc, cur.features, flow, flow_idx, cfg_.disagree_thresh);
    res.matches = rotation_filter(fused, kf.frame.features, cur.orb, cfg_.rotation, &res.rotation_dropped);

    res.stats.desc_matches = static_cast<int>(desc.size());
    res.stats.flow_matches =
        static_cast<int>(std::count(flow.status.begin(), flow.status.end(), FlowStatus::Ok));
    res.stats.post_filter = static_cast<int>(res.matches.size());
    res.stats.lost = res.stats.post_filter < cfg_.min_tracked;
    controller_ = update_budget(controller_, res.stats.post_filter);

    if (res.stats.lost) {
        res.pose = extrapolate();
        res.pose_source = PoseSource::Extrapolated;
        if (static_cast<int>(cur.features.size()) >= cfg_.min_tracked) {
            seed_keyframe(std::move(cur), res.pose);
            res.promoted = true;
        }
        trajectory_.push_back(timestamp, res.pose);
        stats_.push_back(res.stats);
        return res;
    }

    // --- relative pose against the keyframe ---
    std::vector<Correspondence> corr;
    std::vector<double> parallax;
    corr.reserve(res.matches.size());
    for (const auto& m : res.matches) {
        const Keypoint& k = kf.frame.features.keypoints[m.kf_idx];
        corr.push_back({normalize(Point2{k.x, k.y}, cfg_.K), normalize(m.cur_pos, cfg_.K)});
        parallax.push_back(std::hypot(m.cur_pos.x - k.x, m.cur_pos.y - k.y));
    }

    std::vector<double> cur_depth(cur.features.size(), 0.0);
    if (median_of(parallax) < cfg_.min_parallax_px) {
        res.pose = kf.pose;
        res.pose_source = PoseSource::Static;
    } else {
        try {
            const RansacResult rs = ransac_essential(corr, cfg_.ransac_iters, cfg_.ransac_thresh_px / cfg_.K.fx,
                                                     cfg_.seed ^ (static_cast<std::uint64_t>(index) * 0x9E3779B97F4A7C15ull));
            std::vector<Correspondence> inl;
            std::vector<size_t> inl_idx;
            for (size_t i = 0; i < corr.size(); ++i)
                if (rs.inliers[i]) {
                    inl.push_back(corr[i]);
                    inl_idx.push_back(i);
                }
            const RelativePose rel = refine_pose(decompose(rs.E, inl), inl);
            // cur-from-kf with unit baseline; camera pose of cur in the kf frame is its inverse
            const PoseSE3 kf_from_cur_unit = PoseSE3(rel.R, rel.t).inverse();
            const std::vector<TriangulatedPoint> pts = triangulate(PoseSE3::identity(), kf_from_cur_unit, inl);

            std::vector<double> prev_d, cur_d;
            for (size_t j = 0; j < pts.size(); ++j) {
                const int k = res.matches[inl_idx[j]].kf_idx;
                if (pts[j].far || pts[j].depth_a <= 0.0 || pts[j].depth_b <= 0.0) continue;
                if (kf.depth[k] > 0.0) {
                    prev_d.push_back(kf.depth[k]);
                    cur_d.push_back(pts[j].depth_a);
                }
            }

            double scale = 1.0;
            try {
                scale = propagate_scale(prev_d, cur_d);
            } catch (const ScaleLost&) {
                if (scale_known_) {
                    // keep the baseline the motion model predicts
                    const PoseSE3 predicted = kf.pose.inverse() * extrapolate();
                    scale = predicted.translation.norm();
                    res.scale_lost = true;
                }
            }
            scale_known_ = true;

            const PoseSE3 kf_from_cur = PoseSE3(rel.R, scale * rel.t).inverse();
            res.pose = kf.pose * kf_from_cur;
            res.pose_source = PoseSource::Estimated;

            for (size_t j = 0; j < pts.size(); ++j) {
                if (pts[j].far || pts[j].depth_a <= 0.0 || pts[j].depth_b <= 0.0) continue;
                const Match& m = res.matches[inl_idx[j]];
                // the first depth seen fixes the keyframe structure, so scale
                // error does not compound from frame to frame
                if (kf.depth[m.kf_idx] <= 0.0) kf.depth[m.kf_idx] = scale * pts[j].depth_a;
                // depth in the current camera, keyed by the nearest current keypoint
                int ci = m.cur_idx.value_or(-1);
                if (ci < 0) {
                    double best = 1.5;
                    for (size_t c = 0; c < cur.features.size(); ++c) {
                        const double d = std::hypot(cur.features.keypoints[c].x - m.cur_pos.x,
                                                    cur.features.keypoints[c].y - m.cur_pos.y);
                        if (d < best) {
                            best = d;
                            ci = static_cast<int>(c);
                        }
                    }
                }
                if (ci >= 0) cur_depth[ci] = scale * pts[j].depth_b;
            }
        } catch (const Error&) {
            res.pose = extrapolate();
            res.pose_source = PoseSource::Extrapolated;
        }
    }

    const bool starving = res.stats.post_filter < cfg_.promote_ratio * static_cast<double>(kf.frame.features.size());
    const bool gap = index - kf.frame.index >= cfg_.max_kf_gap;
    if ((starving || gap) && static_cast<int>(cur.features.size()) >= cfg_.min_tracked) {
        seed_keyframe(std::move(cur), res.pose, std::move(cur_depth));
        res.promoted = true;
    }

    trajectory_.push_back(timestamp, res.pose);
    stats_.push_back(res.stats);
    return res;
}

}  // namespace bumpvo
