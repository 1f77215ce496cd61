#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bumpvo/features.hpp"
#include "bumpvo/flow.hpp"
#include "bumpvo/geometry.hpp"

namespace bumpvo {

enum class MatchSource { Descriptor, Flow };

/// Keyframe-to-current correspondence. `cur_idx` is set iff the match came
/// from descriptor matching.
struct Match {
    int kf_idx = 0;
    Point2 cur_pos;
    std::optional<int> cur_idx;
    MatchSource source = MatchSource::Descriptor;
    double score = 0.0;  // Hamming distance or flow residual

    bool operator==(const Match&) const = default;
};

// --- flow-point budget ----------------------------------------------------

/// Adaptive flow-point budget: starts at half the feature budget, multiplies
/// on match starvation and decays while matching is healthy.
struct BudgetController {
    int n_features = 1000;
    int n_flow = 500;
    int n_flow_min = 125;
    int n_flow_max = 2000;
    int match_floor = 50;
    double multiplier = 2.0;
    double decay = 0.9;

    static BudgetController make(int n_features, int match_floor = 50, double multiplier = 2.0, double decay = 0.9);
    /// A controller pinned at zero flow points (descriptor-only tracking).
    static BudgetController disabled(int n_features);

    bool operator==(const BudgetController&) const = default;
};

BudgetController update_budget(const BudgetController& c, int n_matched);

// --- per-frame stages -----------------------------------------------------

/// Indices (ascending) of the n_flow highest-response keypoints; ties go to
/// the lower index.
std::vector<int> select_flow_points(const FrameFeatures& features, int n_flow);

/// One match per keyframe index. Where both sources matched the same
/// keyframe point, agreement within `disagree_thresh` keeps the descriptor
/// match and disagreement drops both. `flow_kf_idx[i]` is the keyframe index
/// tracked into flow slot i; only Ok flow entries are considered.
std::vector<Match> fuse(const MatchSet& desc, const FrameFeatures& cur, const FlowResult& flow,
                        const std::vector<int>& flow_kf_idx, double disagree_thresh);

struct RotationFilterParams {
    int bins = 30;
    int keep_top = 3;
    // a secondary bin survives only with at least this share of the top bin
    double min_bin_share = 0.1;
};

/// Histogram vote over angle differences (radians). Returns a keep flag per
/// entry. Ties at the cut-off are all kept, so a cyclic shift of every delta
/// by a whole bin width leaves the result unchanged.
std::vector<bool> rotation_vote(const std::vector<double>& deltas, const RotationFilterParams& params);

/// Recomputes orientation at each match's current position (on the pyramid
/// level of its keyframe keypoint) and applies rotation_vote to
/// keyframe-angle minus current-angle. Matches whose patch leaves the image
/// are dropped and counted in `dropped_out_of_image`.
std::vector<Match> rotation_filter(const std::vector<Match>& matches, const FrameFeatures& kf, const Pyramid& cur,
                                   const RotationFilterParams& params, int* dropped_out_of_image = nullptr);

// --- tracker --------------------------------------------------------------

enum class TrackingMode { Hybrid, DescriptorOnly, FlowOnly };

const char* to_string(TrackingMode m);
TrackingMode parse_mode(const std::string& s);

struct TrackerConfig {
    TrackingMode mode = TrackingMode::Hybrid;
    std::uint64_t seed = 0;
    CameraIntrinsics K{};

    double preprocess_sigma = 1.0;
    int pyramid_levels = 8;
    double pyramid_scale = 1.2;
    double pyramid_blur = 0.5;  // inter-level sigma per unit of scale factor
    ExtractorParams extractor{};
    MatchParams matching{};

    FlowParams flow{};
    double flow_pyramid_scale = 2.0;
    double fb_thresh = 1.0;  // px
    double disagree_thresh = 2.0;  // px

    RotationFilterParams rotation{};

    int match_floor = 50;
    double budget_multiplier = 2.0;
    double budget_decay = 0.9;

    double promote_ratio = 0.4;
    int max_kf_gap = 20;
    int min_tracked = 8;

    int ransac_iters = 200;
    double ransac_thresh_px = 1.5;
    double min_parallax_px = 1.0;

    BudgetController initial_controller() const;
};

struct StatsRow {
    int frame = 0;
    int desc_matches = 0;
    int flow_matches = 0;
    int post_filter = 0;
    int flow_budget = 0;
    bool lost = false;

    bool operator==(const StatsRow&) const = default;
};

std::string stats_csv_header();
std::string stats_csv(const std::vector<StatsRow>& rows);
std::vector<StatsRow> parse_stats_csv(const std::string& text);

/// Replays the budget law over a stats log. Returns the expected
/// flow_budget column given the controller the run started with.
std::vector<int> replay_budget(const BudgetController& initial, const std::vector<StatsRow>& rows);

enum class PoseSource { Initial, Estimated, Static, Extrapolated };

struct FrameResult {
    std::vector<Match> matches;  // post-filter keyframe-to-current matches
    PoseSE3 pose;                // world-from-camera
    PoseSource pose_source = PoseSource::Initial;
    bool promoted = false;       // this frame became the keyframe
    bool scale_lost = false;
    int rotation_dropped = 0;
    StatsRow stats;
};

/// Keyframe-based front-end. Owns all tracking state; feed frames in order.
class Tracker {
public:
    explicit Tracker(TrackerConfig cfg);

    FrameResult track_frame(const GrayImage& image, double timestamp);

    const std::vector<StatsRow>& stats() const { return stats_; }
    const Trajectory& trajectory() const { return trajectory_; }
    const BudgetController& controller() const { return controller_; }
    const TrackerConfig& config() const { return cfg_; }
    bool has_keyframe() const { return keyframe_.has_value(); }

private:
    struct FrameData {
        int index = 0;
        double timestamp = 0.0;
        Pyramid orb;
        FlowPyramid flow;
        FrameFeatures features;
    };
    struct Keyframe {
        FrameData frame;
        PoseSE3 pose;
        std::vector<double> depth;  // per keypoint, <= 0 when unknown
    };

    FrameData preprocess(const GrayImage& image, double timestamp, int index) const;
    PoseSE3 extrapolate() const;
    void seed_keyframe(FrameData&& frame, const PoseSE3& pose, std::vector<double> depth = {});

    TrackerConfig cfg_;
    BudgetController controller_;
    std::optional<Keyframe> keyframe_;
    std::vector<StatsRow> stats_;
    Trajectory trajectory_;
    int frame_count_ = 0;
    bool scale_known_ = false;
};

}  // namespace bumpvo
