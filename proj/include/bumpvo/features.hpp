#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <string>
#include <vector>

#include "bumpvo/image.hpp"

namespace bumpvo {

struct Keypoint {
    double x = 0.0;  // level-0 frame
    double y = 0.0;
    int level = 0;
    double angle = 0.0;  // radians, [0, 2pi)
    double response = 0.0;

    bool operator==(const Keypoint&) const = default;
};

struct Descriptor256 {
    std::array<std::uint64_t, 4> words{};

    bool bit(int i) const { return (words[i >> 6] >> (i & 63)) & 1u; }
    void set(int i) { words[i >> 6] |= (std::uint64_t{1} << (i & 63)); }
    bool operator==(const Descriptor256&) const = default;
};

inline int hamming(const Descriptor256& a, const Descriptor256& b) {
    int d = 0;
    for (int i = 0; i < 4; ++i) d += std::popcount(a.words[i] ^ b.words[i]);
    return d;
}

struct FrameFeatures {
    std::vector<Keypoint> keypoints;
    std::vector<Descriptor256> descriptors;
    int frame_id = 0;
    double timestamp = 0.0;

    size_t size() const { return keypoints.size(); }
    bool empty() const { return keypoints.empty(); }
    bool operator==(const FrameFeatures&) const = default;
};

struct DescriptorMatch {
    int a_idx = 0;
    int b_idx = 0;
    int distance = 0;

    bool operator==(const DescriptorMatch&) const = default;
};

using MatchSet = std::vector<DescriptorMatch>;

// --- detection ------------------------------------------------------------

inline constexpr int kFastBorder = 16;

/// Bresenham circle of radius 3, clockwise from 12 o'clock.
extern const std::array<std::array<int, 2>, 16> kFastCircle;

/// FAST 9-of-16 with sum-of-absolute-deviation response over the
/// qualifying arc, followed by strict 3x3 non-maximum suppression.
/// Pixels within 16 px of the border are never reported.
std::vector<Keypoint> detect_fast(const FloatImage& img, double threshold);
std::vector<Keypoint> detect_fast(const GrayImage& img, double threshold);

/// Segment-test score of a single pixel; 0 when it is not a corner.
double fast_score(const FloatImage& img, int x, int y, double threshold);

struct Bounds {
    double min_x = 0.0, min_y = 0.0, max_x = 0.0, max_y = 0.0;
};

/// Quadtree thinning: keeps the strongest keypoint of each leaf cell.
std::vector<Keypoint> distribute(const std::vector<Keypoint>& keypoints, int target_n, const Bounds& bounds);

// --- orientation & description -------------------------------------------

inline constexpr int kOrientationRadius = 15;

/// Intensity-centroid angle in [0, 2pi) over a disc centred at the nearest
/// pixel to (x, y). Coordinates are in `img`'s own frame.
double orientation(const FloatImage& img, double x, double y, int radius = kOrientationRadius);
bool orientation_fits(const FloatImage& img, double x, double y, int radius = kOrientationRadius);

struct PointPair {
    double px, py, qx, qy;
};
using SamplingPattern = std::array<PointPair, 256>;

/// The fixed pair layout (seed 0x5EED, sigma 31/5, clamped to +-15).
const SamplingPattern& brief_pattern();
SamplingPattern rotate_pattern(const SamplingPattern& pattern, double angle);
/// Pixels a patch must keep from the border to describe any orientation.
int describe_margin();

/// Bit i = 1 iff I(p_i) < I(q_i), sampled bilinearly around (x, y).
Descriptor256 describe_with_pattern(const FloatImage& img, double x, double y, const SamplingPattern& pattern);
/// Steered BRIEF; `x`, `y` in `img`'s frame, pattern rotated by `angle`.
Descriptor256 describe(const FloatImage& img, double x, double y, double angle);
bool describe_fits(const FloatImage& img, double x, double y);

// --- extraction -----------------------------------------------------------

struct ExtractorParams {
    int n_features = 1000;
    double fast_threshold = 20.0;
    double fast_min_threshold = 7.0;
    double desc_blur_sigma = 2.0;
};

/// Per-level budgets proportional to level area, summing to n_features.
std::vector<int> level_budgets(const Pyramid& pyr, int n_features);

/// Detection, distribution, orientation and description over every level.
/// Keypoint coordinates are returned in the level-0 frame.
FrameFeatures extract(const Pyramid& pyr, const ExtractorParams& params, int frame_id = 0, double timestamp = 0.0);

/// Per-level images the descriptors were sampled on (blurred copies).
std::vector<FloatImage> descriptor_levels(const Pyramid& pyr, double sigma);

// --- matching -------------------------------------------------------------

struct MatchParams {
    int max_hamming = 64;
    double ratio = 0.8;
    bool cross_check = true;
};

/// Brute-force Hamming matching with ratio test and mutual-best check.
MatchSet match(const FrameFeatures& a, const FrameFeatures& b, const MatchParams& params = {});

std::string features_csv(const FrameFeatures& f);

}  // namespace bumpvo
