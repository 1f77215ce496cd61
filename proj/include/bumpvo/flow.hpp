#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "bumpvo/image.hpp"

namespace bumpvo {

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    bool operator==(const Point2&) const = default;
};

inline double distance(const Point2& a, const Point2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

enum class FlowStatus { Ok, Diverged, OutOfBounds, FbFailed };

const char* to_string(FlowStatus s);

struct FlowParams {
    int window = 21;  // odd, pixels
    int max_iters = 30;
    double eps = 0.01;  // pixels
    int max_level = 3;
    double min_eigen = 1e-4;  // on the window-averaged structure tensor
};

struct FlowResult {
    std::vector<Point2> tracked;
    std::vector<FlowStatus> status;
    std::vector<double> residual;  // photometric RMS at the finest level
};

/// Pyramid plus the per-level spatial gradients LK needs on the reference
/// image. Build once per frame and reuse for every point.
struct FlowPyramid {
    Pyramid pyr;
    std::vector<Gradients> grad;
};

FlowPyramid make_flow_pyramid(Pyramid pyr);

/// Per-iteration photometric RMS, one vector per pyramid level (coarse
/// first). Only filled when requested.
using ResidualTrace = std::vector<std::vector<double>>;

/// Coarse-to-fine forward-additive LK; the structure tensor is computed on
/// `prev` once per point and level.
FlowResult track(const FlowPyramid& prev, const FlowPyramid& cur, const std::vector<Point2>& points,
                 const FlowParams& params = {}, std::vector<ResidualTrace>* traces = nullptr);

/// Re-tracks `tracked` from cur to prev and marks Ok points FbFailed when
/// they do not land within `fb_thresh` of their origin. Non-Ok entries keep
/// their status.
std::vector<FlowStatus> fb_check(const FlowPyramid& prev, const FlowPyramid& cur, const std::vector<Point2>& origin,
                                 const std::vector<Point2>& tracked, const std::vector<FlowStatus>& status,
                                 double fb_thresh, const FlowParams& params = {});

}  // namespace bumpvo
