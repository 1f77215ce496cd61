#include "bumpvo/flow.hpp"

#include <algorithm>
#include <cmath>

namespace bumpvo {

const char* to_string(FlowStatus s) {
    switch (s) {
        case FlowStatus::Ok: return "ok";
        case FlowStatus::Diverged: return "diverged";
        case FlowStatus::OutOfBounds: return "out_of_bounds";
        case FlowStatus::FbFailed: return "fb_failed";
    }
    return "?";
}

FlowPyramid make_flow_pyramid(Pyramid pyr) {
    FlowPyramid fp;
    fp.grad.reserve(pyr.levels.size());
    for (const auto& lvl : pyr.levels) fp.grad.push_back(gradients(lvl));
    fp.pyr = std::move(pyr);
    return fp;
}

namespace {

// Samples a (2*half+1)^2 window centred at (cx, cy). Every tap shares the
// same fractional offset, so the bilinear weights are computed once.
void sample_window(const FloatImage& img, double cx, double cy, int half, std::vector<double>& out) {
    const double fx = std::floor(cx), fy = std::floor(cy);
    const double ax = cx - fx, ay = cy - fy;
    const int bx = static_cast<int>(fx), by = static_cast<int>(fy);
    const double w00 = (1 - ax) * (1 - ay), w10 = ax * (1 - ay), w01 = (1 - ax) * ay, w11 = ax * ay;
    const int side = 2 * half + 1;
    out.resize(static_cast<size_t>(side) * side);
    const bool inside = bx - half >= 0 && by - half >= 0 && bx + half + 1 < img.width && by + half + 1 < img.height;
    size_t k = 0;
    for (int dy = -half; dy <= half; ++dy)
        for (int dx = -half; dx <= half; ++dx, ++k) {
            const int x = bx + dx, y = by + dy;
            if (inside) {
                const double* r0 = &img.data[static_cast<size_t>(y) * img.width + x];
                const double* r1 = r0 + img.width;
                out[k] = w00 * r0[0] + w10 * r0[1] + w01 * r1[0] + w11 * r1[1];
            } else {
                out[k] = w00 * img.clamped(x, y) + w10 * img.clamped(x + 1, y) + w01 * img.clamped(x, y + 1) +
                         w11 * img.clamped(x + 1, y + 1);
            }
        }
}

double rms_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double e = a[i] - b[i];
        s += e * e;
    }
    return std::sqrt(s / static_cast<double>(a.size()));
}

bool window_fits(const FloatImage& img, const Point2& p, int half) {
    return p.x - half >= 0.0 && p.y - half >= 0.0 && p.x + half <= img.width - 1 && p.y + half <= img.height - 1;
}

struct PointTrack {
    Point2 pos;
    FlowStatus status = FlowStatus::Ok;
    double residual = 0.0;
};

PointTrack track_point(const FlowPyramid& prev, const FlowPyramid& cur, const Point2& p, const FlowParams& params,
                       ResidualTrace* trace) {
    const int half = params.window / 2;
    const int top = std::min(params.max_level, prev.pyr.n_levels() - 1);
    const double sf = prev.pyr.scale_factor;

    std::vector<double> tmpl, tgx, tgy, warped;
    double gx0 = 0.0, gy0 = 0.0;  // accumulated guess at the current level
    PointTrack out;

    if (!window_fits(prev.pyr.levels[0], p, half)) {
        out.status = FlowStatus::OutOfBounds;
        out.pos = p;
        return out;
    }

    for (int l = top; l >= 0; --l) {
        const double s = prev.pyr.scale(l);
        const double px = p.x / s, py = p.y / s;
        sample_window(prev.pyr.levels[l], px, py, half, tmpl);
        sample_window(prev.grad[l].gx, px, py, half, tgx);
        sample_window(prev.grad[l].gy, px, py, half, tgy);

        double a = 0.0, b = 0.0, c = 0.0;
        for (size_t k = 0; k < tmpl.size(); ++k) {
            a += tgx[k] * tgx[k];
            b += tgx[k] * tgy[k];
            c += tgy[k] * tgy[k];
        }
        const double n = static_cast<double>(tmpl.size());
        const double min_eig = 0.5 * ((a + c) - std::sqrt((a - c) * (a - c) + 4.0 * b * b)) / n;
        const double det = a * c - b * b;
        if (!(min_eig >= params.min_eigen) || det <= 0.0) {
            out.status = FlowStatus::Diverged;
            break;
        }

        double vx = 0.0, vy = 0.0;
        sample_window(cur.pyr.levels[l], px + gx0, py + gy0, half, warped);
        double r = rms_diff(tmpl, warped);
        std::vector<double>* level_trace = nullptr;
        if (trace) {
            trace->emplace_back();
            level_trace = &trace->back();
            level_trace->push_back(r);
        }

        for (int it = 0; it < params.max_iters; ++it) {
            double bx = 0.0, by = 0.0;
            for (size_t k = 0; k < tmpl.size(); ++k) {
                const double e = tmpl[k] - warped[k];
                bx += e * tgx[k];
                by += e * tgy[k];
            }
            const double ex = (c * bx - b * by) / det;
            const double ey = (a * by - b * bx) / det;
            std::vector<double> next;
            sample_window(cur.pyr.levels[l], px + gx0 + vx + ex, py + gy0 + vy + ey, half, next);
            const double r_next = rms_diff(tmpl, next);
            if (r_next > r) break;  // only non-increasing steps are accepted
            vx += ex;
            vy += ey;
            r = r_next;
            warped.swap(next);
            if (level_trace) level_trace->push_back(r);
            if (std::hypot(ex, ey) < params.eps) break;
        }

        const double dx = gx0 + vx, dy = gy0 + vy;
        if (std::hypot(dx, dy) > params.window) {
            out.status = FlowStatus::Diverged;
            break;
        }
        out.residual = r;
        if (l > 0) {
            gx0 = dx * sf;
            gy0 = dy * sf;
        } else {
            out.pos = Point2{p.x + dx, p.y + dy};
        }
    }

    if (out.status != FlowStatus::Ok) {
        out.pos = p;
        return out;
    }
    if (!window_fits(cur.pyr.levels[0], out.pos, half)) out.status = FlowStatus::OutOfBounds;
    return out;
}

void check_compatible(const FlowPyramid& a, const FlowPyramid& b, const FlowParams& params) {
    if (a.pyr.n_levels() != b.pyr.n_levels() || a.pyr.scale_factor != b.pyr.scale_factor)
        throw InvalidArgument("track: pyramids differ in depth or scale");
    for (int l = 0; l < a.pyr.n_levels(); ++l)
        if (a.pyr.levels[l].width != b.pyr.levels[l].width || a.pyr.levels[l].height != b.pyr.levels[l].height)
            throw InvalidArgument("track: pyramid level dimensions differ");
    if (a.grad.size() != a.pyr.levels.size() || b.grad.size() != b.pyr.levels.size())
        throw InvalidArgument("track: gradients missing");
    if (params.window < 5 || params.window % 2 == 0) throw InvalidArgument("track: window must be odd and >= 5");
    if (params.max_level < 0) throw InvalidArgument("track: max_level must be >= 0");
}

}  // namespace

FlowResult track(const FlowPyramid& prev, const FlowPyramid& cur, const std::vector<Point2>& points,
                 const FlowParams& params, std::vector<ResidualTrace>* traces) {
    check_compatible(prev, cur, params);
    FlowResult res;
    res.tracked.resize(points.size());
    res.status.resize(points.size());
    res.residual.resize(points.size());
    if (traces) traces->assign(points.size(), {});
    for (size_t i = 0; i < points.size(); ++i) {
        const PointTrack t = track_point(prev, cur, points[i], params, traces ? &(*traces)[i] : nullptr);
        res.tracked[i] = t.pos;
        res.status[i] = t.status;
        res.residual[i] = t.residual;
    }
    return res;
}

std::vector<FlowStatus> fb_check(const FlowPyramid& prev, const FlowPyramid& cur, const std::vector<Point2>& origin,
                                 const std::vector<Point2>& tracked, const std::vector<FlowStatus>& status,
                                 double fb_thresh, const FlowParams& params) {
    if (origin.size() != tracked.size() || origin.size() != status.size())
        throw InvalidArgument("fb_check: list lengths differ");
    std::vector<FlowStatus> out = status;
    if (!std::isfinite(fb_thresh)) return out;

    std::vector<Point2> fwd;
    std::vector<size_t> slot;
    for (size_t i = 0; i < status.size(); ++i)
        if (status[i] == FlowStatus::Ok) {
            fwd.push_back(tracked[i]);
            slot.push_back(i);
        }
    const FlowResult back = track(cur, prev, fwd, params);
    for (size_t k = 0; k < slot.size(); ++k) {
        const size_t i = slot[k];
        if (back.status[k] != FlowStatus::Ok || distance(back.tracked[k], origin[i]) > fb_thresh)
            out[i] = FlowStatus::FbFailed;
    }
    return out;
}

}  // namespace bumpvo
