#include "bumpvo/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <random>

namespace bumpvo {

const std::array<std::array<int, 2>, 16> kFastCircle = {{
    {0, -3}, {1, -3}, {2, -2}, {3, -1}, {3, 0}, {3, 1}, {2, 2}, {1, 3},
    {0, 3}, {-1, 3}, {-2, 2}, {-3, 1}, {-3, 0}, {-3, -1}, {-2, -2}, {-1, -3},
}};

// --- detection ------------------------------------------------------------

double fast_score(const FloatImage& img, int x, int y, double threshold) {
    const double c = img.at(x, y);
    std::array<double, 16> v;
    std::array<int, 16> state;
    int n_bright = 0, n_dark = 0;
    for (int i = 0; i < 16; ++i) {
        v[i] = img.at(x + kFastCircle[i][0], y + kFastCircle[i][1]);
        state[i] = v[i] > c + threshold ? 1 : (v[i] < c - threshold ? -1 : 0);
        n_bright += state[i] == 1;
        n_dark += state[i] == -1;
    }
    const int sign = n_bright >= 9 ? 1 : (n_dark >= 9 ? -1 : 0);
    if (sign == 0) return 0.0;
    if ((sign == 1 ? n_bright : n_dark) == 16) {
        double s = 0.0;
        for (int i = 0; i < 16; ++i) s += std::abs(v[i] - c);
        return s;
    }

    // Walk the circle twice from a non-qualifying pixel; only one run can
    // reach 9 on a 16-pixel ring.
    int start = 0;
    while (state[start] == sign) ++start;
    int run = 0;
    double run_sum = 0.0;
    for (int k = 1; k <= 16; ++k) {
        const int i = (start + k) % 16;
        if (state[i] == sign) {
            ++run;
            run_sum += std::abs(v[i] - c);
            if (run >= 9 && (state[(i + 1) % 16] != sign)) return run_sum;
        } else {
            run = 0;
            run_sum = 0.0;
        }
    }
    return 0.0;
}

std::vector<Keypoint> detect_fast(const FloatImage& img, double threshold) {
    std::vector<Keypoint> out;
    const int w = img.width, h = img.height;
    if (w <= 2 * kFastBorder || h <= 2 * kFastBorder) return out;

    FloatImage score(w, h, 0.0);
    for (int y = kFastBorder; y < h - kFastBorder; ++y)
        for (int x = kFastBorder; x < w - kFastBorder; ++x) score.at(x, y) = fast_score(img, x, y, threshold);

    for (int y = kFastBorder; y < h - kFastBorder; ++y)
        for (int x = kFastBorder; x < w - kFastBorder; ++x) {
            const double s = score.at(x, y);
            if (s <= 0.0) continue;
            bool is_max = true;
            for (int dy = -1; dy <= 1 && is_max; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    if ((dx || dy) && score.at(x + dx, y + dy) >= s) {
                        is_max = false;
                        break;
                    }
                }
            if (is_max) out.push_back(Keypoint{static_cast<double>(x), static_cast<double>(y), 0, 0.0, s});
        }
    return out;
}

std::vector<Keypoint> detect_fast(const GrayImage& img, double threshold) {
    return detect_fast(to_float(img), threshold);
}

// --- distribution ---------------------------------------------------------

namespace {

struct QuadNode {
    Bounds b;
    std::vector<int> idx;
};

bool splittable(const QuadNode& n, const std::vector<Keypoint>& kps) {
    if (n.idx.size() < 2) return false;
    if (n.b.max_x - n.b.min_x < 1.0 && n.b.max_y - n.b.min_y < 1.0) return false;
    const Keypoint& first = kps[n.idx.front()];
    return std::any_of(n.idx.begin(), n.idx.end(),
                       [&](int i) { return kps[i].x != first.x || kps[i].y != first.y; });
}

}  // namespace

std::vector<Keypoint> distribute(const std::vector<Keypoint>& keypoints, int target_n, const Bounds& bounds) {
    if (target_n < 1) throw InvalidArgument("distribute: target_n must be >= 1");
    if (keypoints.empty()) return {};

    std::vector<QuadNode> leaves(1);
    leaves[0].b = bounds;
    for (int i = 0; i < static_cast<int>(keypoints.size()); ++i) leaves[0].idx.push_back(i);

    while (static_cast<int>(leaves.size()) < target_n) {
        // split the most crowded leaf; earliest leaf wins ties
        int pick = -1;
        for (int i = 0; i < static_cast<int>(leaves.size()); ++i)
            if (splittable(leaves[i], keypoints) && (pick < 0 || leaves[i].idx.size() > leaves[pick].idx.size()))
                pick = i;
        if (pick < 0) break;

        QuadNode parent = std::move(leaves[pick]);
        leaves.erase(leaves.begin() + pick);
        const double mx = 0.5 * (parent.b.min_x + parent.b.max_x);
        const double my = 0.5 * (parent.b.min_y + parent.b.max_y);
        std::array<QuadNode, 4> kids;
        kids[0].b = {parent.b.min_x, parent.b.min_y, mx, my};
        kids[1].b = {mx, parent.b.min_y, parent.b.max_x, my};
        kids[2].b = {parent.b.min_x, my, mx, parent.b.max_y};
        kids[3].b = {mx, my, parent.b.max_x, parent.b.max_y};
        for (int i : parent.idx) {
            const int q = (keypoints[i].x >= mx ? 1 : 0) + (keypoints[i].y >= my ? 2 : 0);
            kids[q].idx.push_back(i);
        }
        for (auto& k : kids)
            if (!k.idx.empty()) leaves.push_back(std::move(k));
    }

    std::vector<int> keep;
    keep.reserve(leaves.size());
    for (const auto& leaf : leaves) {
        int best = leaf.idx.front();
        for (int i : leaf.idx)
            if (keypoints[i].response > keypoints[best].response) best = i;
        keep.push_back(best);
    }
    std::sort(keep.begin(), keep.end());
    std::vector<Keypoint> out;
    out.reserve(keep.size());
    for (int i : keep) out.push_back(keypoints[i]);
    return out;
}

// --- orientation ----------------------------------------------------------

bool orientation_fits(const FloatImage& img, double x, double y, int radius) {
    const long cx = std::lround(x), cy = std::lround(y);
    return cx - radius >= 0 && cy - radius >= 0 && cx + radius < img.width && cy + radius < img.height;
}

double orientation(const FloatImage& img, double x, double y, int radius) {
    if (!orientation_fits(img, x, y, radius)) throw InvalidArgument("orientation: patch leaves the image");
    const int cx = static_cast<int>(std::lround(x)), cy = static_cast<int>(std::lround(y));
    double m10 = 0.0, m01 = 0.0, mass = 0.0;
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx) {
            if (dx * dx + dy * dy > radius * radius) continue;
            const double v = img.at(cx + dx, cy + dy);
            m10 += dx * v;
            m01 += dy * v;
            mass += std::abs(v);
        }
    const double tiny = 1e-12 * (mass + 1.0) * radius;
    if (std::abs(m10) <= tiny && std::abs(m01) <= tiny) return 0.0;
    double a = std::atan2(m01, m10);
    if (a < 0.0) a += 2.0 * std::numbers::pi;
    if (a >= 2.0 * std::numbers::pi) a = 0.0;
    return a;
}

// --- BRIEF ----------------------------------------------------------------

namespace {

SamplingPattern make_pattern() {
    std::mt19937_64 rng(0x5EED);
    constexpr double kSigma = 31.0 / 5.0;
    // Box-Muller on raw engine output; std::normal_distribution is not
    // portable across standard libraries.
    auto uniform = [&rng] { return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53; };
    auto gauss = [&] {
        const double u1 = uniform(), u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    };
    auto coord = [&] { return std::clamp(std::round(kSigma * gauss()), -15.0, 15.0); };

    SamplingPattern pat;
    for (auto& pp : pat) {
        pp.px = coord();
        pp.py = coord();
        do {
            pp.qx = coord();
            pp.qy = coord();
        } while (pp.qx == pp.px && pp.qy == pp.py);
    }
    return pat;
}

}  // namespace

const SamplingPattern& brief_pattern() {
    static const SamplingPattern pattern = make_pattern();
    return pattern;
}

SamplingPattern rotate_pattern(const SamplingPattern& pattern, double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    SamplingPattern out;
    for (size_t i = 0; i < pattern.size(); ++i) {
        const auto& p = pattern[i];
        out[i] = {c * p.px - s * p.py, s * p.px + c * p.py, c * p.qx - s * p.qy, s * p.qx + c * p.qy};
    }
    return out;
}

int describe_margin() {
    static const int margin = [] {
        double r = 0.0;
        for (const auto& p : brief_pattern())
            r = std::max({r, std::hypot(p.px, p.py), std::hypot(p.qx, p.qy)});
        return static_cast<int>(std::ceil(r)) + 1;
    }();
    return margin;
}

bool describe_fits(const FloatImage& img, double x, double y) {
    const int m = describe_margin();
    return x - m >= 0.0 && y - m >= 0.0 && x + m <= img.width - 1 && y + m <= img.height - 1;
}

Descriptor256 describe_with_pattern(const FloatImage& img, double x, double y, const SamplingPattern& pattern) {
    Descriptor256 d;
    for (int i = 0; i < 256; ++i) {
        const auto& p = pattern[i];
        const double a = sample_bilinear(img, x + p.px, y + p.py);
        const double b = sample_bilinear(img, x + p.qx, y + p.qy);
        if (a < b) d.set(i);
    }
    return d;
}

Descriptor256 describe(const FloatImage& img, double x, double y, double angle) {
    if (!describe_fits(img, x, y)) throw InvalidArgument("describe: patch leaves the image");
    return describe_with_pattern(img, x, y, rotate_pattern(brief_pattern(), angle));
}

// --- extraction -----------------------------------------------------------

std::vector<int> level_budgets(const Pyramid& pyr, int n_features) {
    const int L = pyr.n_levels();
    std::vector<int> budget(L, 0);
    if (L == 0) return budget;
    double total_area = 0.0;
    for (const auto& lvl : pyr.levels) total_area += static_cast<double>(lvl.width) * lvl.height;
    int assigned = 0;
    for (int l = 0; l + 1 < L; ++l) {
        const double area = static_cast<double>(pyr.levels[l].width) * pyr.levels[l].height;
        budget[l] = static_cast<int>(std::lround(n_features * area / total_area));
        assigned += budget[l];
    }
    budget[L - 1] = std::max(0, n_features - assigned);
    return budget;
}

std::vector<FloatImage> descriptor_levels(const Pyramid& pyr, double sigma) {
    std::vector<FloatImage> out;
    out.reserve(pyr.levels.size());
    for (const auto& lvl : pyr.levels) out.push_back(sigma > 0.0 ? gaussian_blur(lvl, sigma) : lvl);
    return out;
}

FrameFeatures extract(const Pyramid& pyr, const ExtractorParams& params, int frame_id, double timestamp) {
    if (params.n_features < 8) throw InvalidArgument("extract: n_features must be >= 8");
    FrameFeatures out;
    out.frame_id = frame_id;
    out.timestamp = timestamp;

    const std::vector<int> budget = level_budgets(pyr, params.n_features);
    const std::vector<FloatImage> blurred = descriptor_levels(pyr, params.desc_blur_sigma);

    for (int l = 0; l < pyr.n_levels(); ++l) {
        if (budget[l] <= 0) continue;
        const FloatImage& img = pyr.levels[l];
        auto usable = [&](const Keypoint& k) {
            return describe_fits(img, k.x, k.y) && orientation_fits(img, k.x, k.y);
        };

        std::vector<Keypoint> kps = detect_fast(img, params.fast_threshold);
        std::erase_if(kps, [&](const Keypoint& k) { return !usable(k); });
        if (static_cast<int>(kps.size()) < budget[l] && params.fast_min_threshold < params.fast_threshold) {
            kps = detect_fast(img, params.fast_min_threshold);
            std::erase_if(kps, [&](const Keypoint& k) { return !usable(k); });
        }
        if (kps.empty()) continue;

        std::vector<Keypoint> kept =
            distribute(kps, budget[l], Bounds{0.0, 0.0, static_cast<double>(img.width), static_cast<double>(img.height)});
        if (static_cast<int>(kept.size()) > budget[l]) {
            // trim the overshoot of the last quadtree split by response,
            // then restore raster order
            std::vector<int> order(kept.size());
            for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
            std::stable_sort(order.begin(), order.end(),
                             [&](int a, int b) { return kept[a].response > kept[b].response; });
            order.resize(budget[l]);
            std::sort(order.begin(), order.end());
            std::vector<Keypoint> trimmed;
            for (int i : order) trimmed.push_back(kept[i]);
            kept = std::move(trimmed);
        }

        const double s = pyr.scale(l);
        for (Keypoint k : kept) {
            k.angle = orientation(img, k.x, k.y);
            const Descriptor256 d = describe(blurred[l], k.x, k.y, k.angle);
            k.level = l;
            k.x *= s;
            k.y *= s;
            out.keypoints.push_back(k);
            out.descriptors.push_back(d);
        }
    }
    return out;
}

// --- matching -------------------------------------------------------------

MatchSet match(const FrameFeatures& a, const FrameFeatures& b, const MatchParams& params) {
    MatchSet out;
    if (a.empty() || b.empty()) return out;
    const int na = static_cast<int>(a.size()), nb = static_cast<int>(b.size());

    std::vector<int> best_for_b(nb, -1), best_for_b_dist(nb, std::numeric_limits<int>::max());
    std::vector<int> best_j(na, -1), best_d(na, 0), second_d(na, 0);
    for (int i = 0; i < na; ++i) {
        int b1 = std::numeric_limits<int>::max(), b2 = std::numeric_limits<int>::max(), j1 = -1;
        for (int j = 0; j < nb; ++j) {
            const int d = hamming(a.descriptors[i], b.descriptors[j]);
            if (d < b1) {
                b2 = b1;
                b1 = d;
                j1 = j;
            } else if (d < b2) {
                b2 = d;
            }
            if (d < best_for_b_dist[j]) {
                best_for_b_dist[j] = d;
                best_for_b[j] = i;
            }
        }
        best_j[i] = j1;
        best_d[i] = b1;
        second_d[i] = b2;
    }

    for (int i = 0; i < na; ++i) {
        if (best_d[i] > params.max_hamming) continue;
        if (second_d[i] != std::numeric_limits<int>::max() &&
            !(static_cast<double>(best_d[i]) < params.ratio * second_d[i]))
            continue;
        if (params.cross_check && best_for_b[best_j[i]] != i) continue;
        out.push_back(DescriptorMatch{i, best_j[i], best_d[i]});
    }
    return out;
}

std::string features_csv(const FrameFeatures& f) {
    std::string out = "frame_id,x,y,level,angle,response\n";
    char buf[160];
    for (const auto& k : f.keypoints) {
        std::snprintf(buf, sizeof(buf), "%d,%.4f,%.4f,%d,%.6f,%.4f\n", f.frame_id, k.x, k.y, k.level, k.angle,
                      k.response);
        out += buf;
    }
    return out;
}

}  // namespace bumpvo
