#include "bumpvo/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "bumpvo/io_util.hpp"

namespace bumpvo {

FloatImage to_float(const GrayImage& img) {
    FloatImage out(img.width, img.height);
    std::transform(img.data.begin(), img.data.end(), out.data.begin(),
                   [](std::uint8_t v) { return static_cast<double>(v); });
    return out;
}

GrayImage to_gray(const FloatImage& img) {
    GrayImage out(img.width, img.height);
    std::transform(img.data.begin(), img.data.end(), out.data.begin(), [](double v) {
        const double r = std::round(v);
        return static_cast<std::uint8_t>(std::clamp(r, 0.0, 255.0));
    });
    return out;
}

// --- PGM ------------------------------------------------------------------

namespace {

struct PgmCursor {
    const std::string& bytes;
    size_t pos = 0;

    void skip_space_and_comments() {
        while (pos < bytes.size()) {
            const char c = bytes[pos];
            if (c == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                ++pos;
            } else {
                break;
            }
        }
    }

    long read_uint(const char* field) {
        skip_space_and_comments();
        const size_t start = pos;
        long value = 0;
        while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
            value = value * 10 + (bytes[pos] - '0');
            if (value > 1'000'000) throw ParseError(std::string("PGM ") + field + " too large", static_cast<long>(start));
            ++pos;
        }
        if (pos == start)
            throw ParseError(std::string("malformed PGM header: expected ") + field + " at byte " +
                                 std::to_string(start),
                             static_cast<long>(start));
        return value;
    }
};

}  // namespace

GrayImage decode_pgm(const std::string& bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P')
        throw ParseError("malformed PGM header: missing magic at byte 0", 0);
    if (bytes[1] != '5') throw ParseError("unsupported PGM variant P" + std::string(1, bytes[1]), 1);

    PgmCursor cur{bytes, 2};
    const long w = cur.read_uint("width");
    const long h = cur.read_uint("height");
    const size_t maxval_pos = cur.pos;
    const long maxval = cur.read_uint("maxval");
    if (w < 1 || h < 1) throw ParseError("malformed PGM header: zero dimension", 2);
    if (maxval != 255)
        throw ParseError("unsupported PGM maxval " + std::to_string(maxval) + " at byte " +
                             std::to_string(maxval_pos),
                         static_cast<long>(maxval_pos));
    // exactly one whitespace byte separates the header from the raster
    if (cur.pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[cur.pos])))
        throw ParseError("malformed PGM header: no separator at byte " + std::to_string(cur.pos),
                         static_cast<long>(cur.pos));
    ++cur.pos;

    const size_t need = static_cast<size_t>(w) * static_cast<size_t>(h);
    if (bytes.size() - cur.pos < need)
        throw ParseError("truncated PGM payload: expected " + std::to_string(need) + " bytes from byte " +
                             std::to_string(cur.pos) + ", got " + std::to_string(bytes.size() - cur.pos),
                         static_cast<long>(bytes.size()));

    std::vector<std::uint8_t> px(bytes.begin() + static_cast<long>(cur.pos),
                                 bytes.begin() + static_cast<long>(cur.pos + need));
    return GrayImage(static_cast<int>(w), static_cast<int>(h), std::move(px));
}

std::string encode_pgm(const GrayImage& img) {
    std::string out = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
    out.append(reinterpret_cast<const char*>(img.data.data()), img.data.size());
    return out;
}

GrayImage load_pgm(const std::filesystem::path& path) { return decode_pgm(read_file(path)); }

void save_pgm(const GrayImage& img, const std::filesystem::path& path) {
    write_file_atomic(path, encode_pgm(img));
}

// --- filtering ------------------------------------------------------------

std::vector<double> gaussian_kernel(double sigma) {
    if (!(sigma > 0.0)) throw InvalidArgument("gaussian sigma must be > 0");
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        k[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
        sum += k[i + radius];
    }
    for (double& v : k) v /= sum;
    return k;
}

FloatImage gaussian_blur(const FloatImage& img, double sigma) {
    const std::vector<double> k = gaussian_kernel(sigma);
    const int r = static_cast<int>(k.size() / 2);
    const int w = img.width, h = img.height;

    FloatImage tmp(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -r; i <= r; ++i) acc += k[i + r] * img.clamped(x + i, y);
            tmp.at(x, y) = acc;
        }

    FloatImage out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -r; i <= r; ++i) acc += k[i + r] * tmp.clamped(x, y + i);
            out.at(x, y) = acc;
        }
    return out;
}

FloatImage gaussian_blur(const GrayImage& img, double sigma) { return gaussian_blur(to_float(img), sigma); }

double sample_bilinear(const FloatImage& img, double x, double y) {
    if (!(x >= 0.0 && y >= 0.0 && x <= img.width - 1 && y <= img.height - 1))
        throw InvalidArgument("sample_bilinear: coordinate out of bounds");
    return sample_clamped(img, x, y);
}

double sample_clamped(const FloatImage& img, double x, double y) {
    x = std::clamp(x, 0.0, static_cast<double>(img.width - 1));
    y = std::clamp(y, 0.0, static_cast<double>(img.height - 1));
    const int x0 = static_cast<int>(x);
    const int y0 = static_cast<int>(y);
    const double ax = x - x0;
    const double ay = y - y0;
    const int x1 = std::min(x0 + 1, img.width - 1);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double top = (1.0 - ax) * img.at(x0, y0) + ax * img.at(x1, y0);
    const double bot = (1.0 - ax) * img.at(x0, y1) + ax * img.at(x1, y1);
    return (1.0 - ay) * top + ay * bot;
}

Gradients gradients(const FloatImage& img) {
    const int w = img.width, h = img.height;
    if (w < 3 || h < 3) throw InvalidArgument("gradients: image must be at least 3x3");
    Gradients g{FloatImage(w, h), FloatImage(w, h)};
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (x == 0)
                g.gx.at(x, y) = img.at(1, y) - img.at(0, y);
            else if (x == w - 1)
                g.gx.at(x, y) = img.at(w - 1, y) - img.at(w - 2, y);
            else
                g.gx.at(x, y) = 0.5 * (img.at(x + 1, y) - img.at(x - 1, y));

            if (y == 0)
                g.gy.at(x, y) = img.at(x, 1) - img.at(x, 0);
            else if (y == h - 1)
                g.gy.at(x, y) = img.at(x, h - 1) - img.at(x, h - 2);
            else
                g.gy.at(x, y) = 0.5 * (img.at(x, y + 1) - img.at(x, y - 1));
        }
    return g;
}

// --- pyramid --------------------------------------------------------------

double Pyramid::scale(int level) const { return std::pow(scale_factor, level); }

FloatImage resize_bilinear(const FloatImage& img, int width, int height) {
    FloatImage out(width, height);
    const double sx = static_cast<double>(img.width) / width;
    const double sy = static_cast<double>(img.height) / height;
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) out.at(x, y) = sample_clamped(img, x * sx, y * sy);
    return out;
}

namespace {

// Output pixel (x, y) samples the source at (x * factor, y * factor) so that
// keypoint coordinates rescale by exactly scale_factor^level.
FloatImage downsample(const FloatImage& img, int width, int height, double factor) {
    FloatImage out(width, height);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) out.at(x, y) = sample_clamped(img, x * factor, y * factor);
    return out;
}

}  // namespace

Pyramid build_pyramid(const FloatImage& img, int n_levels, double scale_factor, double blur_per_scale) {
    if (n_levels < 1) throw InvalidArgument("build_pyramid: n_levels must be >= 1");
    if (!(scale_factor > 1.0)) throw InvalidArgument("build_pyramid: scale_factor must be > 1");
    Pyramid pyr;
    pyr.scale_factor = scale_factor;
    pyr.levels.reserve(n_levels);
    pyr.levels.push_back(img);
    for (int l = 1; l < n_levels; ++l) {
        const FloatImage& prev = pyr.levels.back();
        const int w = static_cast<int>(std::floor(prev.width / scale_factor));
        const int h = static_cast<int>(std::floor(prev.height / scale_factor));
        if (w < kMinPyramidSide || h < kMinPyramidSide) break;
        pyr.levels.push_back(downsample(gaussian_blur(prev, blur_per_scale * scale_factor), w, h, scale_factor));
    }
    return pyr;
}

// --- image sequences ------------------------------------------------------

std::string frame_filename(int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%06d.pgm", index);
    return buf;
}

std::vector<double> read_times(const std::filesystem::path& path) {
    std::istringstream in(read_file(path));
    std::vector<double> times;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        double t = 0.0;
        std::istringstream ls(line);
        if (!(ls >> t)) throw ParseError("times.txt line " + std::to_string(lineno) + ": not a number", lineno);
        if (!times.empty() && !(t > times.back()))
            throw ParseError("times.txt line " + std::to_string(lineno) + ": timestamps not increasing", lineno);
        times.push_back(t);
    }
    return times;
}

void write_times(const std::vector<double>& times, const std::filesystem::path& path) {
    std::string out;
    char buf[64];
    for (double t : times) {
        std::snprintf(buf, sizeof(buf), "%.6f\n", t);
        out += buf;
    }
    write_file_atomic(path, out);
}

}  // namespace bumpvo
