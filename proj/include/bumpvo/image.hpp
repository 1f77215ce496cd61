#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "bumpvo/errors.hpp"

namespace bumpvo {

/// Row-major single-channel raster.
template <typename T>
struct Image {
    int width = 0;
    int height = 0;
    std::vector<T> data;

    Image() = default;
    Image(int w, int h, T fill = T{}) : width(w), height(h), data(static_cast<size_t>(w) * h, fill) {
        if (w < 1 || h < 1) throw InvalidArgument("image dimensions must be >= 1");
    }
    Image(int w, int h, std::vector<T> pixels) : width(w), height(h), data(std::move(pixels)) {
        if (w < 1 || h < 1) throw InvalidArgument("image dimensions must be >= 1");
        if (data.size() != static_cast<size_t>(w) * h)
            throw InvalidArgument("pixel buffer size does not match dimensions");
    }

    T& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
    const T& at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }

    // clamp-to-edge read
    const T& clamped(int x, int y) const {
        x = x < 0 ? 0 : (x >= width ? width - 1 : x);
        y = y < 0 ? 0 : (y >= height ? height - 1 : y);
        return at(x, y);
    }

    bool empty() const { return data.empty(); }
    bool operator==(const Image&) const = default;
};

using GrayImage = Image<std::uint8_t>;
using FloatImage = Image<double>;

FloatImage to_float(const GrayImage& img);
/// Rounds and saturates to [0, 255].
GrayImage to_gray(const FloatImage& img);

// --- PGM ------------------------------------------------------------------

GrayImage load_pgm(const std::filesystem::path& path);
GrayImage decode_pgm(const std::string& bytes);
std::string encode_pgm(const GrayImage& img);
void save_pgm(const GrayImage& img, const std::filesystem::path& path);

// --- filtering ------------------------------------------------------------

/// Normalized 1-D Gaussian taps, radius ceil(3 sigma).
std::vector<double> gaussian_kernel(double sigma);

/// Separable Gaussian blur with clamp-to-edge borders.
FloatImage gaussian_blur(const FloatImage& img, double sigma);
FloatImage gaussian_blur(const GrayImage& img, double sigma);

/// Bilinear sample; coordinates must lie in [0, w-1] x [0, h-1].
double sample_bilinear(const FloatImage& img, double x, double y);
/// Bilinear sample that clamps coordinates into the image first.
double sample_clamped(const FloatImage& img, double x, double y);

struct Gradients {
    FloatImage gx;
    FloatImage gy;
};

/// Central differences (halved) inside, one-sided differences on the border.
Gradients gradients(const FloatImage& img);

// --- pyramid --------------------------------------------------------------

struct Pyramid {
    std::vector<FloatImage> levels;
    double scale_factor = 1.2;

    int n_levels() const { return static_cast<int>(levels.size()); }
    /// Factor mapping level-`l` coordinates to level 0.
    double scale(int level) const;
};

inline constexpr int kMinPyramidSide = 16;

/// Level 0 is `img`; each further level blurs the previous one with
/// sigma = `blur_per_scale` * scale_factor and resamples it bilinearly to
/// floor(dim / scale_factor). Stops early once a level would drop below 16x16.
Pyramid build_pyramid(const FloatImage& img, int n_levels, double scale_factor,
                      double blur_per_scale = 0.5);

/// Bilinear resize where output pixel (x, y) samples source (x * sx, y * sy).
FloatImage resize_bilinear(const FloatImage& img, int width, int height);

// --- image sequences ------------------------------------------------------

std::string frame_filename(int index);
std::vector<double> read_times(const std::filesystem::path& path);
void write_times(const std::vector<double>& times, const std::filesystem::path& path);

}  // namespace bumpvo
