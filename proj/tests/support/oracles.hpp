#pragma once

// Straightforward reference implementations used only by the test suites and
// the `selftest` verb. They deliberately share no code with the library
// paths they check.

#include <cstdint>
#include <random>
#include <vector>

#include "gandetect/image.hpp"

namespace gandetect::oracle {

/// Dense row-major level grid owned by the oracle code.
struct Plane {
    int width = 0;
    int height = 0;
    std::vector<int> levels;

    int at(int x, int y) const { return levels[static_cast<std::size_t>(y) * width + x]; }
};

Plane extract_band(const ImageBuffer& image, int band);

/// 256*256 counts, row-major in (i, j), via a double loop over every (x, y).
std::vector<std::uint64_t> naive_cooccurrence(const Plane& a, const Plane& b, int dx, int dy);

ImageBuffer random_image(std::mt19937_64& rng, int width, int height);

/// 2-D correlation with edge replication, result kept in double.
std::vector<double> naive_correlate(const std::vector<double>& plane, int width, int height,
                                    const std::vector<double>& kernel, int ksize);

/// Blur 3x3 box then sharpen with the 9/-1 kernel, rounded and clamped once.
ImageBuffer naive_blur_sharpen(const ImageBuffer& image);

/// Sort-based median with edge replication.
ImageBuffer naive_median(const ImageBuffer& image, int window);

/// Scalar CLAHE: per-tile clipped histogram, uniform redistribution of the
/// excess, CDF mapping and bilinear interpolation between tile centres.
ImageBuffer naive_clahe(const ImageBuffer& image, double clip_limit, int tile_rows, int tile_cols);

double psnr(const ImageBuffer& a, const ImageBuffer& b);

}  // namespace gandetect::oracle
