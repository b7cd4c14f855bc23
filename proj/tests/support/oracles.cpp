#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gandetect::oracle {

namespace {

int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

std::uint8_t to_level(double v) {
    double r = std::floor(v + 0.5);  // values here are never negative half-integers
    if (r < 0) r = 0;
    if (r > 255) r = 255;
    return static_cast<std::uint8_t>(r);
}

}  // namespace

Plane extract_band(const ImageBuffer& image, int band) {
    Plane p{image.width(), image.height(), {}};
    p.levels.resize(static_cast<std::size_t>(p.width) * p.height);
    for (int y = 0; y < p.height; ++y) {
        for (int x = 0; x < p.width; ++x) {
            p.levels[static_cast<std::size_t>(y) * p.width + x] = image.at(x, y, band);
        }
    }
    return p;
}

std::vector<std::uint64_t> naive_cooccurrence(const Plane& a, const Plane& b, int dx, int dy) {
    std::vector<std::uint64_t> counts(256 * 256, 0);
    for (int y = 0; y < a.height; ++y) {
        for (int x = 0; x < a.width; ++x) {
            const int x2 = x + dx;
            const int y2 = y + dy;
            if (x2 < 0 || x2 >= b.width || y2 < 0 || y2 >= b.height) continue;
            counts[static_cast<std::size_t>(a.at(x, y)) * 256 + b.at(x2, y2)] += 1;
        }
    }
    return counts;
}

ImageBuffer random_image(std::mt19937_64& rng, int width, int height) {
    ImageBuffer img(width, height);
    for (auto& s : img.samples()) s = static_cast<std::uint8_t>(rng() & 0xFF);
    return img;
}

std::vector<double> naive_correlate(const std::vector<double>& plane, int width, int height,
                                    const std::vector<double>& kernel, int ksize) {
    const int r = ksize / 2;
    std::vector<double> out(plane.size(), 0.0);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            double acc = 0.0;
            for (int ky = 0; ky < ksize; ++ky) {
                for (int kx = 0; kx < ksize; ++kx) {
                    const int sx = clampi(x + kx - r, 0, width - 1);
                    const int sy = clampi(y + ky - r, 0, height - 1);
                    acc += kernel[ky * ksize + kx] * plane[static_cast<std::size_t>(sy) * width + sx];
                }
            }
            out[static_cast<std::size_t>(y) * width + x] = acc;
        }
    }
    return out;
}

ImageBuffer naive_blur_sharpen(const ImageBuffer& image) {
    const int w = image.width();
    const int h = image.height();
    const std::vector<double> box(9, 1.0 / 9.0);
    const std::vector<double> sharpen = {-1, -1, -1, -1, 9, -1, -1, -1, -1};
    ImageBuffer out(w, h);
    for (int band = 0; band < 3; ++band) {
        std::vector<double> plane(static_cast<std::size_t>(w) * h);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) plane[static_cast<std::size_t>(y) * w + x] = image.at(x, y, band);
        const auto blurred = naive_correlate(plane, w, h, box, 3);
        const auto sharp = naive_correlate(blurred, w, h, sharpen, 3);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) out.at(x, y, band) = to_level(sharp[static_cast<std::size_t>(y) * w + x]);
    }
    return out;
}

ImageBuffer naive_median(const ImageBuffer& image, int window) {
    const int w = image.width();
    const int h = image.height();
    const int r = window / 2;
    ImageBuffer out(w, h);
    std::vector<int> values;
    for (int band = 0; band < 3; ++band) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                values.clear();
                for (int ky = -r; ky <= r; ++ky)
                    for (int kx = -r; kx <= r; ++kx)
                        values.push_back(image.at(clampi(x + kx, 0, w - 1), clampi(y + ky, 0, h - 1), band));
                std::sort(values.begin(), values.end());
                out.at(x, y, band) = static_cast<std::uint8_t>(values[values.size() / 2]);
            }
        }
    }
    return out;
}

ImageBuffer naive_clahe(const ImageBuffer& image, double clip_limit, int tile_rows, int tile_cols) {
    const int w = image.width();
    const int h = image.height();
    ImageBuffer out(w, h);

    for (int band = 0; band < 3; ++band) {
        // lut[tile][level]
        std::vector<std::vector<int>> luts(static_cast<std::size_t>(tile_rows) * tile_cols);
        for (int tr = 0; tr < tile_rows; ++tr) {
            for (int tc = 0; tc < tile_cols; ++tc) {
                const int y0 = tr * h / tile_rows;
                const int y1 = (tr + 1) * h / tile_rows;
                const int x0 = tc * w / tile_cols;
                const int x1 = (tc + 1) * w / tile_cols;
                const long area = static_cast<long>(y1 - y0) * (x1 - x0);

                std::vector<long> hist(256, 0);
                for (int y = y0; y < y1; ++y)
                    for (int x = x0; x < x1; ++x) hist[image.at(x, y, band)] += 1;

                const long clip = std::max<long>(1, static_cast<long>(clip_limit * area / 256.0));
                long excess = 0;
                for (auto& v : hist) {
                    if (v > clip) {
                        excess += v - clip;
                        v = clip;
                    }
                }
                const long each = excess / 256;
                const long residual = excess % 256;
                for (auto& v : hist) v += each;
                if (residual > 0) {
                    const long step = std::max<long>(256 / residual, 1);
                    long given = 0;
                    for (long level = 0; level < 256 && given < residual; level += step, ++given) hist[level] += 1;
                }

                auto& lut = luts[static_cast<std::size_t>(tr) * tile_cols + tc];
                lut.resize(256);
                long cdf = 0;
                for (int level = 0; level < 256; ++level) {
                    cdf += hist[level];
                    lut[level] = to_level(static_cast<double>(cdf) * 255.0 / static_cast<double>(area));
                }
            }
        }

        for (int y = 0; y < h; ++y) {
            const double gy = (y + 0.5) * tile_rows / h - 0.5;
            const int fy = static_cast<int>(std::floor(gy));
            const double wy = gy - fy;
            const int r0 = clampi(fy, 0, tile_rows - 1);
            const int r1 = clampi(fy + 1, 0, tile_rows - 1);
            for (int x = 0; x < w; ++x) {
                const double gx = (x + 0.5) * tile_cols / w - 0.5;
                const int fx = static_cast<int>(std::floor(gx));
                const double wx = gx - fx;
                const int c0 = clampi(fx, 0, tile_cols - 1);
                const int c1 = clampi(fx + 1, 0, tile_cols - 1);
                const int v = image.at(x, y, band);
                const double top = (1.0 - wx) * luts[r0 * tile_cols + c0][v] + wx * luts[r0 * tile_cols + c1][v];
                const double bottom = (1.0 - wx) * luts[r1 * tile_cols + c0][v] + wx * luts[r1 * tile_cols + c1][v];
                out.at(x, y, band) = to_level((1.0 - wy) * top + wy * bottom);
            }
        }
    }
    return out;
}

double psnr(const ImageBuffer& a, const ImageBuffer& b) {
    double se = 0.0;
    const auto sa = a.samples();
    const auto sb = b.samples();
    for (std::size_t i = 0; i < sa.size(); ++i) {
        const double d = static_cast<double>(sa[i]) - sb[i];
        se += d * d;
    }
    if (se == 0.0) return std::numeric_limits<double>::infinity();
    const double mse = se / static_cast<double>(sa.size());
    return 10.0 * std::log10(255.0 * 255.0 / mse);
}

}  // namespace gandetect::oracle
