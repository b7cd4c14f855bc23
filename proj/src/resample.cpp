#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "gandetect/errors.hpp"
#include "gandetect/postprocess.hpp"

namespace gandetect {

namespace {

constexpr double kCubicA = -0.5;

constexpr int clamp_index(int v, int hi) noexcept { return v < 0 ? 0 : (v > hi ? hi : v); }

struct Taps {
    std::array<int, 4> index;
    std::array<double, 4> weight;
};

// Four-tap cubic stencil around a source coordinate, replicating edges.
Taps taps_at(double coord, int size) {
    const double base = std::floor(coord);
    const double frac = coord - base;
    const int i0 = static_cast<int>(base);
    Taps t{};
    for (int k = 0; k < 4; ++k) {
        t.index[k] = clamp_index(i0 - 1 + k, size - 1);
        t.weight[k] = cubic_weight(frac - (k - 1));
    }
    return t;
}

// Pixel-centre aligned mapping from destination to source coordinates.
std::vector<Taps> axis_taps(int src_size, int dst_size) {
    const double ratio = static_cast<double>(src_size) / dst_size;
    std::vector<Taps> taps(dst_size);
    for (int d = 0; d < dst_size; ++d) taps[d] = taps_at((d + 0.5) * ratio - 0.5, src_size);
    return taps;
}

}  // namespace

double cubic_weight(double t) noexcept {
    const double a = kCubicA;
    t = std::abs(t);
    if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
    if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
    return 0.0;
}

ImageBuffer resize_bicubic(const ImageBuffer& image, int width, int height) {
    if (width < ImageBuffer::kMinSide || height < ImageBuffer::kMinSide) {
        throw DomainError("resize target " + std::to_string(width) + "x" + std::to_string(height) +
                          " is smaller than 2x2");
    }
    const int sw = image.width();
    const int sh = image.height();
    const auto xt = axis_taps(sw, width);
    const auto yt = axis_taps(sh, height);

    // Horizontal pass into a sh x width x 3 buffer, then vertical.
    std::vector<double> rows(static_cast<std::size_t>(sh) * width * 3);
    for (int y = 0; y < sh; ++y) {
        for (int x = 0; x < width; ++x) {
            const Taps& t = xt[x];
            for (int b = 0; b < 3; ++b) {
                double acc = 0.0;
                for (int k = 0; k < 4; ++k) acc += t.weight[k] * image.at(t.index[k], y, b);
                rows[(static_cast<std::size_t>(y) * width + x) * 3 + b] = acc;
            }
        }
    }
    ImageBuffer out(width, height);
    for (int y = 0; y < height; ++y) {
        const Taps& t = yt[y];
        for (int x = 0; x < width; ++x) {
            for (int b = 0; b < 3; ++b) {
                double acc = 0.0;
                for (int k = 0; k < 4; ++k) acc += t.weight[k] * rows[(static_cast<std::size_t>(t.index[k]) * width + x) * 3 + b];
                out.at(x, y, b) = saturate_level(acc);
            }
        }
    }
    return out;
}

ImageBuffer resize_bicubic(const ImageBuffer& image, double scale) {
    if (!(scale > 0.0) || !std::isfinite(scale)) throw DomainError("scale factor must be positive");
    const auto width = static_cast<int>(std::lround(scale * image.width()));
    const auto height = static_cast<int>(std::lround(scale * image.height()));
    return resize_bicubic(image, width, height);
}

ImageBuffer rotate_bicubic(const ImageBuffer& image, double degrees) {
    if (!std::isfinite(degrees)) throw DomainError("rotation angle must be finite");
    const int w = image.width();
    const int h = image.height();
    const double theta = degrees * std::numbers::pi / 180.0;
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    const double cx = (w - 1) / 2.0;
    const double cy = (h - 1) / 2.0;
    constexpr double kEdgeTolerance = 1e-9;

    ImageBuffer out(w, h, 0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double dx = x - cx;
            const double dy = y - cy;
            const double sx = c * dx - s * dy + cx;
            const double sy = s * dx + c * dy + cy;
            if (sx < -kEdgeTolerance || sx > w - 1 + kEdgeTolerance || sy < -kEdgeTolerance ||
                sy > h - 1 + kEdgeTolerance) {
                continue;
            }
            const Taps tx = taps_at(sx, w);
            const Taps ty = taps_at(sy, h);
            for (int b = 0; b < 3; ++b) {
                double acc = 0.0;
                for (int j = 0; j < 4; ++j) {
                    double row = 0.0;
                    for (int i = 0; i < 4; ++i) row += tx.weight[i] * image.at(tx.index[i], ty.index[j], b);
                    acc += ty.weight[j] * row;
                }
                out.at(x, y, b) = saturate_level(acc);
            }
        }
    }
    return out;
}

}  // namespace gandetect
