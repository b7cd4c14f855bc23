#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "gandetect/errors.hpp"
#include "gandetect/postprocess.hpp"

namespace gandetect {

namespace {

using Lut = std::array<std::uint8_t, 256>;

// Tile t along an axis of `size` pixels split into `tiles` parts covers
// [t * size / tiles, (t + 1) * size / tiles).
int tile_edge(int t, int size, int tiles) { return t * size / tiles; }

Lut tile_mapping(const ImageBuffer& image, int band, int x0, int x1, int y0, int y1, double clip_limit) {
    const long area = static_cast<long>(x1 - x0) * (y1 - y0);
    std::array<long, 256> hist{};
    for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) ++hist[image.at(x, y, band)];
    }

    const long clip = std::max<long>(1, static_cast<long>(clip_limit * area / 256.0));
    long excess = 0;
    for (auto& v : hist) {
        if (v > clip) {
            excess += v - clip;
            v = clip;
        }
    }
    // Clipped mass goes back uniformly; the remainder is spread with a fixed stride.
    const long each = excess / 256;
    const long residual = excess % 256;
    for (auto& v : hist) v += each;
    if (residual > 0) {
        const long step = std::max<long>(256 / residual, 1);
        for (long level = 0, given = 0; level < 256 && given < residual; level += step, ++given) ++hist[level];
    }

    Lut lut{};
    long cdf = 0;
    for (int level = 0; level < 256; ++level) {
        cdf += hist[level];
        lut[level] = saturate_level(static_cast<double>(cdf) * 255.0 / static_cast<double>(area));
    }
    return lut;
}

struct Interp {
    int lo;
    int hi;
    double weight;
};

// Bilinear weights between the centres of neighbouring tiles along one axis.
std::vector<Interp> axis_interp(int size, int tiles) {
    std::vector<Interp> out(size);
    for (int p = 0; p < size; ++p) {
        const double g = (p + 0.5) * tiles / size - 0.5;
        const int f = static_cast<int>(std::floor(g));
        out[p] = {std::clamp(f, 0, tiles - 1), std::clamp(f + 1, 0, tiles - 1), g - f};
    }
    return out;
}

}  // namespace

ImageBuffer clahe(const ImageBuffer& image, double clip_limit, int tile_rows, int tile_cols) {
    if (!(clip_limit > 0.0) || !std::isfinite(clip_limit)) throw DomainError("CLAHE clip limit must be positive");
    if (tile_rows < 1 || tile_cols < 1) throw DomainError("CLAHE tile grid must be at least 1x1");
    const int w = image.width();
    const int h = image.height();
    // Grids finer than the image collapse to one tile per pixel row/column.
    tile_rows = std::min(tile_rows, h);
    tile_cols = std::min(tile_cols, w);

    const auto row_interp = axis_interp(h, tile_rows);
    const auto col_interp = axis_interp(w, tile_cols);
    std::vector<Lut> luts(static_cast<std::size_t>(tile_rows) * tile_cols);

    ImageBuffer out(w, h);
    for (int band = 0; band < 3; ++band) {
        for (int tr = 0; tr < tile_rows; ++tr) {
            for (int tc = 0; tc < tile_cols; ++tc) {
                luts[static_cast<std::size_t>(tr) * tile_cols + tc] =
                    tile_mapping(image, band, tile_edge(tc, w, tile_cols), tile_edge(tc + 1, w, tile_cols),
                                 tile_edge(tr, h, tile_rows), tile_edge(tr + 1, h, tile_rows), clip_limit);
            }
        }
        for (int y = 0; y < h; ++y) {
            const Interp& ry = row_interp[y];
            const Lut* top_row = &luts[static_cast<std::size_t>(ry.lo) * tile_cols];
            const Lut* bottom_row = &luts[static_cast<std::size_t>(ry.hi) * tile_cols];
            for (int x = 0; x < w; ++x) {
                const Interp& cx = col_interp[x];
                const int v = image.at(x, y, band);
                const double top = (1.0 - cx.weight) * top_row[cx.lo][v] + cx.weight * top_row[cx.hi][v];
                const double bottom = (1.0 - cx.weight) * bottom_row[cx.lo][v] + cx.weight * bottom_row[cx.hi][v];
                out.at(x, y, band) = saturate_level((1.0 - ry.weight) * top + ry.weight * bottom);
            }
        }
    }
    return out;
}

}  // namespace gandetect
