#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "gandetect/errors.hpp"
#include "gandetect/postprocess.hpp"
#include "gandetect/random.hpp"

namespace gandetect {

namespace {

constexpr int clamp_index(int v, int hi) noexcept { return v < 0 ? 0 : (v > hi ? hi : v); }

void check_window(int window) {
    if (window != 3 && window != 5) {
        throw DomainError("filter window must be 3 or 5, got " + std::to_string(window));
    }
}

// Sum of the window x window neighbourhood with edge replication, per band.
std::vector<int> box_sums(const ImageBuffer& image, int window) {
    const int w = image.width();
    const int h = image.height();
    const int r = window / 2;
    std::vector<int> horizontal(static_cast<std::size_t>(w) * h * 3);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int b = 0; b < 3; ++b) {
                int s = 0;
                for (int k = -r; k <= r; ++k) s += image.at(clamp_index(x + k, w - 1), y, b);
                horizontal[(static_cast<std::size_t>(y) * w + x) * 3 + b] = s;
            }
        }
    }
    std::vector<int> sums(horizontal.size());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int b = 0; b < 3; ++b) {
                int s = 0;
                for (int k = -r; k <= r; ++k) {
                    s += horizontal[(static_cast<std::size_t>(clamp_index(y + k, h - 1)) * w + x) * 3 + b];
                }
                sums[(static_cast<std::size_t>(y) * w + x) * 3 + b] = s;
            }
        }
    }
    return sums;
}

}  // namespace

ImageBuffer median_filter(const ImageBuffer& image, int window) {
    check_window(window);
    const int w = image.width();
    const int h = image.height();
    const int r = window / 2;
    const int n = window * window;
    ImageBuffer out(w, h);
    std::array<std::uint8_t, 25> values{};
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int b = 0; b < 3; ++b) {
                int k = 0;
                for (int dy = -r; dy <= r; ++dy) {
                    const int sy = clamp_index(y + dy, h - 1);
                    for (int dx = -r; dx <= r; ++dx) values[k++] = image.at(clamp_index(x + dx, w - 1), sy, b);
                }
                std::nth_element(values.begin(), values.begin() + n / 2, values.begin() + n);
                out.at(x, y, b) = values[n / 2];
            }
        }
    }
    return out;
}

ImageBuffer average_blur(const ImageBuffer& image, int window) {
    check_window(window);
    const auto sums = box_sums(image, window);
    const int n = window * window;
    ImageBuffer out(image.width(), image.height());
    auto samples = out.samples();
    for (std::size_t k = 0; k < sums.size(); ++k) {
        samples[k] = static_cast<std::uint8_t>((2 * sums[k] + n) / (2 * n));
    }
    return out;
}

// Works on 3x3 box sums S (nine times the blurred value). The sharpening
// kernel has unit mass, so 9*S(c) minus the 8 neighbouring sums is nine
// times the exact output. 9 is odd, so the final division never lands on a
// rounding tie.
ImageBuffer blur_then_sharpen(const ImageBuffer& image) {
    const int w = image.width();
    const int h = image.height();
    const auto sums = box_sums(image, 3);
    auto s_at = [&](int x, int y, int b) {
        return sums[(static_cast<std::size_t>(clamp_index(y, h - 1)) * w + clamp_index(x, w - 1)) * 3 + b];
    };
    ImageBuffer out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int b = 0; b < 3; ++b) {
                long t = 0;
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        t += (dx == 0 && dy == 0 ? 9 : -1) * static_cast<long>(s_at(x + dx, y + dy, b));
                    }
                }
                out.at(x, y, b) = saturate_level(static_cast<double>(t) / 9.0);
            }
        }
    }
    return out;
}

ImageBuffer gamma_correct(const ImageBuffer& image, double gamma) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw DomainError("gamma must be positive and finite");
    std::array<std::uint8_t, 256> lut{};
    for (int v = 0; v < 256; ++v) lut[v] = saturate_level(255.0 * std::pow(v / 255.0, gamma));
    ImageBuffer out = image;
    for (auto& s : out.samples()) s = lut[s];
    return out;
}

ImageBuffer gaussian_noise(const ImageBuffer& image, double sigma_levels, std::uint64_t seed) {
    if (!(sigma_levels >= 0.0) || !std::isfinite(sigma_levels)) {
        throw DomainError("noise standard deviation must be non-negative");
    }
    ImageBuffer out = image;
    auto samples = out.samples();
    for (std::size_t k = 0; k < samples.size(); ++k) {
        samples[k] = saturate_level(static_cast<double>(samples[k]) + sigma_levels * counter_normal(seed, k));
    }
    return out;
}

ImageBuffer center_crop(const ImageBuffer& image, int size) {
    if (size < ImageBuffer::kMinSide || size > std::min(image.width(), image.height())) {
        throw DomainError("crop size " + std::to_string(size) + " does not fit a " + std::to_string(image.width()) +
                          "x" + std::to_string(image.height()) + " image");
    }
    const int x0 = (image.width() - size) / 2;
    const int y0 = (image.height() - size) / 2;
    ImageBuffer out(size, size);
    for (int y = 0; y < size; ++y) {
        const auto src = image.samples().subspan((static_cast<std::size_t>(y0 + y) * image.width() + x0) * 3,
                                                 static_cast<std::size_t>(size) * 3);
        std::copy(src.begin(), src.end(), out.samples().begin() + static_cast<std::ptrdiff_t>(y) * size * 3);
    }
    return out;
}

ImageBuffer jpeg_roundtrip(const ImageBuffer& image, int quality, ChromaSubsampling subsampling) {
    const auto bytes = encode_jpeg(image, quality, subsampling);
    return decode_image_bytes(bytes, "jpeg round-trip");
}

}  // namespace gandetect
