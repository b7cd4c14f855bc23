#include "gandetect/postprocess.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "gandetect/errors.hpp"

namespace gandetect {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

std::string number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

std::string window_label(int window) { return std::to_string(window) + "x" + std::to_string(window); }

double noise_sigma_levels(const GaussianNoise& n) {
    return n.unit == NoiseUnit::Levels ? n.sigma : n.sigma * 255.0;
}

}  // namespace

std::string kind_name(const PostProcessSpec& spec) {
    return std::visit(overloaded{
                          [](const MedianFilter&) { return std::string("median"); },
                          [](const AverageBlur&) { return std::string("avg_blur"); },
                          [](const GaussianNoise&) { return std::string("gauss_noise"); },
                          [](const GammaCorrection&) { return std::string("gamma"); },
                          [](const Clahe&) { return std::string("clahe"); },
                          [](const Resize&) { return std::string("resize"); },
                          [](const Zoom&) { return std::string("zoom"); },
                          [](const Rotate&) { return std::string("rotate"); },
                          [](const CenterCrop&) { return std::string("crop"); },
                          [](const BlurSharpen&) { return std::string("blur_sharpen"); },
                          [](const JpegCompress&) { return std::string("jpeg"); },
                      },
                      spec);
}

std::string condition_label(const PostProcessSpec& spec) {
    return std::visit(overloaded{
                          [](const MedianFilter&) { return std::string("Median filtering"); },
                          [](const AverageBlur&) { return std::string("Average blurring"); },
                          [](const GaussianNoise&) { return std::string("Noise"); },
                          [](const GammaCorrection&) { return std::string("Gamma correction"); },
                          [](const Clahe&) { return std::string("AHE"); },
                          [](const Resize&) { return std::string("Resize"); },
                          [](const Zoom&) { return std::string("Zooming"); },
                          [](const Rotate&) { return std::string("Rotation"); },
                          [](const CenterCrop&) { return std::string("Crop"); },
                          [](const BlurSharpen&) { return std::string("Blurring followed by sharpening"); },
                          [](const JpegCompress&) { return std::string("JPEG"); },
                      },
                      spec);
}

std::string parameter_label(const PostProcessSpec& spec) {
    return std::visit(overloaded{
                          [](const MedianFilter& m) { return window_label(m.window); },
                          [](const AverageBlur& a) { return window_label(a.window); },
                          [](const GaussianNoise& n) {
                              return number(n.sigma) + (n.unit == NoiseUnit::Normalized ? " (norm)" : "");
                          },
                          [](const GammaCorrection& g) { return number(g.gamma); },
                          [](const Clahe&) { return std::string("-"); },
                          [](const Resize& r) { return number(r.scale); },
                          [](const Zoom& z) { return number(z.scale); },
                          [](const Rotate& r) { return number(r.degrees); },
                          [](const CenterCrop& c) { return window_label(c.size); },
                          [](const BlurSharpen&) { return std::string("-"); },
                          [](const JpegCompress& j) { return "QF=" + std::to_string(j.quality); },
                      },
                      spec);
}

void validate(const PostProcessSpec& spec) {
    std::visit(overloaded{
                   [](const MedianFilter& m) {
                       if (m.window != 3 && m.window != 5) throw ConfigError("median window must be 3 or 5");
                   },
                   [](const AverageBlur& a) {
                       if (a.window != 3 && a.window != 5) throw ConfigError("blur window must be 3 or 5");
                   },
                   [](const GaussianNoise& n) {
                       if (!(n.sigma >= 0.0) || !std::isfinite(n.sigma)) throw ConfigError("noise sigma must be >= 0");
                   },
                   [](const GammaCorrection& g) {
                       if (!(g.gamma > 0.0) || !std::isfinite(g.gamma)) throw ConfigError("gamma must be > 0");
                   },
                   [](const Clahe& c) {
                       if (!(c.clip_limit > 0.0)) throw ConfigError("CLAHE clip limit must be > 0");
                       if (c.tile_rows < 1 || c.tile_cols < 1) throw ConfigError("CLAHE tile grid must be >= 1x1");
                   },
                   [](const Resize& r) {
                       if (!(r.scale > 0.0) || !std::isfinite(r.scale)) throw ConfigError("resize scale must be > 0");
                   },
                   [](const Zoom& z) {
                       if (!(z.scale > 0.0) || !std::isfinite(z.scale)) throw ConfigError("zoom scale must be > 0");
                   },
                   [](const Rotate& r) {
                       if (!std::isfinite(r.degrees)) throw ConfigError("rotation angle must be finite");
                   },
                   [](const CenterCrop& c) {
                       if (c.size < ImageBuffer::kMinSide) throw ConfigError("crop size must be >= 2");
                   },
                   [](const BlurSharpen&) {},
                   [](const JpegCompress& j) {
                       if (j.quality < 1 || j.quality > 100) throw ConfigError("JPEG quality must lie in [1, 100]");
                   },
               },
               spec);
}

ImageBuffer apply(const ImageBuffer& image, const PostProcessSpec& spec, std::uint64_t seed) {
    validate(spec);
    return std::visit(overloaded{
                          [&](const MedianFilter& m) { return median_filter(image, m.window); },
                          [&](const AverageBlur& a) { return average_blur(image, a.window); },
                          [&](const GaussianNoise& n) { return gaussian_noise(image, noise_sigma_levels(n), seed); },
                          [&](const GammaCorrection& g) { return gamma_correct(image, g.gamma); },
                          [&](const Clahe& c) { return clahe(image, c.clip_limit, c.tile_rows, c.tile_cols); },
                          [&](const Resize& r) { return resize_bicubic(image, r.scale); },
                          [&](const Zoom& z) { return resize_bicubic(image, z.scale); },
                          [&](const Rotate& r) { return rotate_bicubic(image, r.degrees); },
                          [&](const CenterCrop& c) { return center_crop(image, c.size); },
                          [&](const BlurSharpen&) { return blur_then_sharpen(image); },
                          [&](const JpegCompress& j) { return jpeg_roundtrip(image, j.quality, j.subsampling); },
                      },
                      spec);
}

}  // namespace gandetect
