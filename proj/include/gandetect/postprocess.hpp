#pragma once

#include <cstdint>
#include <string>
#include <variant>

#include "gandetect/codec.hpp"
#include "gandetect/image.hpp"

namespace gandetect {

// Parameter records, one per post-processing kind. Every operation returns a
// fresh 8-bit RGB image; intermediate arithmetic is done in wider types and
// rounded to nearest (ties away from zero) and clamped once at the end.

struct MedianFilter {
    int window = 3;
};

struct AverageBlur {
    int window = 3;
};

enum class NoiseUnit { Levels, Normalized };

/// Zero-mean additive noise. `sigma` is in 0-255 level units unless `unit`
/// says it is a fraction of full scale.
struct GaussianNoise {
    double sigma = 0.0;
    NoiseUnit unit = NoiseUnit::Levels;
};

struct GammaCorrection {
    double gamma = 1.0;
};

struct Clahe {
    double clip_limit = 1.0;
    int tile_rows = 8;
    int tile_cols = 8;
};

/// Bicubic down-scaling; output side = round(scale * side).
struct Resize {
    double scale = 1.0;
};

/// Bicubic up-scaling; the full rescaled image is returned.
struct Zoom {
    double scale = 1.0;
};

/// Counter-clockwise rotation about the image centre, canvas size preserved.
struct Rotate {
    double degrees = 0.0;
};

struct CenterCrop {
    int size = 880;
};

struct BlurSharpen {};

struct JpegCompress {
    int quality = 95;
    ChromaSubsampling subsampling = ChromaSubsampling::k420;
};

using PostProcessSpec = std::variant<MedianFilter, AverageBlur, GaussianNoise, GammaCorrection, Clahe, Resize,
                                     Zoom, Rotate, CenterCrop, BlurSharpen, JpegCompress>;

/// Short machine name: median, avg_blur, gauss_noise, gamma, clahe, resize,
/// zoom, rotate, crop, blur_sharpen, jpeg.
std::string kind_name(const PostProcessSpec& spec);

/// Human-readable row label and parameter cell for result tables.
std::string condition_label(const PostProcessSpec& spec);
std::string parameter_label(const PostProcessSpec& spec);

/// Static parameter checks; throws ConfigError.
void validate(const PostProcessSpec& spec);

/// Applies one operation. `seed` feeds the randomized kinds only.
ImageBuffer apply(const ImageBuffer& image, const PostProcessSpec& spec, std::uint64_t seed = 0);

ImageBuffer median_filter(const ImageBuffer& image, int window);
ImageBuffer average_blur(const ImageBuffer& image, int window);
ImageBuffer gaussian_noise(const ImageBuffer& image, double sigma_levels, std::uint64_t seed);
ImageBuffer gamma_correct(const ImageBuffer& image, double gamma);
ImageBuffer clahe(const ImageBuffer& image, double clip_limit, int tile_rows = 8, int tile_cols = 8);
ImageBuffer resize_bicubic(const ImageBuffer& image, double scale);
ImageBuffer resize_bicubic(const ImageBuffer& image, int width, int height);
ImageBuffer rotate_bicubic(const ImageBuffer& image, double degrees);
ImageBuffer center_crop(const ImageBuffer& image, int size);
ImageBuffer blur_then_sharpen(const ImageBuffer& image);
ImageBuffer jpeg_roundtrip(const ImageBuffer& image, int quality,
                           ChromaSubsampling subsampling = ChromaSubsampling::k420);

/// Cubic convolution kernel with a = -0.5.
double cubic_weight(double t) noexcept;

}  // namespace gandetect
