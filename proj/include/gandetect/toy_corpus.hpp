#pragma once

#include <cstdint>
#include <vector>

#include "gandetect/image.hpp"

namespace gandetect {

/// Synthetic two-class corpus used by the self-test and the acceptance suite.
///
/// Label 0 images are smooth fields whose three bands are affine copies of a
/// shared luminance surface plus mild noise. Label 1 images draw every
/// sample of every band independently and uniformly.
struct ToyCorpus {
    std::vector<ImageBuffer> images;
    std::vector<int> labels;
};

ImageBuffer make_smooth_correlated_image(int side, std::uint64_t seed);
ImageBuffer make_band_independent_noise_image(int side, std::uint64_t seed);

/// `per_class` images of each class, interleaved 0, 1, 0, 1, ...
ToyCorpus make_toy_corpus(int per_class, int side, std::uint64_t seed);

}  // namespace gandetect
