#include "gandetect/toy_corpus.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "gandetect/random.hpp"

namespace gandetect {

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * uniform_unit(rng()); }

}  // namespace

ImageBuffer make_smooth_correlated_image(int side, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const double fx = uniform(rng, 0.5, 2.0) * 2.0 * std::numbers::pi / side;
    const double fy = uniform(rng, 0.5, 2.0) * 2.0 * std::numbers::pi / side;
    const double phase_x = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    const double phase_y = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    const double amplitude = uniform(rng, 30.0, 70.0);
    const double base = uniform(rng, 90.0, 160.0);
    const double slope = uniform(rng, -0.5, 0.5);
    const double gains[3] = {uniform(rng, 0.9, 1.1), 1.0, uniform(rng, 0.8, 1.0)};
    const double shifts[3] = {uniform(rng, 0.0, 20.0), 0.0, uniform(rng, -20.0, 0.0)};
    const std::uint64_t noise_seed = rng();

    ImageBuffer img(side, side);
    std::uint64_t counter = 0;
    for (int y = 0; y < side; ++y) {
        for (int x = 0; x < side; ++x) {
            const double luminance =
                base + amplitude * std::sin(fx * x + phase_x) * std::cos(fy * y + phase_y) + slope * (x - y);
            for (int b = 0; b < 3; ++b) {
                const double v = gains[b] * luminance + shifts[b] + 1.5 * counter_normal(noise_seed, counter++);
                img.at(x, y, b) = saturate_level(v);
            }
        }
    }
    return img;
}

ImageBuffer make_band_independent_noise_image(int side, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    ImageBuffer img(side, side);
    for (auto& s : img.samples()) s = static_cast<std::uint8_t>(rng() >> 56);
    return img;
}

ToyCorpus make_toy_corpus(int per_class, int side, std::uint64_t seed) {
    ToyCorpus corpus;
    corpus.images.reserve(static_cast<std::size_t>(2 * per_class));
    for (int k = 0; k < per_class; ++k) {
        corpus.images.push_back(make_smooth_correlated_image(side, derive_seed(seed, 2 * static_cast<std::uint64_t>(k))));
        corpus.labels.push_back(0);
        corpus.images.push_back(
            make_band_independent_noise_image(side, derive_seed(seed, 2 * static_cast<std::uint64_t>(k) + 1)));
        corpus.labels.push_back(1);
    }
    return corpus;
}

}  // namespace gandetect
