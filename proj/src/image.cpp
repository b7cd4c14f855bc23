#include "gandetect/image.hpp"

#include <cmath>
#include <string>

#include "gandetect/errors.hpp"

namespace gandetect {

namespace {

void check_dims(int width, int height) {
    if (width < ImageBuffer::kMinSide || height < ImageBuffer::kMinSide) {
        throw DomainError("image must be at least 2x2, got " + std::to_string(width) + "x" +
                          std::to_string(height));
    }
}

}  // namespace

LevelGrid::LevelGrid(std::span<const std::uint8_t> levels, int width, int height)
    : data_(levels.data()), width_(width), height_(height), pixel_stride_(1), row_stride_(width) {
    if (width < 0 || height < 0 ||
        levels.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        throw DomainError("level grid size does not match its dimensions");
    }
}

ImageBuffer::ImageBuffer(int width, int height, std::uint8_t fill) : width_(width), height_(height) {
    check_dims(width, height);
    samples_.assign(static_cast<std::size_t>(width) * height * kBands, fill);
}

ImageBuffer::ImageBuffer(int width, int height, std::vector<std::uint8_t> samples)
    : width_(width), height_(height), samples_(std::move(samples)) {
    check_dims(width, height);
    if (samples_.size() != static_cast<std::size_t>(width) * height * kBands) {
        throw DomainError("sample buffer holds " + std::to_string(samples_.size()) +
                          " bytes, expected " +
                          std::to_string(static_cast<std::size_t>(width) * height * kBands));
    }
}

LevelGrid ImageBuffer::band(Band b) const noexcept {
    return LevelGrid(samples_.data() + static_cast<int>(b), width_, height_, kBands,
                     static_cast<std::ptrdiff_t>(width_) * kBands);
}

std::uint8_t saturate_level(double value) noexcept {
    if (!(value > 0.0)) return 0;  // also maps NaN to 0
    if (value >= 255.0) return 255;
    return static_cast<std::uint8_t>(std::lround(value));
}

}  // namespace gandetect
