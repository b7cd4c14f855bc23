#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace gandetect {

enum class Band : int { R = 0, G = 1, B = 2 };

/// Non-owning view of one 8-bit band laid out with arbitrary pixel and row strides.
///
/// Coordinates follow the usual raster convention: `x` is the column in
/// [0, width), `y` the row in [0, height).
class LevelGrid {
public:
    LevelGrid() = default;
    LevelGrid(const std::uint8_t* data, int width, int height, std::ptrdiff_t pixel_stride,
              std::ptrdiff_t row_stride)
        : data_(data), width_(width), height_(height), pixel_stride_(pixel_stride),
          row_stride_(row_stride) {}

    /// Dense single-band grid, row-major.
    LevelGrid(std::span<const std::uint8_t> levels, int width, int height);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }

    std::uint8_t operator()(int x, int y) const noexcept {
        return data_[y * row_stride_ + x * pixel_stride_];
    }

    const std::uint8_t* row(int y) const noexcept { return data_ + y * row_stride_; }
    std::ptrdiff_t pixel_stride() const noexcept { return pixel_stride_; }

private:
    const std::uint8_t* data_ = nullptr;
    int width_ = 0;
    int height_ = 0;
    std::ptrdiff_t pixel_stride_ = 1;
    std::ptrdiff_t row_stride_ = 0;
};

/// Decoded 8-bit RGB raster with interleaved samples (R, G, B per pixel).
///
/// Invariants enforced on construction: width >= 2, height >= 2, and the
/// sample buffer holds exactly width * height * 3 bytes.
class ImageBuffer {
public:
    static constexpr int kBands = 3;
    static constexpr int kMinSide = 2;

    ImageBuffer() = default;
    ImageBuffer(int width, int height, std::uint8_t fill = 0);
    ImageBuffer(int width, int height, std::vector<std::uint8_t> samples);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    bool empty() const noexcept { return samples_.empty(); }

    std::uint8_t at(int x, int y, Band band) const noexcept {
        return samples_[index(x, y) + static_cast<int>(band)];
    }
    std::uint8_t& at(int x, int y, Band band) noexcept {
        return samples_[index(x, y) + static_cast<int>(band)];
    }
    std::uint8_t at(int x, int y, int band) const noexcept { return samples_[index(x, y) + band]; }
    std::uint8_t& at(int x, int y, int band) noexcept { return samples_[index(x, y) + band]; }

    LevelGrid band(Band b) const noexcept;

    std::span<const std::uint8_t> samples() const noexcept { return samples_; }
    std::span<std::uint8_t> samples() noexcept { return samples_; }

    friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;

private:
    std::size_t index(int x, int y) const noexcept {
        return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
                static_cast<std::size_t>(x)) * kBands;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> samples_;
};

/// Round half away from zero and clamp to the 8-bit range.
std::uint8_t saturate_level(double value) noexcept;

}  // namespace gandetect
