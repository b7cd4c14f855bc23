#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "gandetect/image.hpp"

namespace gandetect {

/// Integer pixel displacement. `dx` moves along columns, `dy` along rows.
struct Offset {
    int dx = 0;
    int dy = 0;

    friend bool operator==(const Offset&, const Offset&) = default;
};

/// Displacement used for the intra-band slices and the one used across bands.
struct OffsetSpec {
    Offset delta{1, 1};
    Offset delta_cross{0, 0};

    friend bool operator==(const OffsetSpec&, const OffsetSpec&) = default;
};

enum class Normalization : std::uint8_t { Raw = 0, PerSliceSum = 1 };

std::string_view to_string(Normalization n) noexcept;
Normalization parse_normalization(std::string_view text);

/// 256x256 histogram of level pairs, row index = first level.
class CooccurrenceMatrix {
public:
    static constexpr int kLevels = 256;
    static constexpr std::size_t kCells = kLevels * kLevels;

    CooccurrenceMatrix() : counts_(kCells, 0) {}

    std::uint64_t operator()(int i, int j) const noexcept { return counts_[i * kLevels + j]; }
    std::uint64_t& operator()(int i, int j) noexcept { return counts_[i * kLevels + j]; }

    std::span<const std::uint64_t> counts() const noexcept { return counts_; }
    std::span<std::uint64_t> counts() noexcept { return counts_; }

    std::uint64_t total() const noexcept;

    friend bool operator==(const CooccurrenceMatrix&, const CooccurrenceMatrix&) = default;

private:
    std::vector<std::uint64_t> counts_;
};

/// Number of positions where both `(x, y)` and `(x + dx, y + dy)` fall inside a
/// width x height grid.
std::uint64_t valid_pair_count(int width, int height, Offset offset) noexcept;

/// counts(i, j) = #{(x, y) : channel(x, y) = i, channel(x + dx, y + dy) = j},
/// pairs whose displaced coordinate leaves the grid are skipped.
/// Throws DomainError when the offset leaves no valid pair.
CooccurrenceMatrix spatial_cooccurrence(const LevelGrid& channel, Offset delta);

/// counts(i, j) = #{(x, y) : band_a(x, y) = i, band_b(x + dx, y + dy) = j}.
/// Throws DomainError on dimension mismatch or when no valid pair exists.
CooccurrenceMatrix cross_band_cooccurrence(const LevelGrid& band_a, const LevelGrid& band_b, Offset delta_cross);

/// Stack of co-occurrence slices stored slice-major as doubles.
///
/// Six-slice tensors use the order R, G, B, RG, RB, GB; three-slice tensors
/// hold only the intra-band R, G, B planes.
class CooccurrenceTensor {
public:
    static constexpr int kSide = CooccurrenceMatrix::kLevels;
    static constexpr std::size_t kSliceSize = CooccurrenceMatrix::kCells;

    CooccurrenceTensor() = default;
    CooccurrenceTensor(int channels, Normalization normalization);

    int channels() const noexcept { return channels_; }
    Normalization normalization() const noexcept { return normalization_; }

    double operator()(int slice, int i, int j) const noexcept {
        return values_[static_cast<std::size_t>(slice) * kSliceSize + i * kSide + j];
    }

    std::span<const double> slice(int s) const noexcept {
        return std::span<const double>(values_).subspan(static_cast<std::size_t>(s) * kSliceSize, kSliceSize);
    }
    std::span<double> slice(int s) noexcept {
        return std::span<double>(values_).subspan(static_cast<std::size_t>(s) * kSliceSize, kSliceSize);
    }

    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }

    /// Stores a count matrix into slice `s`, dividing by its total when the
    /// tensor is normalized.
    void assign(int s, const CooccurrenceMatrix& matrix);

    friend bool operator==(const CooccurrenceTensor&, const CooccurrenceTensor&) = default;

private:
    int channels_ = 0;
    Normalization normalization_ = Normalization::PerSliceSum;
    std::vector<double> values_;
};

inline constexpr std::array<std::string_view, 6> kSliceNames = {"R", "G", "B", "RG", "RB", "GB"};

/// Six-slice tensor [R, G, B, RG, RB, GB]: intra-band slices use
/// `offsets.delta`, cross-band slices use `offsets.delta_cross`.
CooccurrenceTensor build_tensor(const ImageBuffer& image, const OffsetSpec& offsets, Normalization normalization);

/// Three-slice intra-band tensor [R, G, B].
CooccurrenceTensor build_conet_tensor(const ImageBuffer& image, Offset delta, Normalization normalization);

/// Sparse float copy of a tensor, used to keep large training sets in memory.
struct SparseTensor {
    int channels = 0;
    std::vector<std::uint32_t> index;
    std::vector<float> value;

    static SparseTensor from(const CooccurrenceTensor& tensor);
    /// Writes into a zero-filled or arbitrary buffer of channels * 65536 floats.
    void densify(std::span<float> out) const;
};

// Binary cache container, all integers and payload little-endian:
//   8-byte magic "GDCOOCT\0", u8 version, u32 rows (256), u32 cols (256),
//   u32 channels (6 or 3), u8 normalization tag, then rows*cols*channels f64
//   values in slice-major order.
inline constexpr std::array<char, 8> kTensorMagic = {'G', 'D', 'C', 'O', 'O', 'C', 'T', '\0'};
inline constexpr std::uint8_t kTensorVersion = 1;

void write_tensor(const CooccurrenceTensor& tensor, std::ostream& out);
CooccurrenceTensor read_tensor(std::istream& in);
void save_tensor(const CooccurrenceTensor& tensor, const std::filesystem::path& path);
CooccurrenceTensor load_tensor(const std::filesystem::path& path);

}  // namespace gandetect
