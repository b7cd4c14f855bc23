#include "gandetect/cooccurrence.hpp"

#include <algorithm>
#include <cstdlib>
#include <numeric>
#include <string>

#include "gandetect/errors.hpp"

namespace gandetect {

namespace {

struct PairRange {
    int x_begin, x_end, y_begin, y_end;
};

PairRange pair_range(int width, int height, Offset o) noexcept {
    return {std::max(0, -o.dx), std::min(width, width - o.dx), std::max(0, -o.dy), std::min(height, height - o.dy)};
}

std::string describe(Offset o) {
    return "(" + std::to_string(o.dx) + "," + std::to_string(o.dy) + ")";
}

// Counts pairs (a(x, y), b(x + dx, y + dy)) over the valid range. Partial
// counts live in 32-bit cells and are flushed into the 64-bit matrix before
// any cell could overflow; the flush is plain integer addition so the result
// does not depend on when it happens.
CooccurrenceMatrix accumulate(const LevelGrid& a, const LevelGrid& b, Offset o) {
    const PairRange r = pair_range(a.width(), a.height(), o);
    if (r.x_begin >= r.x_end || r.y_begin >= r.y_end) {
        throw DomainError("offset " + describe(o) + " leaves no valid pixel pair in a " +
                          std::to_string(a.width()) + "x" + std::to_string(a.height()) + " grid");
    }

    CooccurrenceMatrix result;
    std::vector<std::uint32_t> partial(CooccurrenceMatrix::kCells, 0);
    const std::uint64_t row_pairs = static_cast<std::uint64_t>(r.x_end - r.x_begin);
    const std::uint64_t flush_every =
        std::max<std::uint64_t>(1, (std::uint64_t{1} << 31) / row_pairs);

    auto flush = [&] {
        auto counts = result.counts();
        for (std::size_t k = 0; k < partial.size(); ++k) counts[k] += partial[k];
        std::fill(partial.begin(), partial.end(), 0u);
    };

    const std::ptrdiff_t sa = a.pixel_stride();
    const std::ptrdiff_t sb = b.pixel_stride();
    std::uint64_t rows_since_flush = 0;
    for (int y = r.y_begin; y < r.y_end; ++y) {
        const std::uint8_t* pa = a.row(y) + r.x_begin * sa;
        const std::uint8_t* pb = b.row(y + o.dy) + (r.x_begin + o.dx) * sb;
        for (int x = r.x_begin; x < r.x_end; ++x, pa += sa, pb += sb) {
            ++partial[(static_cast<std::size_t>(*pa) << 8) | *pb];
        }
        if (++rows_since_flush == flush_every) {
            flush();
            rows_since_flush = 0;
        }
    }
    flush();
    return result;
}

}  // namespace

std::string_view to_string(Normalization n) noexcept {
    return n == Normalization::Raw ? "raw" : "per-slice-sum";
}

Normalization parse_normalization(std::string_view text) {
    if (text == "raw") return Normalization::Raw;
    if (text == "per-slice-sum" || text == "sum") return Normalization::PerSliceSum;
    throw ConfigError("unknown normalization '" + std::string(text) + "' (expected raw or per-slice-sum)");
}

std::uint64_t CooccurrenceMatrix::total() const noexcept {
    return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

std::uint64_t valid_pair_count(int width, int height, Offset offset) noexcept {
    const PairRange r = pair_range(width, height, offset);
    if (r.x_begin >= r.x_end || r.y_begin >= r.y_end) return 0;
    return static_cast<std::uint64_t>(r.x_end - r.x_begin) * static_cast<std::uint64_t>(r.y_end - r.y_begin);
}

CooccurrenceMatrix spatial_cooccurrence(const LevelGrid& channel, Offset delta) {
    return accumulate(channel, channel, delta);
}

CooccurrenceMatrix cross_band_cooccurrence(const LevelGrid& band_a, const LevelGrid& band_b, Offset delta_cross) {
    if (band_a.width() != band_b.width() || band_a.height() != band_b.height()) {
        throw DomainError("cross-band co-occurrence needs bands of equal size, got " +
                          std::to_string(band_a.width()) + "x" + std::to_string(band_a.height()) + " and " +
                          std::to_string(band_b.width()) + "x" + std::to_string(band_b.height()));
    }
    return accumulate(band_a, band_b, delta_cross);
}

CooccurrenceTensor::CooccurrenceTensor(int channels, Normalization normalization)
    : channels_(channels), normalization_(normalization),
      values_(static_cast<std::size_t>(channels) * kSliceSize, 0.0) {
    if (channels != 3 && channels != 6) {
        throw ShapeError("co-occurrence tensor must have 3 or 6 slices, got " + std::to_string(channels));
    }
}

void CooccurrenceTensor::assign(int s, const CooccurrenceMatrix& matrix) {
    const auto counts = matrix.counts();
    auto out = slice(s);
    if (normalization_ == Normalization::Raw) {
        std::transform(counts.begin(), counts.end(), out.begin(), [](std::uint64_t c) { return static_cast<double>(c); });
        return;
    }
    const auto total = static_cast<double>(matrix.total());
    if (total == 0.0) throw DomainError("cannot normalize an empty co-occurrence slice");
    std::transform(counts.begin(), counts.end(), out.begin(),
                   [total](std::uint64_t c) { return static_cast<double>(c) / total; });
}

CooccurrenceTensor build_tensor(const ImageBuffer& image, const OffsetSpec& offsets, Normalization normalization) {
    CooccurrenceTensor tensor(6, normalization);
    const LevelGrid r = image.band(Band::R);
    const LevelGrid g = image.band(Band::G);
    const LevelGrid b = image.band(Band::B);
    tensor.assign(0, spatial_cooccurrence(r, offsets.delta));
    tensor.assign(1, spatial_cooccurrence(g, offsets.delta));
    tensor.assign(2, spatial_cooccurrence(b, offsets.delta));
    tensor.assign(3, cross_band_cooccurrence(r, g, offsets.delta_cross));
    tensor.assign(4, cross_band_cooccurrence(r, b, offsets.delta_cross));
    tensor.assign(5, cross_band_cooccurrence(g, b, offsets.delta_cross));
    return tensor;
}

CooccurrenceTensor build_conet_tensor(const ImageBuffer& image, Offset delta, Normalization normalization) {
    CooccurrenceTensor tensor(3, normalization);
    tensor.assign(0, spatial_cooccurrence(image.band(Band::R), delta));
    tensor.assign(1, spatial_cooccurrence(image.band(Band::G), delta));
    tensor.assign(2, spatial_cooccurrence(image.band(Band::B), delta));
    return tensor;
}

SparseTensor SparseTensor::from(const CooccurrenceTensor& tensor) {
    SparseTensor out;
    out.channels = tensor.channels();
    const auto values = tensor.values();
    for (std::size_t k = 0; k < values.size(); ++k) {
        if (values[k] != 0.0) {
            out.index.push_back(static_cast<std::uint32_t>(k));
            out.value.push_back(static_cast<float>(values[k]));
        }
    }
    return out;
}

void SparseTensor::densify(std::span<float> out) const {
    if (out.size() != static_cast<std::size_t>(channels) * CooccurrenceTensor::kSliceSize) {
        throw ShapeError("dense buffer size does not match sparse tensor shape");
    }
    std::fill(out.begin(), out.end(), 0.0f);
    for (std::size_t k = 0; k < index.size(); ++k) out[index[k]] = value[k];
}

}  // namespace gandetect
