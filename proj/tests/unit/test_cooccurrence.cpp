#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "gandetect/cooccurrence.hpp"
#include "gandetect/errors.hpp"
#include "oracles.hpp"

using namespace gandetect;

namespace {

std::vector<std::uint64_t> counts_of(const CooccurrenceMatrix& m) {
    return {m.counts().begin(), m.counts().end()};
}

ImageBuffer swap_bands(const ImageBuffer& img, int a, int b) {
    ImageBuffer out = img;
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) std::swap(out.at(x, y, a), out.at(x, y, b));
    return out;
}

double slice_sum(const CooccurrenceTensor& t, int s) {
    const auto v = t.slice(s);
    return std::accumulate(v.begin(), v.end(), 0.0);
}

}  // namespace

TEST(Spatial, ConstantTwoByTwo) {
    const ImageBuffer img(2, 2, 77);
    const auto m = spatial_cooccurrence(img.band(Band::R), {1, 1});
    EXPECT_EQ(m(77, 77), 1u);
    EXPECT_EQ(m.total(), 1u);
}

TEST(Spatial, FullSizeImageTotal) {
    std::mt19937_64 rng(5);
    const auto img = oracle::random_image(rng, 1024, 1024);
    const auto m = spatial_cooccurrence(img.band(Band::G), {1, 1});
    EXPECT_EQ(m.total(), 1046529u);
}

TEST(Spatial, MatchesNaiveCounting) {
    std::mt19937_64 rng(17);
    const std::array<Offset, 6> offsets = {Offset{1, 1}, Offset{1, 0}, Offset{0, 1}, Offset{-1, 2}, Offset{0, 0},
                                           Offset{3, -2}};
    for (int trial = 0; trial < 20; ++trial) {
        const auto img = oracle::random_image(rng, 8, 8);
        for (int b = 0; b < 3; ++b) {
            const auto plane = oracle::extract_band(img, b);
            for (const auto& o : offsets) {
                const auto m = spatial_cooccurrence(img.band(static_cast<Band>(b)), o);
                EXPECT_EQ(counts_of(m), oracle::naive_cooccurrence(plane, plane, o.dx, o.dy));
            }
        }
    }
}

TEST(Spatial, TotalEqualsValidPairCount) {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 50; ++trial) {
        const int w = 2 + static_cast<int>(rng() % 30);
        const int h = 2 + static_cast<int>(rng() % 30);
        const Offset o{static_cast<int>(rng() % 3) - 1, static_cast<int>(rng() % 2)};
        const auto img = oracle::random_image(rng, w, h);
        const auto m = spatial_cooccurrence(img.band(Band::B), o);
        EXPECT_EQ(m.total(), valid_pair_count(w, h, o));
        EXPECT_EQ(m.total(), static_cast<std::uint64_t>(w - std::abs(o.dx)) * (h - std::abs(o.dy)));
    }
}

TEST(Spatial, OffsetLeavingNoPairThrows) {
    const ImageBuffer img(4, 4, 1);
    EXPECT_THROW(spatial_cooccurrence(img.band(Band::R), {4, 0}), DomainError);
    EXPECT_THROW(spatial_cooccurrence(img.band(Band::R), {0, -4}), DomainError);
}

TEST(CrossBand, IdenticalBandsAreDiagonal) {
    std::mt19937_64 rng(31);
    auto img = oracle::random_image(rng, 12, 9);
    for (int y = 0; y < 9; ++y)
        for (int x = 0; x < 12; ++x) img.at(x, y, Band::G) = img.at(x, y, Band::R);
    const auto m = cross_band_cooccurrence(img.band(Band::R), img.band(Band::G), {0, 0});
    EXPECT_EQ(m.total(), 12u * 9u);
    std::uint64_t off_diagonal = 0;
    for (int i = 0; i < 256; ++i)
        for (int j = 0; j < 256; ++j) off_diagonal += i != j ? m(i, j) : 0;
    EXPECT_EQ(off_diagonal, 0u);
}

TEST(CrossBand, MatchesNaiveWithShift) {
    std::mt19937_64 rng(37);
    for (int trial = 0; trial < 20; ++trial) {
        const auto img = oracle::random_image(rng, 8, 8);
        const auto r = oracle::extract_band(img, 0);
        const auto b = oracle::extract_band(img, 2);
        const auto m = cross_band_cooccurrence(img.band(Band::R), img.band(Band::B), {1, 0});
        EXPECT_EQ(counts_of(m), oracle::naive_cooccurrence(r, b, 1, 0));
        EXPECT_EQ(m.total(), 7u * 8u);
    }
}

TEST(CrossBand, DimensionMismatchThrows) {
    const ImageBuffer a(4, 4), b(5, 4);
    EXPECT_THROW(cross_band_cooccurrence(a.band(Band::R), b.band(Band::G), {0, 0}), DomainError);
}

TEST(Tensor, ConstantImageNormalizedSlices) {
    const ImageBuffer img(4, 4, 100);
    const auto t = build_tensor(img, {}, Normalization::PerSliceSum);
    ASSERT_EQ(t.channels(), 6);
    for (int s = 0; s < 6; ++s) {
        EXPECT_DOUBLE_EQ(t(s, 100, 100), 1.0);
        EXPECT_DOUBLE_EQ(slice_sum(t, s), 1.0);
    }
}

TEST(Tensor, ConstantImageRawCounts) {
    const ImageBuffer img(4, 4, 100);
    const auto t = build_tensor(img, {}, Normalization::Raw);
    for (int s = 0; s < 3; ++s) EXPECT_DOUBLE_EQ(t(s, 100, 100), 9.0);
    for (int s = 3; s < 6; ++s) EXPECT_DOUBLE_EQ(t(s, 100, 100), 16.0);
}

TEST(Tensor, SliceCompositionMatchesOracle) {
    std::mt19937_64 rng(41);
    const auto img = oracle::random_image(rng, 16, 16);
    const OffsetSpec offsets{{1, 1}, {0, 0}};
    const auto t = build_tensor(img, offsets, Normalization::Raw);
    const std::array<std::array<int, 2>, 6> pairs = {{{0, 0}, {1, 1}, {2, 2}, {0, 1}, {0, 2}, {1, 2}}};
    for (int s = 0; s < 6; ++s) {
        const auto a = oracle::extract_band(img, pairs[s][0]);
        const auto b = oracle::extract_band(img, pairs[s][1]);
        const auto d = s < 3 ? offsets.delta : offsets.delta_cross;
        const auto expected = oracle::naive_cooccurrence(a, b, d.dx, d.dy);
        for (std::size_t k = 0; k < expected.size(); ++k)
            ASSERT_DOUBLE_EQ(t.slice(s)[k], static_cast<double>(expected[k])) << "slice " << kSliceNames[s];
    }
}

TEST(Tensor, NormalizedSlicesSumToOne) {
    std::mt19937_64 rng(43);
    for (int trial = 0; trial < 10; ++trial) {
        const auto img = oracle::random_image(rng, 3 + static_cast<int>(rng() % 20), 3 + static_cast<int>(rng() % 20));
        const auto t = build_tensor(img, {}, Normalization::PerSliceSum);
        for (int s = 0; s < 6; ++s) EXPECT_NEAR(slice_sum(t, s), 1.0, 1e-12);
    }
}

TEST(Tensor, ConetIsIntraBandPrefix) {
    std::mt19937_64 rng(47);
    const auto img = oracle::random_image(rng, 20, 14);
    const auto full = build_tensor(img, {}, Normalization::PerSliceSum);
    const auto conet = build_conet_tensor(img, {1, 1}, Normalization::PerSliceSum);
    ASSERT_EQ(conet.channels(), 3);
    for (int s = 0; s < 3; ++s) {
        const auto a = full.slice(s);
        const auto b = conet.slice(s);
        EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin()));
    }
}

TEST(Tensor, SwappingRAndGPermutesSlices) {
    std::mt19937_64 rng(53);
    const auto img = oracle::random_image(rng, 10, 10);
    const auto t = build_tensor(img, {}, Normalization::Raw);
    const auto u = build_tensor(swap_bands(img, 0, 1), {}, Normalization::Raw);
    auto same = [](std::span<const double> a, std::span<const double> b) { return std::equal(a.begin(), a.end(), b.begin()); };
    EXPECT_TRUE(same(u.slice(0), t.slice(1)));
    EXPECT_TRUE(same(u.slice(1), t.slice(0)));
    EXPECT_TRUE(same(u.slice(2), t.slice(2)));
    EXPECT_TRUE(same(u.slice(4), t.slice(5)));  // GB becomes RB
    // RG becomes GR, the transpose.
    for (int i = 0; i < 256; ++i)
        for (int j = 0; j < 256; ++j) ASSERT_EQ(u(3, i, j), t(3, j, i));
}

TEST(Tensor, PixelPermutationChangesSpatialButNotCrossCounts) {
    std::mt19937_64 rng(59);
    const auto img = oracle::random_image(rng, 16, 16);
    ImageBuffer shuffled = img;
    std::vector<int> order(16 * 16);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    for (int k = 0; k < 256; ++k)
        for (int b = 0; b < 3; ++b) shuffled.at(k % 16, k / 16, b) = img.at(order[k] % 16, order[k] / 16, b);
    const auto t = build_tensor(img, {}, Normalization::Raw);
    const auto u = build_tensor(shuffled, {}, Normalization::Raw);
    for (int s = 3; s < 6; ++s) {
        const auto a = t.slice(s);
        EXPECT_TRUE(std::equal(a.begin(), a.end(), u.slice(s).begin()));
    }
    const auto a = t.slice(0);
    EXPECT_FALSE(std::equal(a.begin(), a.end(), u.slice(0).begin()));
}

TEST(Tensor, SparseDensifyRoundTrip) {
    std::mt19937_64 rng(61);
    const auto t = build_tensor(oracle::random_image(rng, 9, 11), {}, Normalization::PerSliceSum);
    const auto sparse = SparseTensor::from(t);
    std::vector<float> dense(6 * CooccurrenceTensor::kSliceSize, -1.0f);
    sparse.densify(dense);
    for (std::size_t k = 0; k < dense.size(); ++k) ASSERT_EQ(dense[k], static_cast<float>(t.values()[k]));
    std::vector<float> wrong(10);
    EXPECT_THROW(sparse.densify(wrong), ShapeError);
}

TEST(TensorIo, RoundTripIsExact) {
    std::mt19937_64 rng(67);
    for (auto norm : {Normalization::Raw, Normalization::PerSliceSum}) {
        const auto t = build_tensor(oracle::random_image(rng, 13, 7), {{1, 0}, {0, 1}}, norm);
        std::stringstream ss;
        write_tensor(t, ss);
        EXPECT_EQ(read_tensor(ss), t);
    }
    const auto c = build_conet_tensor(oracle::random_image(rng, 5, 5), {1, 1}, Normalization::Raw);
    std::stringstream ss;
    write_tensor(c, ss);
    EXPECT_EQ(read_tensor(ss), c);
}

TEST(TensorIo, RejectsBadMagicAndTruncation) {
    const auto t = build_tensor(ImageBuffer(4, 4, 3), {}, Normalization::Raw);
    std::stringstream ss;
    write_tensor(t, ss);
    const auto bytes = ss.str();

    auto bad = bytes;
    bad[0] = 'X';
    std::istringstream bad_in(bad);
    EXPECT_THROW(read_tensor(bad_in), CheckpointError);

    std::istringstream short_in(bytes.substr(0, bytes.size() - 100));
    EXPECT_THROW(read_tensor(short_in), CheckpointError);
}

TEST(Normalization, NamesRoundTrip) {
    for (auto n : {Normalization::Raw, Normalization::PerSliceSum}) EXPECT_EQ(parse_normalization(to_string(n)), n);
    EXPECT_THROW(parse_normalization("softmax"), ConfigError);
}
