#include <cmath>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "sapsim/hilbert.hpp"
#include "sapsim/random.hpp"

namespace sapsim {
namespace {

using Block = std::array<std::uint32_t, 4>;

// Known-answer vectors published with the reference Philox implementation.
TEST(Philox, KnownAnswerZero) {
    EXPECT_EQ(philox4x32({0, 0, 0, 0}, {0, 0}),
              (Block{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
}

TEST(Philox, KnownAnswerAllOnes) {
    EXPECT_EQ(philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                         {0xffffffffu, 0xffffffffu}),
              (Block{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
}

TEST(Philox, KnownAnswerPiDigits) {
    EXPECT_EQ(philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                         {0xa4093822u, 0x299f31d0u}),
              (Block{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

std::vector<double> draw(StreamKey key, std::size_t count) {
    NormalStream s(key);
    std::vector<double> out(count);
    s.fill(out);
    return out;
}

TEST(NormalStream, SameKeySameSequence) {
    const StreamKey key{42, 7, 3, StreamPurpose::wiener};
    EXPECT_EQ(draw(key, 101), draw(key, 101));
}

TEST(NormalStream, EveryKeyFieldSeparatesStreams) {
    const StreamKey base{42, 7, 3, StreamPurpose::wiener};
    const auto ref = draw(base, 8);
    StreamKey k = base;
    k.seed = 43;
    EXPECT_NE(draw(k, 8), ref);
    k = base;
    k.seed = base.seed | (1ull << 40);
    EXPECT_NE(draw(k, 8), ref);
    k = base;
    k.path = 8;
    EXPECT_NE(draw(k, 8), ref);
    k = base;
    k.step = 4;
    EXPECT_NE(draw(k, 8), ref);
    k = base;
    k.purpose = StreamPurpose::probe;
    EXPECT_NE(draw(k, 8), ref);
    k.purpose = StreamPurpose::auxiliary;
    EXPECT_NE(draw(k, 8), ref);
}

TEST(NormalStream, RejectsIndicesBeyond32Bits) {
    EXPECT_THROW(NormalStream(StreamKey{0, 1ull << 32, 0}), InvalidInput);
    EXPECT_THROW(NormalStream(StreamKey{0, 0, 1ull << 32}), InvalidInput);
    EXPECT_NO_THROW(NormalStream(StreamKey{0, 0xffffffffull, 0xffffffffull}));
}

TEST(NormalStream, UniformsLieInHalfOpenUnitInterval) {
    NormalStream s({1, 0, 0, StreamPurpose::auxiliary});
    for (int i = 0; i < 100000; ++i) {
        const double u = s.next_uniform();
        ASSERT_GT(u, 0.0);
        ASSERT_LE(u, 1.0);
    }
}

TEST(NormalStream, FirstMomentsAreStandardNormal) {
    const auto xs = draw({9, 0, 0, StreamPurpose::wiener}, 200000);
    double m1 = 0, m2 = 0, m4 = 0;
    for (double x : xs) {
        m1 += x;
        m2 += x * x;
        m4 += x * x * x * x;
    }
    const double n = static_cast<double>(xs.size());
    m1 /= n;
    m2 /= n;
    m4 /= n;
    EXPECT_LT(std::abs(m1), 4.0 / std::sqrt(n));
    EXPECT_LT(std::abs(m2 - 1.0), 4.0 * std::sqrt(2.0 / n));
    EXPECT_LT(std::abs(m4 - 3.0), 4.0 * std::sqrt(96.0 / n));
}

TEST(NormalStream, AdjacentStepsAreUncorrelated) {
    double cross = 0.0;
    const std::size_t n = 50000;
    for (std::size_t path = 0; path < n; ++path) {
        cross += NormalStream({3, path, 0}).next() * NormalStream({3, path, 1}).next();
    }
    EXPECT_LT(std::abs(cross / n), 4.0 / std::sqrt(static_cast<double>(n)));
}

}  // namespace
}  // namespace sapsim
