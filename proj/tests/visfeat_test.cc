// Copyright 2026 The fpsearch Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "fpsearch/visfeat.h"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "fixtures.h"
#include "fpsearch/error.h"
#include "fpsearch/random.h"
#include "oracles.h"

namespace fpsearch {
namespace {

using testing::BitLoopHamming;
using testing::RandomCode;

Image RandomImage(uint32_t w, uint32_t h, Rng& rng) {
  Image img{w, h, std::vector<uint8_t>(size_t{w} * h * 3)};
  for (auto& c : img.rgb) c = static_cast<uint8_t>(rng.Below(256));
  return img;
}

Image Solid(uint32_t w, uint32_t h, uint8_t r, uint8_t g, uint8_t b) {
  Image img{w, h, {}};
  for (size_t i = 0; i < size_t{w} * h; ++i) img.rgb.insert(img.rgb.end(), {r, g, b});
  return img;
}

TEST(BinarizeTest, ThresholdsStrictlyAboveZero) {
  const std::vector<float> v{0.5f, -0.1f, 0.0f, 2.3f};
  const auto code = Binarize(v);
  EXPECT_EQ(code.size(), 4u);
  EXPECT_TRUE(code.Get(0));
  EXPECT_FALSE(code.Get(1));
  EXPECT_FALSE(code.Get(2));
  EXPECT_TRUE(code.Get(3));
  EXPECT_EQ(code.words()[0], 0b1001u);
  EXPECT_EQ(Binarize(std::vector<float>(100, -1.0f)), BinaryCode(100));
  EXPECT_FALSE(Binarize(std::vector<float>{-0.0f}).Get(0));
}

TEST(BinarizeTest, RandomVectorsAgreeElementwise) {
  Rng rng(1);
  for (int n = 0; n < 10000; ++n) {
    std::vector<float> v(1 + rng.Below(200));
    for (auto& x : v) x = static_cast<float>(rng.Normal());
    if (n % 7 == 0) v[rng.Below(v.size())] = 0.0f;
    const auto code = Binarize(v);
    for (size_t i = 0; i < v.size(); ++i) ASSERT_EQ(code.Get(i), v[i] > 0);
    // Padding stays zero.
    for (size_t i = v.size(); i < code.num_words() * 64; ++i) {
      ASSERT_EQ((code.words()[i / 64] >> (i % 64)) & 1u, 0u);
    }
  }
}

TEST(BinarizeTest, IdempotentUnderRethresholding) {
  Rng rng(2);
  std::vector<float> v(300);
  for (auto& x : v) x = static_cast<float>(rng.Normal());
  const auto code = Binarize(v);
  std::vector<float> back(v.size());
  for (size_t i = 0; i < v.size(); ++i) back[i] = code.Get(i) ? 1.0f : 0.0f;
  EXPECT_EQ(Binarize(back), code);
}

TEST(BinarizeTest, NanRejected) {
  std::vector<float> v{1.0f, std::numeric_limits<float>::quiet_NaN()};
  EXPECT_THROW(Binarize(v), Error);
}

TEST(BinaryCodeTest, PaddingMustBeZero) {
  EXPECT_THROW(BinaryCode(3, {0b1000}), Error);
  EXPECT_THROW(BinaryCode(3, {0, 0}), Error);
  EXPECT_NO_THROW(BinaryCode(3, {0b111}));
}

TEST(HammingTest, Basics) {
  BinaryCode zeros(64), ones(64);
  for (size_t i = 0; i < 64; ++i) ones.Set(i, true);
  EXPECT_EQ(Hamming(zeros, ones), 64u);
  EXPECT_EQ(Hamming(ones, ones), 0u);
  EXPECT_THROW(Hamming(BinaryCode(64), BinaryCode(65)), Error);
}

TEST(HammingTest, MatchesBitLoopOnRandomPairs) {
  Rng rng(3);
  for (int i = 0; i < 100000; ++i) {
    const auto a = RandomCode(rng, 1024);
    const auto b = RandomCode(rng, 1024);
    ASSERT_EQ(Hamming(a, b), BitLoopHamming(a, b));
  }
}

TEST(HammingTest, HardwareAndPortableAgree) {
  Rng rng(4);
  for (int i = 0; i < 100000; ++i) {
    const uint64_t x = rng.NextU64() >> rng.Below(64);
    ASSERT_EQ(PopcountPortable(x), static_cast<uint32_t>(__builtin_popcountll(x)));
    if (HardwarePopcountAvailable()) ASSERT_EQ(PopcountHardware(x), PopcountPortable(x));
  }
  const auto a = RandomCode(rng, 1024), b = RandomCode(rng, 1024);
  EXPECT_EQ(HammingWords(a.words().data(), b.words().data(), 16),
            HammingWordsPortable(a.words().data(), b.words().data(), 16));
}

TEST(HammingTest, IsAMetric) {
  Rng rng(5);
  for (int i = 0; i < 2000; ++i) {
    const size_t bits = 1 + rng.Below(300);
    const auto a = RandomCode(rng, bits), b = RandomCode(rng, bits), c = RandomCode(rng, bits);
    EXPECT_EQ(Hamming(a, b), Hamming(b, a));
    EXPECT_EQ(Hamming(a, b) == 0, a == b);
    EXPECT_LE(Hamming(a, c), Hamming(a, b) + Hamming(b, c));
  }
}

TEST(HsvTest, KnownValues) {
  auto red = RgbToHsv(255, 0, 0);
  EXPECT_EQ(red.h, 0.0);
  EXPECT_EQ(red.s, 1.0);
  EXPECT_EQ(red.v, 1.0);
  auto black = RgbToHsv(0, 0, 0);
  EXPECT_EQ(black.h, 0.0);
  EXPECT_EQ(black.s, 0.0);
  EXPECT_EQ(black.v, 0.0);
  auto brown = RgbToHsv(128, 64, 32);
  EXPECT_NEAR(brown.h, 20.0, 1e-12);
  EXPECT_NEAR(brown.s, 0.75, 1e-12);
  EXPECT_NEAR(brown.v, 128.0 / 255.0, 1e-12);
  auto grey = RgbToHsv(90, 90, 90);
  EXPECT_EQ(grey.h, 0.0);
  EXPECT_EQ(grey.s, 0.0);
}

TEST(HsvTest, MatchesReferenceOnAllHues) {
  Rng rng(6);
  for (int i = 0; i < 100000; ++i) {
    const auto r = static_cast<uint8_t>(rng.Below(256));
    const auto g = static_cast<uint8_t>(rng.Below(256));
    const auto b = static_cast<uint8_t>(rng.Below(256));
    const Hsv got = RgbToHsv(r, g, b);
    const Hsv want = testing::ReferenceHsv(r, g, b);
    ASSERT_NEAR(got.h, want.h, 1e-9);
    ASSERT_NEAR(got.s, want.s, 1e-12);
    ASSERT_NEAR(got.v, want.v, 1e-12);
    ASSERT_GE(got.h, 0.0);
    ASSERT_LT(got.h, 360.0);
  }
}

TEST(HistogramTest, UniformRedIsOneBin) {
  const auto h = ComputeColorHistogram(Solid(5, 4, 255, 0, 0), {0, 0, 5, 4}, {});
  ASSERT_EQ(h.bins.size(), 128u);
  EXPECT_TRUE(h.normalized);
  int nonzero = 0;
  for (double b : h.bins) {
    if (b != 0) {
      ++nonzero;
      EXPECT_EQ(b, 1.0);
    }
  }
  EXPECT_EQ(nonzero, 1);
}

TEST(HistogramTest, HalfRedHalfGreen) {
  Image img = Solid(4, 2, 255, 0, 0);
  for (uint32_t x = 2; x < 4; ++x) {
    for (uint32_t y = 0; y < 2; ++y) {
      const size_t o = 3 * (size_t{y} * 4 + x);
      img.rgb[o] = 0;
      img.rgb[o + 1] = 255;
    }
  }
  const auto h = ComputeColorHistogram(img, FullImageBox(img), {});
  std::vector<double> masses;
  for (double b : h.bins) {
    if (b != 0) masses.push_back(b);
  }
  EXPECT_EQ(masses, (std::vector<double>{0.5, 0.5}));
}

TEST(HistogramTest, MatchesRecountOnRandomImages) {
  Rng rng(7);
  for (int i = 0; i < 50; ++i) {
    const Image img = RandomImage(1 + rng.Below(40), 1 + rng.Below(40), rng);
    const uint32_t x = rng.Below(img.width), y = rng.Below(img.height);
    const Box roi{x, y, 1 + static_cast<uint32_t>(rng.Below(img.width - x)),
                  1 + static_cast<uint32_t>(rng.Below(img.height - y))};
    const HistogramBins bins{1 + static_cast<uint32_t>(rng.Below(12)),
                             1 + static_cast<uint32_t>(rng.Below(6)),
                             1 + static_cast<uint32_t>(rng.Below(6))};
    const auto h = ComputeColorHistogram(img, roi, bins);
    const auto want = testing::RecountHistogram(img, roi, bins);
    double sum = 0;
    for (size_t b = 0; b < want.size(); ++b) {
      EXPECT_NEAR(h.bins[b], want[b], 1e-12);
      sum += h.bins[b];
    }
    EXPECT_NEAR(sum, 1.0, 1e-9);
  }
}

TEST(HistogramTest, TranslationInvariantOnUniformImage) {
  const Image img = Solid(30, 30, 40, 200, 90);
  const auto a = ComputeColorHistogram(img, {0, 0, 10, 10}, {});
  const auto b = ComputeColorHistogram(img, {17, 5, 10, 10}, {});
  EXPECT_EQ(a.bins, b.bins);
}

TEST(HistogramTest, BadRoiRejected) {
  const Image img = Solid(10, 10, 1, 2, 3);
  EXPECT_THROW(ComputeColorHistogram(img, {0, 0, 0, 5}, {}), Error);
  EXPECT_THROW(ComputeColorHistogram(img, {5, 5, 6, 1}, {}), Error);
  EXPECT_THROW(ComputeColorHistogram(img, {0xFFFFFFFFu, 0, 2, 2}, {}), Error);
}

TEST(DistanceTest, HandExample) {
  BinaryCode q(8), r(8);
  r.Set(1, true);
  r.Set(6, true);
  ColorHistogram hq{{0.6, 0.4, 0.0}, true};
  ColorHistogram hr{{0.4, 0.4, 0.2}, true};
  EXPECT_NEAR(HistogramDistance(hq, hr), 0.2, 1e-15);
  EXPECT_NEAR(CombinedDistance(q, hq, r, hr, {0.7}), 0.235, 1e-15);
  EXPECT_NEAR(CombinedDistance(q, hq, r, hr, {1.0}), 0.25, 1e-15);
  EXPECT_EQ(CombinedDistance(q, hq, r, hq, {0.0}), 0.0);
}

TEST(DistanceTest, RangeAndZeroIffEqual) {
  Rng rng(8);
  const HistogramBins bins{2, 2, 2};
  for (int i = 0; i < 2000; ++i) {
    const auto a = RandomCode(rng, 64);
    const auto b = i % 3 == 0 ? a : RandomCode(rng, 64);
    const auto ha = testing::RandomHistogram(rng, bins);
    const auto hb = i % 5 == 0 ? ha : testing::RandomHistogram(rng, bins);
    const double d = CombinedDistance(a, ha, b, hb, {0.4});
    EXPECT_GE(d, 0.0);
    EXPECT_LE(d, 1.0);
    EXPECT_EQ(d == 0.0, a == b && ha.bins == hb.bins);
  }
}

TEST(DistanceTest, MismatchRejected) {
  ColorHistogram h3{{1, 0, 0}, true}, h2{{1, 0}, true};
  EXPECT_THROW(CombinedDistance(BinaryCode(8), h3, BinaryCode(8), h2, {}), Error);
  EXPECT_THROW(CombinedDistance(BinaryCode(8), h3, BinaryCode(9), h3, {}), Error);
  EXPECT_THROW(CombinedDistance(BinaryCode(8), h3, BinaryCode(8), h3, {1.5}), Error);
}

TEST(PpmTest, RoundTripAndComments) {
  Rng rng(9);
  const Image img = RandomImage(7, 5, rng);
  const auto bytes = EncodePpm(img);
  const Image back = DecodePpm(bytes);
  EXPECT_EQ(back.width, 7u);
  EXPECT_EQ(back.rgb, img.rgb);

  std::string text = "P6\n# a comment\n2 1\n255\n";
  text += std::string("\x01\x02\x03\x04\x05\x06", 6);
  const Image small = DecodePpm({reinterpret_cast<const uint8_t*>(text.data()), text.size()});
  EXPECT_EQ(small.rgb, (std::vector<uint8_t>{1, 2, 3, 4, 5, 6}));
}

TEST(PpmTest, MalformedRejected) {
  for (std::string text : {std::string("P5\n1 1\n255\n\x01"), std::string("P6\n1 1\n65535\n"),
                           std::string("P6\n2 2\n255\n\x01\x02"), std::string("P6\n"),
                           std::string("")}) {
    try {
      DecodePpm({reinterpret_cast<const uint8_t*>(text.data()), text.size()});
      ADD_FAILURE() << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kInvalidArgument);
    }
  }
}

TEST(FeatureFileTest, RoundTripAndCorruption) {
  const std::vector<float> v{1.5f, -2.0f, 0.0f};
  const auto bytes = EncodeFeature(v);
  EXPECT_EQ(DecodeFeature(bytes), v);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "FPSF");
  EXPECT_THROW(DecodeFeature({bytes.data(), bytes.size() - 1}), Error);
  auto extra = bytes;
  extra.push_back(0);
  EXPECT_THROW(DecodeFeature(extra), Error);
  auto magic = bytes;
  magic[0] = 'Q';
  EXPECT_THROW(DecodeFeature(magic), Error);
}

}  // namespace
}  // namespace fpsearch
