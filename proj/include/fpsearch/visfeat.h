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

#ifndef FPSEARCH_VISFEAT_H_
#define FPSEARCH_VISFEAT_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace fpsearch {

inline constexpr uint32_t kDefaultFeatureDim = 1024;

// Appearance descriptor as produced by an external CNN.
using DenseFeature = std::vector<float>;

// Packed sign bits of a dense feature. Bit i lives in word i / 64 at bit
// position i % 64; padding bits above size() are always zero.
class BinaryCode {
 public:
  BinaryCode() = default;
  explicit BinaryCode(size_t bits);
  BinaryCode(size_t bits, std::vector<uint64_t> words);

  size_t size() const { return bits_; }
  size_t num_words() const { return words_.size(); }
  std::span<const uint64_t> words() const { return words_; }

  bool Get(size_t i) const { return (words_[i / 64] >> (i % 64)) & 1u; }
  void Set(size_t i, bool v);

  friend bool operator==(const BinaryCode&, const BinaryCode&) = default;

 private:
  size_t bits_ = 0;
  std::vector<uint64_t> words_;
};

// bit_i = values_i > 0; zero maps to 0. Throws on NaN.
BinaryCode Binarize(std::span<const float> values);

// Portable SWAR popcount and the hardware POPCNT path. Hamming() dispatches
// to the hardware path when the CPU reports support.
uint32_t PopcountPortable(uint64_t x);
uint32_t PopcountHardware(uint64_t x);
bool HardwarePopcountAvailable();

uint32_t HammingWords(const uint64_t* a, const uint64_t* b, size_t words);
uint32_t HammingWordsPortable(const uint64_t* a, const uint64_t* b, size_t words);

// Throws kInvalidArgument on length mismatch.
uint32_t Hamming(const BinaryCode& a, const BinaryCode& b);

struct Hsv {
  double h = 0.0;  // [0, 360)
  double s = 0.0;  // [0, 1]
  double v = 0.0;  // [0, 1]
};

// Hexcone model; grays get h = 0, s = 0.
Hsv RgbToHsv(uint8_t r, uint8_t g, uint8_t b);

struct HistogramBins {
  uint32_t hue = 8;
  uint32_t saturation = 4;
  uint32_t value = 4;

  uint32_t total() const { return hue * saturation * value; }
  friend bool operator==(const HistogramBins&, const HistogramBins&) = default;
};

// Flat bin index, hue-major: (h_bin * S + s_bin) * V + v_bin.
uint32_t HsvBin(const Hsv& hsv, const HistogramBins& bins);

struct ColorHistogram {
  std::vector<double> bins;
  bool normalized = false;
};

// 8-bit RGB raster, row-major, 3 bytes per pixel.
struct Image {
  uint32_t width = 0;
  uint32_t height = 0;
  std::vector<uint8_t> rgb;

  const uint8_t* Pixel(uint32_t x, uint32_t y) const {
    return rgb.data() + 3 * (static_cast<size_t>(y) * width + x);
  }
};

// Pixel-space rectangle, top-left anchored.
struct Box {
  uint32_t x = 0;
  uint32_t y = 0;
  uint32_t w = 0;
  uint32_t h = 0;

  friend bool operator==(const Box&, const Box&) = default;
};

inline Box FullImageBox(const Image& img) { return {0, 0, img.width, img.height}; }

// Normalized HSV histogram of the pixels inside `roi`. Throws on empty or
// out-of-bounds ROIs.
ColorHistogram ComputeColorHistogram(const Image& image, const Box& roi,
                                     const HistogramBins& bins);

// L1 distance halved, in [0, 1] for normalized histograms.
double HistogramDistance(const ColorHistogram& a, const ColorHistogram& b);

struct DistanceWeights {
  double appearance = 0.7;  // colour weight is 1 - appearance
};

// w * hamming / F + (1 - w) * L1 / 2.
double CombinedDistance(const BinaryCode& query_code,
                        const ColorHistogram& query_hist,
                        const BinaryCode& ref_code, const ColorHistogram& ref_hist,
                        const DistanceWeights& weights);

// Binary pixmap (P6, maxval 255).
Image DecodePpm(std::span<const uint8_t> bytes);
std::vector<uint8_t> EncodePpm(const Image& image);
Image ReadPpm(const std::string& path);
void WritePpm(const Image& image, const std::string& path);

// "FPSF" dense feature files.
inline constexpr uint32_t kFeatureFileVersion = 1;
std::vector<uint8_t> EncodeFeature(std::span<const float> values);
DenseFeature DecodeFeature(std::span<const uint8_t> bytes);
DenseFeature ReadFeature(const std::string& path);
void WriteFeature(std::span<const float> values, const std::string& path);

}  // namespace fpsearch

#endif  // FPSEARCH_VISFEAT_H_
