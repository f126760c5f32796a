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

#include <algorithm>
#include <cctype>
#include <cmath>

#include "fpsearch/binary_io.h"
#include "fpsearch/error.h"

namespace fpsearch {

BinaryCode::BinaryCode(size_t bits) : bits_(bits), words_((bits + 63) / 64, 0) {}

BinaryCode::BinaryCode(size_t bits, std::vector<uint64_t> words)
    : bits_(bits), words_(std::move(words)) {
  FPS_CHECK_ARG(words_.size() == (bits + 63) / 64,
                "code of " + std::to_string(bits) + " bits needs " +
                    std::to_string((bits + 63) / 64) + " words, got " +
                    std::to_string(words_.size()));
  if (bits % 64 != 0) {
    const uint64_t mask = (uint64_t{1} << (bits % 64)) - 1;
    FPS_CHECK_ARG((words_.back() & ~mask) == 0, "padding bits must be zero");
  }
}

void BinaryCode::Set(size_t i, bool v) {
  const uint64_t bit = uint64_t{1} << (i % 64);
  if (v) {
    words_[i / 64] |= bit;
  } else {
    words_[i / 64] &= ~bit;
  }
}

BinaryCode Binarize(std::span<const float> values) {
  BinaryCode code(values.size());
  for (size_t i = 0; i < values.size(); ++i) {
    if (std::isnan(values[i])) {
      Throw(ErrorCode::kInvalidArgument,
            "feature value " + std::to_string(i) + " is NaN");
    }
    if (values[i] > 0.0f) code.Set(i, true);
  }
  return code;
}

uint32_t PopcountPortable(uint64_t x) {
  x = x - ((x >> 1) & 0x5555555555555555ULL);
  x = (x & 0x3333333333333333ULL) + ((x >> 2) & 0x3333333333333333ULL);
  x = (x + (x >> 4)) & 0x0f0f0f0f0f0f0f0fULL;
  return static_cast<uint32_t>((x * 0x0101010101010101ULL) >> 56);
}

#if defined(__x86_64__) || defined(__i386__)
#define FPS_POPCNT_TARGET __attribute__((target("popcnt")))
#else
#define FPS_POPCNT_TARGET
#endif

FPS_POPCNT_TARGET uint32_t PopcountHardware(uint64_t x) {
  return static_cast<uint32_t>(__builtin_popcountll(x));
}

namespace {

FPS_POPCNT_TARGET uint32_t HammingHardware(const uint64_t* a, const uint64_t* b,
                                           size_t words) {
  uint32_t d = 0;
  for (size_t i = 0; i < words; ++i) {
    d += static_cast<uint32_t>(__builtin_popcountll(a[i] ^ b[i]));
  }
  return d;
}

}  // namespace

bool HardwarePopcountAvailable() {
#if defined(__x86_64__) || defined(__i386__)
  static const bool available = __builtin_cpu_supports("popcnt");
  return available;
#else
  return true;
#endif
}

uint32_t HammingWordsPortable(const uint64_t* a, const uint64_t* b, size_t words) {
  uint32_t d = 0;
  for (size_t i = 0; i < words; ++i) d += PopcountPortable(a[i] ^ b[i]);
  return d;
}

uint32_t HammingWords(const uint64_t* a, const uint64_t* b, size_t words) {
  return HardwarePopcountAvailable() ? HammingHardware(a, b, words)
                                     : HammingWordsPortable(a, b, words);
}

uint32_t Hamming(const BinaryCode& a, const BinaryCode& b) {
  if (a.size() != b.size()) {
    Throw(ErrorCode::kInvalidArgument,
          "hamming: code lengths differ (" + std::to_string(a.size()) + " vs " +
              std::to_string(b.size()) + ")");
  }
  return HammingWords(a.words().data(), b.words().data(), a.num_words());
}

Hsv RgbToHsv(uint8_t r8, uint8_t g8, uint8_t b8) {
  const double r = r8 / 255.0, g = g8 / 255.0, b = b8 / 255.0;
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double delta = mx - mn;
  Hsv out;
  out.v = mx;
  if (delta <= 0.0) return out;
  out.s = delta / mx;
  double h;
  if (mx == r) {
    h = 60.0 * std::fmod((g - b) / delta, 6.0);
  } else if (mx == g) {
    h = 60.0 * ((b - r) / delta + 2.0);
  } else {
    h = 60.0 * ((r - g) / delta + 4.0);
  }
  if (h < 0.0) h += 360.0;
  if (h >= 360.0) h -= 360.0;
  out.h = h;
  return out;
}

uint32_t HsvBin(const Hsv& hsv, const HistogramBins& bins) {
  auto axis = [](double unit, uint32_t n) {
    auto b = static_cast<uint32_t>(unit * n);
    return std::min(b, n - 1);
  };
  const uint32_t hb = axis(hsv.h / 360.0, bins.hue);
  const uint32_t sb = axis(hsv.s, bins.saturation);
  const uint32_t vb = axis(hsv.v, bins.value);
  return (hb * bins.saturation + sb) * bins.value + vb;
}

ColorHistogram ComputeColorHistogram(const Image& image, const Box& roi,
                                     const HistogramBins& bins) {
  FPS_CHECK_ARG(bins.hue > 0 && bins.saturation > 0 && bins.value > 0,
                "histogram bin counts must be positive");
  FPS_CHECK_ARG(roi.w > 0 && roi.h > 0, "ROI has zero area");
  FPS_CHECK_ARG(uint64_t{roi.x} + roi.w <= image.width &&
                    uint64_t{roi.y} + roi.h <= image.height,
                "ROI (" + std::to_string(roi.x) + "," + std::to_string(roi.y) +
                    "," + std::to_string(roi.w) + "," + std::to_string(roi.h) +
                    ") exceeds image bounds " + std::to_string(image.width) +
                    "x" + std::to_string(image.height));
  std::vector<uint64_t> counts(bins.total(), 0);
  for (uint32_t y = roi.y; y < roi.y + roi.h; ++y) {
    for (uint32_t x = roi.x; x < roi.x + roi.w; ++x) {
      const uint8_t* p = image.Pixel(x, y);
      ++counts[HsvBin(RgbToHsv(p[0], p[1], p[2]), bins)];
    }
  }
  const double n = static_cast<double>(uint64_t{roi.w} * roi.h);
  ColorHistogram hist;
  hist.bins.resize(counts.size());
  for (size_t i = 0; i < counts.size(); ++i) hist.bins[i] = counts[i] / n;
  hist.normalized = true;
  return hist;
}

double HistogramDistance(const ColorHistogram& a, const ColorHistogram& b) {
  FPS_CHECK_ARG(a.bins.size() == b.bins.size(),
                "histogram bin counts differ (" + std::to_string(a.bins.size()) +
                    " vs " + std::to_string(b.bins.size()) + ")");
  double l1 = 0.0;
  for (size_t i = 0; i < a.bins.size(); ++i) l1 += std::abs(a.bins[i] - b.bins[i]);
  return 0.5 * l1;
}

double CombinedDistance(const BinaryCode& query_code,
                        const ColorHistogram& query_hist,
                        const BinaryCode& ref_code, const ColorHistogram& ref_hist,
                        const DistanceWeights& weights) {
  FPS_CHECK_ARG(weights.appearance >= 0.0 && weights.appearance <= 1.0,
                "appearance weight must lie in [0, 1]");
  FPS_CHECK_ARG(query_code.size() > 0, "empty binary code");
  const double appearance =
      static_cast<double>(Hamming(query_code, ref_code)) / query_code.size();
  const double colour = HistogramDistance(query_hist, ref_hist);
  return weights.appearance * appearance + (1.0 - weights.appearance) * colour;
}

namespace {

class PpmTokenizer {
 public:
  explicit PpmTokenizer(std::span<const uint8_t> bytes) : bytes_(bytes) {}

  std::string Next() {
    SkipSpaceAndComments();
    std::string tok;
    while (pos_ < bytes_.size() && !std::isspace(bytes_[pos_])) {
      tok.push_back(static_cast<char>(bytes_[pos_++]));
    }
    if (tok.empty()) Throw(ErrorCode::kInvalidArgument, "truncated PPM header");
    return tok;
  }

  uint32_t NextUint() {
    std::string tok = Next();
    if (tok.size() > 9 ||
        !std::all_of(tok.begin(), tok.end(), [](char c) { return std::isdigit(c); })) {
      Throw(ErrorCode::kInvalidArgument, "bad PPM header field '" + tok + "'");
    }
    return static_cast<uint32_t>(std::stoul(tok));
  }

  // Exactly one whitespace byte separates maxval from the raster.
  size_t RasterStart() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
      Throw(ErrorCode::kInvalidArgument, "malformed PPM header terminator");
    }
    return pos_ + 1;
  }

 private:
  void SkipSpaceAndComments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const uint8_t> bytes_;
  size_t pos_ = 0;
};

}  // namespace

Image DecodePpm(std::span<const uint8_t> bytes) {
  PpmTokenizer tok(bytes);
  if (tok.Next() != "P6") {
    Throw(ErrorCode::kInvalidArgument, "not a binary PPM (P6) image");
  }
  Image img;
  img.width = tok.NextUint();
  img.height = tok.NextUint();
  const uint32_t maxval = tok.NextUint();
  if (maxval != 255) {
    Throw(ErrorCode::kInvalidArgument,
          "unsupported PPM maxval " + std::to_string(maxval));
  }
  if (img.width == 0 || img.height == 0) {
    Throw(ErrorCode::kInvalidArgument, "PPM image has zero size");
  }
  const size_t start = tok.RasterStart();
  const uint64_t need = uint64_t{3} * img.width * img.height;
  if (bytes.size() < start || bytes.size() - start < need) {
    Throw(ErrorCode::kInvalidArgument, "truncated PPM raster");
  }
  img.rgb.assign(bytes.begin() + static_cast<std::ptrdiff_t>(start),
                 bytes.begin() + static_cast<std::ptrdiff_t>(start + need));
  return img;
}

std::vector<uint8_t> EncodePpm(const Image& image) {
  const std::string header = "P6\n" + std::to_string(image.width) + " " +
                             std::to_string(image.height) + "\n255\n";
  std::vector<uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), image.rgb.begin(), image.rgb.end());
  return out;
}

Image ReadPpm(const std::string& path) { return DecodePpm(ReadFileBytes(path)); }

void WritePpm(const Image& image, const std::string& path) {
  WriteFileBytes(path, EncodePpm(image));
}

std::vector<uint8_t> EncodeFeature(std::span<const float> values) {
  ByteWriter w;
  w.Magic("FPSF");
  w.U32(kFeatureFileVersion);
  w.U32(static_cast<uint32_t>(values.size()));
  for (float v : values) w.F32(v);
  return w.Release();
}

DenseFeature DecodeFeature(std::span<const uint8_t> bytes) {
  ByteReader r(bytes);
  r.ExpectMagic("FPSF", "dense feature");
  const uint32_t version = r.U32();
  if (version != kFeatureFileVersion) {
    Throw(ErrorCode::kFailedPrecondition,
          "unsupported feature file version " + std::to_string(version));
  }
  const uint32_t dim = r.U32();
  r.Require(size_t{dim} * 4);
  DenseFeature out(dim);
  for (auto& v : out) {
    v = r.F32();
    if (!std::isfinite(v)) Throw(ErrorCode::kInvalidArgument, "non-finite feature value");
  }
  if (r.remaining() != 0) Throw(ErrorCode::kDataLoss, "trailing bytes in feature file");
  return out;
}

DenseFeature ReadFeature(const std::string& path) {
  return DecodeFeature(ReadFileBytes(path));
}

void WriteFeature(std::span<const float> values, const std::string& path) {
  WriteFileBytes(path, EncodeFeature(values));
}

}  // namespace fpsearch
