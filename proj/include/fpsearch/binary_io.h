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

#ifndef FPSEARCH_BINARY_IO_H_
#define FPSEARCH_BINARY_IO_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fpsearch {

// Little-endian byte sink used by every on-disk format in the project.
class ByteWriter {
 public:
  void U32(uint32_t v);
  void U64(uint64_t v);
  void F32(float v);
  void F64(double v);
  void Bytes(std::span<const uint8_t> bytes);
  void Magic(std::string_view four_cc);
  // u32 length followed by raw UTF-8 bytes.
  void String(std::string_view s);

  const std::vector<uint8_t>& data() const { return buf_; }
  std::vector<uint8_t> Release() { return std::move(buf_); }

 private:
  std::vector<uint8_t> buf_;
};

// Bounds-checked little-endian reader. Every read past the end throws
// kDataLoss, so a truncated file can never yield a partial object.
class ByteReader {
 public:
  explicit ByteReader(std::span<const uint8_t> data) : data_(data) {}

  uint32_t U32();
  uint64_t U64();
  float F32();
  double F64();
  void Bytes(std::span<uint8_t> out);
  void ExpectMagic(std::string_view four_cc, std::string_view what);
  std::string String();

  size_t remaining() const { return data_.size() - pos_; }
  size_t position() const { return pos_; }
  // Throws kDataLoss when fewer than `n` bytes remain. Guards allocations
  // sized from untrusted counts.
  void Require(size_t n) const;

 private:
  std::span<const uint8_t> data_;
  size_t pos_ = 0;
};

std::vector<uint8_t> ReadFileBytes(const std::string& path);
void WriteFileBytes(const std::string& path, std::span<const uint8_t> bytes);

using Sha256Digest = std::array<uint8_t, 32>;

Sha256Digest Sha256(std::span<const uint8_t> bytes);
Sha256Digest Sha256(std::string_view text);
std::string ToHex(std::span<const uint8_t> bytes);

std::string Base64Encode(std::span<const uint8_t> bytes);
// Throws kInvalidArgument on malformed input.
std::vector<uint8_t> Base64Decode(std::string_view text);

}  // namespace fpsearch

#endif  // FPSEARCH_BINARY_IO_H_
