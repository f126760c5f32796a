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

#include "fpsearch/binary_io.h"

#include <openssl/evp.h>
#include <openssl/sha.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "fpsearch/error.h"

namespace fpsearch {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kNotFound: return "not_found";
    case ErrorCode::kAlreadyExists: return "already_exists";
    case ErrorCode::kFailedPrecondition: return "failed_precondition";
    case ErrorCode::kDataLoss: return "data_loss";
    case ErrorCode::kIo: return "io_error";
    case ErrorCode::kInternal: return "internal";
  }
  return "unknown";
}

namespace {

template <typename T>
void PutLe(std::vector<uint8_t>& buf, T v) {
  for (size_t i = 0; i < sizeof(T); ++i) {
    buf.push_back(static_cast<uint8_t>(v >> (8 * i)));
  }
}

template <typename T>
T GetLe(const uint8_t* p) {
  T v = 0;
  for (size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(p[i]) << (8 * i);
  return v;
}

}  // namespace

void ByteWriter::U32(uint32_t v) { PutLe(buf_, v); }
void ByteWriter::U64(uint64_t v) { PutLe(buf_, v); }
void ByteWriter::F32(float v) { PutLe(buf_, std::bit_cast<uint32_t>(v)); }
void ByteWriter::F64(double v) { PutLe(buf_, std::bit_cast<uint64_t>(v)); }

void ByteWriter::Bytes(std::span<const uint8_t> bytes) {
  buf_.insert(buf_.end(), bytes.begin(), bytes.end());
}

void ByteWriter::Magic(std::string_view four_cc) {
  buf_.insert(buf_.end(), four_cc.begin(), four_cc.end());
}

void ByteWriter::String(std::string_view s) {
  U32(static_cast<uint32_t>(s.size()));
  buf_.insert(buf_.end(), s.begin(), s.end());
}

void ByteReader::Require(size_t n) const {
  if (remaining() < n) {
    Throw(ErrorCode::kDataLoss,
          "truncated input: need " + std::to_string(n) + " bytes at offset " +
              std::to_string(pos_) + ", have " + std::to_string(remaining()));
  }
}

uint32_t ByteReader::U32() {
  Require(4);
  auto v = GetLe<uint32_t>(data_.data() + pos_);
  pos_ += 4;
  return v;
}

uint64_t ByteReader::U64() {
  Require(8);
  auto v = GetLe<uint64_t>(data_.data() + pos_);
  pos_ += 8;
  return v;
}

float ByteReader::F32() { return std::bit_cast<float>(U32()); }
double ByteReader::F64() { return std::bit_cast<double>(U64()); }

void ByteReader::Bytes(std::span<uint8_t> out) {
  Require(out.size());
  std::memcpy(out.data(), data_.data() + pos_, out.size());
  pos_ += out.size();
}

void ByteReader::ExpectMagic(std::string_view four_cc, std::string_view what) {
  Require(four_cc.size());
  if (std::memcmp(data_.data() + pos_, four_cc.data(), four_cc.size()) != 0) {
    Throw(ErrorCode::kDataLoss, "not a " + std::string(what) +
                                    " file (bad magic, expected " +
                                    std::string(four_cc) + ")");
  }
  pos_ += four_cc.size();
}

std::string ByteReader::String() {
  uint32_t n = U32();
  Require(n);
  std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
  pos_ += n;
  return s;
}

std::vector<uint8_t> ReadFileBytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Throw(ErrorCode::kIo, "cannot open " + path);
  return std::vector<uint8_t>(std::istreambuf_iterator<char>(in),
                              std::istreambuf_iterator<char>());
}

void WriteFileBytes(const std::string& path, std::span<const uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) Throw(ErrorCode::kIo, "cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) Throw(ErrorCode::kIo, "write failed: " + path);
}

Sha256Digest Sha256(std::span<const uint8_t> bytes) {
  Sha256Digest d{};
  SHA256(bytes.data(), bytes.size(), d.data());
  return d;
}

Sha256Digest Sha256(std::string_view text) {
  return Sha256(std::span<const uint8_t>(
      reinterpret_cast<const uint8_t*>(text.data()), text.size()));
}

std::string ToHex(std::span<const uint8_t> bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (uint8_t b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0xf]);
  }
  return out;
}

std::string Base64Encode(std::span<const uint8_t> bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                          bytes.data(), static_cast<int>(bytes.size()));
  out.resize(static_cast<size_t>(n));
  return out;
}

std::vector<uint8_t> Base64Decode(std::string_view text) {
  std::string clean;
  clean.reserve(text.size());
  for (char c : text) {
    if (c != '\n' && c != '\r' && c != ' ' && c != '\t') clean.push_back(c);
  }
  if (clean.size() % 4 != 0) {
    Throw(ErrorCode::kInvalidArgument, "base64 length is not a multiple of 4");
  }
  std::vector<uint8_t> out(3 * clean.size() / 4);
  int n = EVP_DecodeBlock(out.data(),
                          reinterpret_cast<const unsigned char*>(clean.data()),
                          static_cast<int>(clean.size()));
  if (n < 0) Throw(ErrorCode::kInvalidArgument, "malformed base64 payload");
  // EVP_DecodeBlock keeps the padding bytes as zeros; strip them.
  size_t pad = 0;
  if (!clean.empty() && clean.back() == '=') ++pad;
  if (clean.size() > 1 && clean[clean.size() - 2] == '=') ++pad;
  out.resize(static_cast<size_t>(n) - pad);
  return out;
}

}  // namespace fpsearch
