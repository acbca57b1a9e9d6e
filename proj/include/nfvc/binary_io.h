// Copyright (c) 2026 The NFVC Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef NFVC_BINARY_IO_H_
#define NFVC_BINARY_IO_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nfvc/matrix.h"

namespace nfvc {

// Little-endian byte sink, independent of host byte order.
class ByteWriter {
 public:
  void PutBytes(std::string_view bytes) { buffer_.append(bytes); }
  void PutU32(std::uint32_t v);
  void PutU64(std::uint64_t v);
  void PutF32(float v);

  const std::string& bytes() const { return buffer_; }
  std::size_t size() const { return buffer_.size(); }

 private:
  std::string buffer_;
};

// Little-endian byte source. Reading past the end throws DataError.
class ByteReader {
 public:
  explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}

  std::string_view GetBytes(std::size_t n);
  std::uint32_t GetU32();
  std::uint64_t GetU64();
  float GetF32();

  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  void Seek(std::size_t pos);

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

std::string ReadFileBytes(const std::filesystem::path& path);
void WriteFileBytes(const std::filesystem::path& path, std::string_view bytes);

// Frame-matrix file used for mel, f0 and synthesized outputs:
//   offset 0  "NFVT"            4-byte magic
//   offset 4  u32 version (1)
//   offset 8  u32 rows
//   offset 12 u32 cols
//   offset 16 rows*cols f32, row-major
// All integers and floats little-endian.
inline constexpr std::string_view kTensorFileMagic = "NFVT";
inline constexpr std::uint32_t kTensorFileVersion = 1;

std::string EncodeTensorFile(const Matrix& m);
Matrix DecodeTensorFile(std::string_view bytes);
void WriteTensorFile(const std::filesystem::path& path, const Matrix& m);
Matrix ReadTensorFile(const std::filesystem::path& path);

// Rounds every value through a 32-bit float.
Matrix RoundToFloat32(const Matrix& m);

}  // namespace nfvc

#endif  // NFVC_BINARY_IO_H_
