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

#include "nfvc/binary_io.h"

#include <bit>
#include <fstream>
#include <sstream>

#include "nfvc/error.h"

namespace nfvc {

void ByteWriter::PutU32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) {
    buffer_.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
  }
}

void ByteWriter::PutU64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    buffer_.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
  }
}

void ByteWriter::PutF32(float v) { PutU32(std::bit_cast<std::uint32_t>(v)); }

std::string_view ByteReader::GetBytes(std::size_t n) {
  if (n > remaining()) {
    std::ostringstream os;
    os << "truncated data: need " << n << " bytes at offset " << pos_
       << ", have " << remaining();
    throw DataError(os.str());
  }
  std::string_view out = bytes_.substr(pos_, n);
  pos_ += n;
  return out;
}

std::uint32_t ByteReader::GetU32() {
  std::string_view b = GetBytes(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[i]))
         << (8 * i);
  }
  return v;
}

std::uint64_t ByteReader::GetU64() {
  std::string_view b = GetBytes(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[i]))
         << (8 * i);
  }
  return v;
}

float ByteReader::GetF32() { return std::bit_cast<float>(GetU32()); }

void ByteReader::Seek(std::size_t pos) {
  if (pos > bytes_.size()) {
    throw DataError("seek past end of data at offset " + std::to_string(pos));
  }
  pos_ = pos;
}

std::string ReadFileBytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void WriteFileBytes(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed for " + path.string());
}

std::string EncodeTensorFile(const Matrix& m) {
  ByteWriter w;
  w.PutBytes(kTensorFileMagic);
  w.PutU32(kTensorFileVersion);
  w.PutU32(static_cast<std::uint32_t>(m.rows()));
  w.PutU32(static_cast<std::uint32_t>(m.cols()));
  for (double v : m.values()) w.PutF32(static_cast<float>(v));
  return w.bytes();
}

Matrix DecodeTensorFile(std::string_view bytes) {
  ByteReader r(bytes);
  if (r.GetBytes(4) != kTensorFileMagic) {
    throw DataError("not a tensor file (bad magic)");
  }
  const std::uint32_t version = r.GetU32();
  if (version != kTensorFileVersion) {
    throw DataError("unsupported tensor file version " +
                    std::to_string(version));
  }
  const std::size_t rows = r.GetU32();
  const std::size_t cols = r.GetU32();
  if (r.remaining() != rows * cols * 4) {
    throw DataError("tensor file payload size does not match " +
                    ShapeString(rows, cols));
  }
  std::vector<double> values(rows * cols);
  for (double& v : values) v = r.GetF32();
  return Matrix(rows, cols, std::move(values));
}

void WriteTensorFile(const std::filesystem::path& path, const Matrix& m) {
  WriteFileBytes(path, EncodeTensorFile(m));
}

Matrix ReadTensorFile(const std::filesystem::path& path) {
  try {
    return DecodeTensorFile(ReadFileBytes(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

Matrix RoundToFloat32(const Matrix& m) {
  Matrix out = m;
  for (double& v : out.mutable_values()) v = static_cast<float>(v);
  return out;
}

}  // namespace nfvc
