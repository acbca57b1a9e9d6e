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

#ifndef NFVC_CHECKPOINT_H_
#define NFVC_CHECKPOINT_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "nfvc/matrix.h"
#include "nfvc/tensor.h"

namespace nfvc {

// Checkpoint container layout (all integers little-endian):
//
//   "NFVC"                         4-byte magic
//   u32  format version            kCheckpointVersion
//   u64  metadata length N
//   N    bytes of UTF-8 JSON metadata
//   u32  tensor count C
//   C x  { u32 name length, name bytes, u32 rank, rank x u64 extents,
//          u64 byte offset into the blob region }
//   blob region: each tensor as contiguous little-endian f32, row-major
//
// Values are held as 32-bit floats, so a save/load round trip rounds
// 64-bit parameters to float precision.
inline constexpr std::string_view kCheckpointMagic = "NFVC";
inline constexpr std::uint32_t kCheckpointVersion = 1;

class Checkpoint {
 public:
  nlohmann::json& metadata() { return metadata_; }
  const nlohmann::json& metadata() const { return metadata_; }

  void Put(const std::string& name, Shape shape,
           std::span<const double> values);
  void Put(const std::string& name, const Matrix& m);
  void Put(const std::string& name, const Tensor& t);

  bool Has(const std::string& name) const;
  const Shape& ShapeOf(const std::string& name) const;
  std::vector<double> Values(const std::string& name) const;
  // Requires a rank-2 entry.
  Matrix GetMatrix(const std::string& name) const;
  std::vector<std::string> Names() const;

  std::string Serialize() const;
  static Checkpoint Parse(std::string_view bytes);

  void Save(const std::filesystem::path& path) const;
  static Checkpoint Load(const std::filesystem::path& path);

 private:
  struct Entry {
    Shape shape;
    std::vector<float> data;
  };
  const Entry& Find(const std::string& name) const;

  nlohmann::json metadata_ = nlohmann::json::object();
  std::map<std::string, Entry> entries_;
};

}  // namespace nfvc

#endif  // NFVC_CHECKPOINT_H_
