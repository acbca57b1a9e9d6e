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

#include "nfvc/checkpoint.h"

#include <utility>

#include "nfvc/binary_io.h"
#include "nfvc/error.h"

namespace nfvc {

void Checkpoint::Put(const std::string& name, Shape shape,
                     std::span<const double> values) {
  std::size_t total = 1;
  for (std::size_t e : shape) total *= e;
  if (total != values.size()) {
    throw ShapeError("checkpoint entry " + name + ": shape " +
                     ShapeString(shape) + " given " +
                     std::to_string(values.size()) + " values");
  }
  Entry entry;
  entry.shape = std::move(shape);
  entry.data.reserve(values.size());
  for (double v : values) entry.data.push_back(static_cast<float>(v));
  entries_[name] = std::move(entry);
}

void Checkpoint::Put(const std::string& name, const Matrix& m) {
  Put(name, {m.rows(), m.cols()}, m.values());
}

void Checkpoint::Put(const std::string& name, const Tensor& t) {
  Put(name, t.shape(), t.values());
}

bool Checkpoint::Has(const std::string& name) const {
  return entries_.count(name) > 0;
}

const Checkpoint::Entry& Checkpoint::Find(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) {
    throw DataError("checkpoint has no tensor named '" + name + "'");
  }
  return it->second;
}

const Shape& Checkpoint::ShapeOf(const std::string& name) const {
  return Find(name).shape;
}

std::vector<double> Checkpoint::Values(const std::string& name) const {
  const Entry& e = Find(name);
  return std::vector<double>(e.data.begin(), e.data.end());
}

Matrix Checkpoint::GetMatrix(const std::string& name) const {
  const Entry& e = Find(name);
  if (e.shape.size() != 2) {
    throw DataError("checkpoint tensor '" + name + "' has shape " +
                    ShapeString(e.shape) + ", expected rank 2");
  }
  return Matrix(e.shape[0], e.shape[1], Values(name));
}

std::vector<std::string> Checkpoint::Names() const {
  std::vector<std::string> names;
  for (const auto& [name, entry] : entries_) names.push_back(name);
  return names;
}

std::string Checkpoint::Serialize() const {
  ByteWriter w;
  w.PutBytes(kCheckpointMagic);
  w.PutU32(kCheckpointVersion);
  const std::string meta = metadata_.dump();
  w.PutU64(meta.size());
  w.PutBytes(meta);
  w.PutU32(static_cast<std::uint32_t>(entries_.size()));
  std::uint64_t offset = 0;
  for (const auto& [name, entry] : entries_) {
    w.PutU32(static_cast<std::uint32_t>(name.size()));
    w.PutBytes(name);
    w.PutU32(static_cast<std::uint32_t>(entry.shape.size()));
    for (std::size_t e : entry.shape) w.PutU64(e);
    w.PutU64(offset);
    offset += entry.data.size() * 4;
  }
  for (const auto& [name, entry] : entries_) {
    for (float v : entry.data) w.PutF32(v);
  }
  return w.bytes();
}

Checkpoint Checkpoint::Parse(std::string_view bytes) {
  ByteReader r(bytes);
  if (bytes.size() < 4 || r.GetBytes(4) != kCheckpointMagic) {
    throw DataError("not a checkpoint: bad magic bytes");
  }
  const std::uint32_t version = r.GetU32();
  if (version != kCheckpointVersion) {
    throw DataError("checkpoint format version " + std::to_string(version) +
                    " is not supported (expected " +
                    std::to_string(kCheckpointVersion) + ")");
  }
  Checkpoint ckpt;
  const std::uint64_t meta_len = r.GetU64();
  if (meta_len > r.remaining()) {
    throw DataError("checkpoint metadata length exceeds file size");
  }
  try {
    ckpt.metadata_ = nlohmann::json::parse(r.GetBytes(meta_len));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint metadata is not valid JSON: ") +
                    e.what());
  }

  struct DirEntry {
    std::string name;
    Shape shape;
    std::uint64_t offset;
  };
  const std::uint32_t count = r.GetU32();
  std::vector<DirEntry> directory;
  for (std::uint32_t i = 0; i < count; ++i) {
    DirEntry d;
    d.name = std::string(r.GetBytes(r.GetU32()));
    const std::uint32_t rank = r.GetU32();
    if (rank > 8) throw DataError("checkpoint tensor rank too large");
    for (std::uint32_t k = 0; k < rank; ++k) d.shape.push_back(r.GetU64());
    d.offset = r.GetU64();
    directory.push_back(std::move(d));
  }
  const std::size_t blob_start = r.position();
  for (const DirEntry& d : directory) {
    std::size_t total = 1;
    for (std::size_t e : d.shape) total *= e;
    r.Seek(blob_start + d.offset);
    Entry entry;
    entry.shape = d.shape;
    entry.data.resize(total);
    for (float& v : entry.data) v = r.GetF32();
    ckpt.entries_[d.name] = std::move(entry);
  }
  return ckpt;
}

void Checkpoint::Save(const std::filesystem::path& path) const {
  WriteFileBytes(path, Serialize());
}

Checkpoint Checkpoint::Load(const std::filesystem::path& path) {
  try {
    return Parse(ReadFileBytes(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace nfvc
