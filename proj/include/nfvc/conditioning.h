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

#ifndef NFVC_CONDITIONING_H_
#define NFVC_CONDITIONING_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "nfvc/matrix.h"

namespace nfvc {

// Fixed-dimension speaker identity vector.
struct SpeakerEmbedding {
  std::vector<double> values;

  std::size_t dim() const { return values.size(); }
  bool operator==(const SpeakerEmbedding&) const = default;
};

// Dense id -> vector lookup. Unknown ids are rejected.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(Matrix rows) : rows_(std::move(rows)) {}
  // Rows drawn i.i.d. from N(0, 1), deterministic in `seed`.
  static EmbeddingTable Random(std::size_t count, std::size_t dim,
                               std::uint64_t seed);

  std::size_t count() const { return rows_.rows(); }
  std::size_t dim() const { return rows_.cols(); }
  std::span<const double> Row(int id) const;
  const Matrix& matrix() const { return rows_; }

 private:
  Matrix rows_;
};

// A labelled sentence: pre-aligned phonemes plus prosody.
struct Utterance {
  std::string id;
  std::vector<int> phonemes;
  std::vector<int> durations;  // frames per phoneme, each >= 1
  std::vector<double> f0_hz;   // per frame; 0 where unvoiced; may be empty
  int accent = 0;
  int speaker = -1;
  std::optional<MelTensor> mel;

  std::size_t frames() const;  // sum of durations
  // Throws DataError on broken invariants.
  void Validate() const;
};

// Per-frame view of the six conditions.
struct ConditionSet {
  SpeakerEmbedding speaker;
  std::vector<double> f0_norm;  // [t]
  std::vector<std::uint8_t> vuv;  // [t], 0 or 1
  Matrix phoneme_frames;  // [t, e_ph]
  std::vector<double> accent;

  std::size_t frames() const { return phoneme_frames.rows(); }
};

enum class F0MeanMode {
  kAllFrames,     // mean over every frame after interpolation
  kVoicedFrames,  // mean over originally voiced frames only
};

// Sentence-level mean-normalised interpolated log-f0. Unvoiced gaps are
// linearly interpolated in the log domain between the surrounding voiced
// frames; leading/trailing gaps hold the nearest voiced value. An
// all-unvoiced sentence yields zeros and logs a warning.
std::vector<double> NormalizeF0(std::span<const double> f0_hz,
                                std::span<const std::uint8_t> vuv,
                                F0MeanMode mode = F0MeanMode::kAllFrames);

// Repeats each phoneme embedding durations[i] times.
Matrix UpsamplePhonemes(std::span<const int> phonemes,
                        std::span<const int> durations,
                        const EmbeddingTable& table);

struct ConditionTables {
  EmbeddingTable phonemes;
  EmbeddingTable accents;

  static ConditionTables Make(std::size_t phoneme_count,
                              std::size_t phoneme_dim,
                              std::size_t accent_count, std::size_t accent_dim,
                              std::uint64_t seed);
};

// Speaker id -> embedding (and locale), e.g. encoder centroids of the
// training speakers.
class SpeakerTable {
 public:
  void Set(int speaker, SpeakerEmbedding embedding, int locale);
  bool Has(int speaker) const { return entries_.count(speaker) > 0; }
  const SpeakerEmbedding& Get(int speaker) const;
  int LocaleOf(int speaker) const;
  std::vector<int> Ids() const;
  std::size_t size() const { return entries_.size(); }
  std::size_t dim() const;

 private:
  struct Entry {
    SpeakerEmbedding embedding;
    int locale = 0;
  };
  std::map<int, Entry> entries_;
};

class SpeakerEncoder {
 public:
  virtual ~SpeakerEncoder() = default;
  virtual SpeakerEmbedding Encode(const MelTensor& mel) const = 0;
  virtual std::size_t dim() const = 0;
};

// Where the speaker condition comes from.
struct LookupSpeaker {
  const SpeakerTable* table;
};
struct EncodeSpeaker {
  const SpeakerEncoder* encoder;
};
using SpeakerSource =
    std::variant<LookupSpeaker, EncodeSpeaker, SpeakerEmbedding>;

struct ConditionOptions {
  // false: f0_norm and vuv are replaced by zeros.
  bool use_f0 = true;
  F0MeanMode f0_mean = F0MeanMode::kAllFrames;
};

SpeakerEmbedding ResolveSpeaker(const Utterance& utt,
                                const SpeakerSource& source);

ConditionSet BuildConditionSet(const Utterance& utt,
                               const ConditionTables& tables,
                               const SpeakerSource& speaker,
                               const ConditionOptions& options);

// Per-frame [ph_frames | f0_norm | vuv | s | a].
Matrix FrameConditionMatrix(const ConditionSet& cond);

inline std::size_t ConditionWidth(std::size_t phoneme_dim,
                                  std::size_t speaker_dim,
                                  std::size_t accent_dim) {
  return phoneme_dim + 2 + speaker_dim + accent_dim;
}

}  // namespace nfvc

#endif  // NFVC_CONDITIONING_H_
