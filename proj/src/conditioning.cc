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

#include "nfvc/conditioning.h"

#include <cmath>
#include <numeric>
#include <random>

#include "glog/logging.h"
#include "nfvc/error.h"

namespace nfvc {

EmbeddingTable EmbeddingTable::Random(std::size_t count, std::size_t dim,
                                      std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix rows(count, dim);
  for (double& v : rows.mutable_values()) v = normal(rng);
  return EmbeddingTable(std::move(rows));
}

std::span<const double> EmbeddingTable::Row(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= rows_.rows()) {
    throw DataError("unknown id " + std::to_string(id) + " (table has " +
                    std::to_string(rows_.rows()) + " entries)");
  }
  return rows_.row(static_cast<std::size_t>(id));
}

std::size_t Utterance::frames() const {
  return std::accumulate(durations.begin(), durations.end(), std::size_t{0},
                         [](std::size_t acc, int d) {
                           return acc + static_cast<std::size_t>(
                                            std::max(d, 0));
                         });
}

void Utterance::Validate() const {
  if (phonemes.empty()) {
    throw DataError("utterance " + id + ": empty phoneme sequence");
  }
  if (phonemes.size() != durations.size()) {
    throw DataError("utterance " + id + ": " +
                    std::to_string(phonemes.size()) + " phonemes but " +
                    std::to_string(durations.size()) + " durations");
  }
  for (int d : durations) {
    if (d < 1) {
      throw DataError("utterance " + id + ": durations must be >= 1");
    }
  }
  const std::size_t t = frames();
  if (!f0_hz.empty() && f0_hz.size() != t) {
    throw DataError("utterance " + id + ": f0 has " +
                    std::to_string(f0_hz.size()) +
                    " frames but durations sum to " + std::to_string(t));
  }
  for (double f : f0_hz) {
    if (!(f >= 0.0) || !std::isfinite(f)) {
      throw DataError("utterance " + id + ": f0 must be finite and >= 0");
    }
  }
  if (mel && mel->frames() != t) {
    throw DataError("utterance " + id + ": mel has " +
                    std::to_string(mel->frames()) +
                    " frames but durations sum to " + std::to_string(t));
  }
}

std::vector<double> NormalizeF0(std::span<const double> f0_hz,
                                std::span<const std::uint8_t> vuv,
                                F0MeanMode mode) {
  if (f0_hz.size() != vuv.size()) {
    throw ShapeError("normalize_f0: " + std::to_string(f0_hz.size()) +
                     " f0 frames vs " + std::to_string(vuv.size()) +
                     " vuv flags");
  }
  const std::size_t t = f0_hz.size();
  std::vector<std::size_t> voiced;
  for (std::size_t i = 0; i < t; ++i) {
    if (vuv[i] > 1) throw DataError("normalize_f0: vuv flags must be 0 or 1");
    if (vuv[i] == 1) {
      if (!(f0_hz[i] > 0.0)) {
        throw DataError("normalize_f0: voiced frame " + std::to_string(i) +
                        " has non-positive f0");
      }
      voiced.push_back(i);
    }
  }
  std::vector<double> out(t, 0.0);
  if (voiced.empty()) {
    LOG(WARNING) << "normalize_f0: sentence has no voiced frames; "
                    "using zeros";
    return out;
  }
  for (std::size_t i : voiced) out[i] = std::log(f0_hz[i]);
  for (std::size_t i = 0; i < voiced.front(); ++i) out[i] = out[voiced.front()];
  for (std::size_t i = voiced.back() + 1; i < t; ++i) {
    out[i] = out[voiced.back()];
  }
  for (std::size_t k = 0; k + 1 < voiced.size(); ++k) {
    const std::size_t lo = voiced[k], hi = voiced[k + 1];
    for (std::size_t i = lo + 1; i < hi; ++i) {
      const double w =
          static_cast<double>(i - lo) / static_cast<double>(hi - lo);
      out[i] = (1.0 - w) * out[lo] + w * out[hi];
    }
  }
  double mean = 0.0;
  if (mode == F0MeanMode::kAllFrames) {
    for (double v : out) mean += v;
    mean /= static_cast<double>(t);
  } else {
    for (std::size_t i : voiced) mean += out[i];
    mean /= static_cast<double>(voiced.size());
  }
  for (double& v : out) v -= mean;
  return out;
}

Matrix UpsamplePhonemes(std::span<const int> phonemes,
                        std::span<const int> durations,
                        const EmbeddingTable& table) {
  if (phonemes.empty()) {
    throw DataError("upsample_phonemes: empty phoneme sequence");
  }
  if (phonemes.size() != durations.size()) {
    throw ShapeError("upsample_phonemes: " + std::to_string(phonemes.size()) +
                     " phonemes vs " + std::to_string(durations.size()) +
                     " durations");
  }
  std::size_t t = 0;
  for (int d : durations) {
    if (d < 1) throw DataError("upsample_phonemes: durations must be >= 1");
    t += static_cast<std::size_t>(d);
  }
  Matrix out(t, table.dim());
  std::size_t row = 0;
  for (std::size_t i = 0; i < phonemes.size(); ++i) {
    auto emb = table.Row(phonemes[i]);
    for (int r = 0; r < durations[i]; ++r, ++row) {
      std::copy(emb.begin(), emb.end(), out.row(row).begin());
    }
  }
  return out;
}

ConditionTables ConditionTables::Make(std::size_t phoneme_count,
                                      std::size_t phoneme_dim,
                                      std::size_t accent_count,
                                      std::size_t accent_dim,
                                      std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::uint64_t ph_seed = rng();
  const std::uint64_t acc_seed = rng();
  return {EmbeddingTable::Random(phoneme_count, phoneme_dim, ph_seed),
          EmbeddingTable::Random(accent_count, accent_dim, acc_seed)};
}

void SpeakerTable::Set(int speaker, SpeakerEmbedding embedding, int locale) {
  if (!entries_.empty() && embedding.dim() != dim()) {
    throw ShapeError("speaker table: embedding dim " +
                     std::to_string(embedding.dim()) + " differs from " +
                     std::to_string(dim()));
  }
  entries_[speaker] = Entry{std::move(embedding), locale};
}

const SpeakerEmbedding& SpeakerTable::Get(int speaker) const {
  auto it = entries_.find(speaker);
  if (it == entries_.end()) {
    throw DataError("unknown speaker id " + std::to_string(speaker));
  }
  return it->second.embedding;
}

int SpeakerTable::LocaleOf(int speaker) const {
  auto it = entries_.find(speaker);
  if (it == entries_.end()) {
    throw DataError("unknown speaker id " + std::to_string(speaker));
  }
  return it->second.locale;
}

std::vector<int> SpeakerTable::Ids() const {
  std::vector<int> ids;
  for (const auto& [id, e] : entries_) ids.push_back(id);
  return ids;
}

std::size_t SpeakerTable::dim() const {
  return entries_.empty() ? 0 : entries_.begin()->second.embedding.dim();
}

SpeakerEmbedding ResolveSpeaker(const Utterance& utt,
                                const SpeakerSource& source) {
  if (const auto* lookup = std::get_if<LookupSpeaker>(&source)) {
    return lookup->table->Get(utt.speaker);
  }
  if (const auto* enc = std::get_if<EncodeSpeaker>(&source)) {
    if (!utt.mel) {
      throw DataError("utterance " + utt.id +
                      ": encoder speaker source needs a mel");
    }
    return enc->encoder->Encode(*utt.mel);
  }
  return std::get<SpeakerEmbedding>(source);
}

ConditionSet BuildConditionSet(const Utterance& utt,
                               const ConditionTables& tables,
                               const SpeakerSource& speaker,
                               const ConditionOptions& options) {
  utt.Validate();
  const std::size_t t = utt.frames();
  ConditionSet cond;
  cond.phoneme_frames =
      UpsamplePhonemes(utt.phonemes, utt.durations, tables.phonemes);
  cond.vuv.assign(t, 0);
  cond.f0_norm.assign(t, 0.0);
  if (options.use_f0) {
    if (utt.f0_hz.size() != t) {
      throw DataError("utterance " + utt.id +
                      ": f0 conditioning requested but the f0 contour has " +
                      std::to_string(utt.f0_hz.size()) + " of " +
                      std::to_string(t) + " frames");
    }
    for (std::size_t i = 0; i < t; ++i) cond.vuv[i] = utt.f0_hz[i] > 0.0;
    cond.f0_norm = NormalizeF0(utt.f0_hz, cond.vuv, options.f0_mean);
  }
  auto accent = tables.accents.Row(utt.accent);
  cond.accent.assign(accent.begin(), accent.end());
  cond.speaker = ResolveSpeaker(utt, speaker);
  for (double v : cond.speaker.values) {
    if (!std::isfinite(v)) {
      throw NumericError("utterance " + utt.id +
                         ": speaker embedding is not finite");
    }
  }
  return cond;
}

Matrix FrameConditionMatrix(const ConditionSet& cond) {
  const std::size_t t = cond.frames();
  if (cond.f0_norm.size() != t || cond.vuv.size() != t) {
    throw ShapeError("condition set is not frame aligned: " +
                     std::to_string(t) + " phoneme frames, " +
                     std::to_string(cond.f0_norm.size()) + " f0 frames, " +
                     std::to_string(cond.vuv.size()) + " vuv frames");
  }
  const std::size_t e_ph = cond.phoneme_frames.cols();
  const std::size_t width =
      ConditionWidth(e_ph, cond.speaker.dim(), cond.accent.size());
  Matrix out(t, width);
  for (std::size_t f = 0; f < t; ++f) {
    auto row = out.row(f);
    auto ph = cond.phoneme_frames.row(f);
    std::size_t c = 0;
    for (double v : ph) row[c++] = v;
    row[c++] = cond.f0_norm[f];
    row[c++] = cond.vuv[f];
    for (double v : cond.speaker.values) row[c++] = v;
    for (double v : cond.accent) row[c++] = v;
  }
  return out;
}

}  // namespace nfvc
