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

#ifndef NFVC_DATASET_H_
#define NFVC_DATASET_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "nfvc/conditioning.h"

namespace nfvc {

struct SpeakerInfo {
  int id = 0;
  int locale = 0;
};

// In-memory form of the on-disk dataset container.
//
// Directory layout:
//   manifest.json          see below
//   mel/<utt>.nfvt         [frames, bins] tensor file (binary_io.h)
//   f0/<utt>.nfvt          [frames, 1] tensor file, Hz, 0 = unvoiced
//
// manifest.json:
//   { "format": "nfvc-dataset", "version": 1, "bins": d,
//     "phoneme_count": P, "locales": ["american", ...],
//     "speakers": [{"id": 0, "locale": "american"}, ...],
//     "utterances": [{"id": "utt00000", "speaker": 0,
//                     "accent": "american", "phonemes": "p3 p17 p4",
//                     "durations": [3, 5, 2], "frames": 10,
//                     "mel": "mel/utt00000.nfvt", "f0": "f0/utt00000.nfvt"},
//                    ...],
//     "generator": {...} }
//
// Phoneme symbols are "p<id>". Values round-trip through 32-bit floats.
struct Dataset {
  std::size_t bins = 0;
  std::size_t phoneme_count = 0;
  std::vector<std::string> locales;
  std::vector<SpeakerInfo> speakers;
  std::vector<Utterance> utterances;
  nlohmann::json generator = nlohmann::json::object();

  int LocaleId(const std::string& name) const;
  const Utterance& Find(const std::string& utt_id) const;
};

inline constexpr int kDatasetVersion = 1;

void SaveDataset(const Dataset& data, const std::filesystem::path& dir);
Dataset LoadDataset(const std::filesystem::path& dir);

// Manifest-only parsing helpers, also used for single-utterance spec files.
std::string FormatPhonemes(const std::vector<int>& phonemes);
std::vector<int> ParsePhonemes(const std::string& text);

// Rounds mel and f0 through 32-bit floats, matching what a save/load
// round trip produces.
Dataset QuantizeToFloat32(Dataset data);

}  // namespace nfvc

#endif  // NFVC_DATASET_H_
