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

#include "nfvc/dataset.h"

#include <algorithm>
#include <sstream>

#include "nfvc/binary_io.h"
#include "nfvc/error.h"

namespace nfvc {

namespace fs = std::filesystem;

int Dataset::LocaleId(const std::string& name) const {
  auto it = std::find(locales.begin(), locales.end(), name);
  if (it == locales.end()) throw DataError("unknown locale '" + name + "'");
  return static_cast<int>(it - locales.begin());
}

const Utterance& Dataset::Find(const std::string& utt_id) const {
  for (const Utterance& u : utterances) {
    if (u.id == utt_id) return u;
  }
  throw DataError("no utterance with id '" + utt_id + "'");
}

std::string FormatPhonemes(const std::vector<int>& phonemes) {
  std::ostringstream os;
  for (std::size_t i = 0; i < phonemes.size(); ++i) {
    if (i > 0) os << ' ';
    os << 'p' << phonemes[i];
  }
  return os.str();
}

std::vector<int> ParsePhonemes(const std::string& text) {
  std::istringstream is(text);
  std::vector<int> out;
  std::string token;
  while (is >> token) {
    if (token.size() < 2 || token[0] != 'p') {
      throw DataError("bad phoneme symbol '" + token + "'");
    }
    try {
      std::size_t used = 0;
      const int id = std::stoi(token.substr(1), &used);
      if (used != token.size() - 1 || id < 0) throw std::invalid_argument("");
      out.push_back(id);
    } catch (const std::exception&) {
      throw DataError("bad phoneme symbol '" + token + "'");
    }
  }
  return out;
}

void SaveDataset(const Dataset& data, const fs::path& dir) {
  fs::create_directories(dir / "mel");
  fs::create_directories(dir / "f0");
  nlohmann::json manifest;
  manifest["format"] = "nfvc-dataset";
  manifest["version"] = kDatasetVersion;
  manifest["bins"] = data.bins;
  manifest["phoneme_count"] = data.phoneme_count;
  manifest["locales"] = data.locales;
  manifest["speakers"] = nlohmann::json::array();
  for (const SpeakerInfo& s : data.speakers) {
    manifest["speakers"].push_back(
        {{"id", s.id}, {"locale", data.locales.at(s.locale)}});
  }
  manifest["utterances"] = nlohmann::json::array();
  for (const Utterance& u : data.utterances) {
    u.Validate();
    if (!u.mel) throw DataError("utterance " + u.id + " has no mel to save");
    const std::string mel_rel = "mel/" + u.id + ".nfvt";
    const std::string f0_rel = "f0/" + u.id + ".nfvt";
    WriteTensorFile(dir / mel_rel, u.mel->matrix());
    WriteTensorFile(dir / f0_rel, Matrix(u.f0_hz.size(), 1, u.f0_hz));
    manifest["utterances"].push_back({{"id", u.id},
                                      {"speaker", u.speaker},
                                      {"accent", data.locales.at(u.accent)},
                                      {"phonemes", FormatPhonemes(u.phonemes)},
                                      {"durations", u.durations},
                                      {"frames", u.frames()},
                                      {"mel", mel_rel},
                                      {"f0", f0_rel}});
  }
  manifest["generator"] = data.generator;
  WriteFileBytes(dir / "manifest.json", manifest.dump(2) + "\n");
}

Dataset LoadDataset(const fs::path& dir) {
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(ReadFileBytes(dir / "manifest.json"));
  } catch (const nlohmann::json::exception& e) {
    throw DataError((dir / "manifest.json").string() +
                    ": invalid JSON: " + e.what());
  }
  if (manifest.value("format", std::string()) != "nfvc-dataset") {
    throw DataError(dir.string() + ": not an nfvc dataset manifest");
  }
  const int version = manifest.value("version", -1);
  if (version != kDatasetVersion) {
    throw DataError(dir.string() + ": dataset version " +
                    std::to_string(version) + " is not supported (expected " +
                    std::to_string(kDatasetVersion) + ")");
  }
  Dataset data;
  try {
    data.bins = manifest.at("bins").get<std::size_t>();
    data.phoneme_count = manifest.at("phoneme_count").get<std::size_t>();
    data.locales = manifest.at("locales").get<std::vector<std::string>>();
    for (const auto& s : manifest.at("speakers")) {
      data.speakers.push_back(
          {s.at("id").get<int>(),
           data.LocaleId(s.at("locale").get<std::string>())});
    }
    for (const auto& u : manifest.at("utterances")) {
      Utterance utt;
      utt.id = u.at("id").get<std::string>();
      utt.speaker = u.at("speaker").get<int>();
      utt.accent = data.LocaleId(u.at("accent").get<std::string>());
      utt.phonemes = ParsePhonemes(u.at("phonemes").get<std::string>());
      utt.durations = u.at("durations").get<std::vector<int>>();
      Matrix mel = ReadTensorFile(dir / u.at("mel").get<std::string>());
      if (mel.cols() != data.bins) {
        throw DataError("utterance " + utt.id + ": mel has " +
                        std::to_string(mel.cols()) + " bins, manifest says " +
                        std::to_string(data.bins));
      }
      utt.mel = MelTensor(std::move(mel));
      Matrix f0 = ReadTensorFile(dir / u.at("f0").get<std::string>());
      utt.f0_hz = f0.vector();
      utt.Validate();
      if (u.contains("frames") &&
          u.at("frames").get<std::size_t>() != utt.frames()) {
        throw DataError("utterance " + utt.id +
                        ": manifest frame count disagrees with durations");
      }
      data.utterances.push_back(std::move(utt));
    }
    if (manifest.contains("generator")) data.generator = manifest["generator"];
  } catch (const nlohmann::json::exception& e) {
    throw DataError(dir.string() + ": malformed manifest: " + e.what());
  }
  return data;
}

Dataset QuantizeToFloat32(Dataset data) {
  for (Utterance& u : data.utterances) {
    if (u.mel) u.mel = MelTensor(RoundToFloat32(u.mel->matrix()));
    for (double& f : u.f0_hz) f = static_cast<float>(f);
  }
  return data;
}

}  // namespace nfvc
