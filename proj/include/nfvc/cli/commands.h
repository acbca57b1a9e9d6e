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


#ifndef NFVC_CLI_COMMANDS_H_
#define NFVC_CLI_COMMANDS_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace nfvc::cli {

struct DataGenOptions {
  std::string config;  // optional config file
  std::string out;
  std::optional<std::uint64_t> seed;
};

struct TrainOptions {
  std::string data;
  std::string config;
  std::string out;
  std::string resume;  // checkpoint to continue from
  std::optional<std::size_t> epochs;
};

// Which utterance to synthesise or convert.
struct UtteranceOptions {
  std::string data;       // dataset directory, used with `utterance`
  std::string utterance;  // utterance id inside `data`
  std::string phonemes;   // "p1 p7 ..." when no dataset utterance is given
  std::string durations;  // "3 2 ..."
  std::string f0;         // "0 110.5 ..." per frame
  std::string mel;        // source mel tensor file for vc
  std::string accent;     // locale name or id
};

struct SpeakerOptions {
  std::optional<int> id;
  std::string embedding_file;  // JSON list from gen-speakers, first entry
  std::string mel;             // encode this mel with the model's encoder
};

struct SynthesisOptions {
  std::string model;
  UtteranceOptions utterance;
  SpeakerOptions speaker;         // tts speaker or vc target
  SpeakerOptions source_speaker;  // vc only; defaults to the dataset label
  std::string profile;
  double temperature = 0.7;
  std::uint64_t seed = 0;
  std::string out;
};

struct GenSpeakersOptions {
  std::string model;
  std::string locale;
  std::size_t count = 120;
  std::uint64_t seed = 0;
  std::string out;
};

struct EvalOptions {
  std::string model;
  std::string data;
  std::string metric;
  std::string out;
  std::string embeddings;  // JSON list of new voices
  std::vector<std::string> mels;
  std::optional<int> target_speaker;
  double variance_target = 0.9;
};

// Each returns normally on success and throws nfvc::Error subclasses on
// rejected input.
void RunDataGen(const DataGenOptions& opts);
void RunTrain(const TrainOptions& opts);
void RunTts(const SynthesisOptions& opts);
void RunVc(const SynthesisOptions& opts);
void RunGenSpeakers(const GenSpeakersOptions& opts);
void RunEval(const EvalOptions& opts);

}  // namespace nfvc::cli

#endif  // NFVC_CLI_COMMANDS_H_
