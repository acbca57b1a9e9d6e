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

#include "nfvc/modes.h"

#include <random>
#include <utility>

#include "nfvc/error.h"

namespace nfvc::modes {

Profile ParseProfile(std::string_view name) {
  if (name == "tts" || name == "Flow-TTS") return Profile::kTts;
  if (name == "tts_with_f0" || name == "Flow-TTS with f0") {
    return Profile::kTtsWithF0;
  }
  if (name == "vc" || name == "Flow-VC") return Profile::kVc;
  if (name == "vc_without_f0" || name == "Flow-VC w/o f0") {
    return Profile::kVcWithoutF0;
  }
  throw ConfigError("unknown profile '" + std::string(name) +
                    "' (expected tts, tts_with_f0, vc or vc_without_f0)");
}

std::string ProfileKey(Profile p) {
  switch (p) {
    case Profile::kTts: return "tts";
    case Profile::kTtsWithF0: return "tts_with_f0";
    case Profile::kVc: return "vc";
    case Profile::kVcWithoutF0: return "vc_without_f0";
  }
  return "";
}

std::string ProfileSystemName(Profile p) {
  switch (p) {
    case Profile::kTts: return "Flow-TTS";
    case Profile::kTtsWithF0: return "Flow-TTS with f0";
    case Profile::kVc: return "Flow-VC";
    case Profile::kVcWithoutF0: return "Flow-VC w/o f0";
  }
  return "";
}

ModeProfile ModeVariant(Profile p) {
  switch (p) {
    case Profile::kTts: return {false, false};
    case Profile::kTtsWithF0: return {true, false};
    case Profile::kVc: return {true, true};
    case Profile::kVcWithoutF0: return {false, true};
  }
  return {};
}

ConditionOptions ConditionOptionsFor(Profile p, F0MeanMode mean) {
  ConditionOptions options;
  options.use_f0 = ModeVariant(p).use_f0;
  options.f0_mean = mean;
  return options;
}

MelTensor SamplePrior(std::size_t frames, std::size_t bins, double temperature,
                      std::uint64_t seed) {
  if (!(temperature >= 0.0)) {
    throw ConfigError("temperature must be >= 0");
  }
  std::vector<double> z(frames * bins, 0.0);
  if (temperature > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, temperature);
    for (double& v : z) v = normal(rng);
  }
  return MelTensor(frames, bins, std::move(z));
}

MelTensor TtsSynthesize(const flow::FlowModel& model, const ConditionSet& cond,
                        double temperature, std::uint64_t seed) {
  MelTensor z =
      SamplePrior(cond.frames(), model.config().bins, temperature, seed);
  return model.Inverse(z, FrameConditionMatrix(cond));
}

ConditionSet WithSpeaker(ConditionSet cond, SpeakerEmbedding speaker) {
  if (speaker.dim() != cond.speaker.dim()) {
    throw ShapeError("speaker embedding has dimension " +
                     std::to_string(speaker.dim()) + ", expected " +
                     std::to_string(cond.speaker.dim()));
  }
  cond.speaker = std::move(speaker);
  return cond;
}

MelTensor VcConvert(const flow::FlowModel& model, const MelTensor& mel,
                    const ConditionSet& source_cond,
                    const SpeakerEmbedding& target) {
  if (mel.frames() != source_cond.frames()) {
    throw ShapeError("vc: mel has " + std::to_string(mel.frames()) +
                     " frames but the conditions have " +
                     std::to_string(source_cond.frames()));
  }
  ConditionSet target_cond = WithSpeaker(source_cond, target);
  MelTensor z = model.Forward(mel, FrameConditionMatrix(source_cond)).z;
  return model.Inverse(z, FrameConditionMatrix(target_cond));
}

}  // namespace nfvc::modes
