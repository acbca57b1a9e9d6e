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

#ifndef NFVC_MODES_H_
#define NFVC_MODES_H_

#include <cstdint>
#include <string>
#include <string_view>

#include "nfvc/conditioning.h"
#include "nfvc/flow.h"

namespace nfvc::modes {

// The four flow systems: sampling vs latent reuse, with or without oracle
// f0/vuv conditioning.
enum class Profile { kTts, kTtsWithF0, kVc, kVcWithoutF0 };

struct ModeProfile {
  bool use_f0 = false;
  // true: decode the latent of the source utterance; false: sample the prior.
  bool reuse_source_latent = false;
};

// Accepts "tts", "tts_with_f0", "vc", "vc_without_f0" and the system
// names "Flow-TTS", "Flow-TTS with f0", "Flow-VC", "Flow-VC w/o f0".
// Throws ConfigError otherwise.
Profile ParseProfile(std::string_view name);
std::string ProfileKey(Profile p);
std::string ProfileSystemName(Profile p);
ModeProfile ModeVariant(Profile p);
ConditionOptions ConditionOptionsFor(Profile p,
                                     F0MeanMode mean = F0MeanMode::kAllFrames);

// z ~ N(0, temperature^2 I) drawn from `seed`; temperature 0 gives z = 0.
MelTensor SamplePrior(std::size_t frames, std::size_t bins, double temperature,
                      std::uint64_t seed);

// m = f^-1(z, theta) with z from SamplePrior.
MelTensor TtsSynthesize(const flow::FlowModel& model, const ConditionSet& cond,
                        double temperature, std::uint64_t seed);

// f^-1(f(m, theta[s = s_source]), theta[s = target]); every condition other
// than the speaker stays as in `source_cond`.
MelTensor VcConvert(const flow::FlowModel& model, const MelTensor& mel,
                    const ConditionSet& source_cond,
                    const SpeakerEmbedding& target);

ConditionSet WithSpeaker(ConditionSet cond, SpeakerEmbedding speaker);

}  // namespace nfvc::modes

#endif  // NFVC_MODES_H_
