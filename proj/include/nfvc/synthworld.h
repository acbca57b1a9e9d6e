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

#ifndef NFVC_SYNTHWORLD_H_
#define NFVC_SYNTHWORLD_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "nfvc/conditioning.h"
#include "nfvc/dataset.h"
#include "nfvc/matrix.h"

namespace nfvc::synth {

// Synthetic corpus with known speaker identities.
//
// Every frame is
//   pattern[phoneme] + bias[speaker] + f0_direction * dlogf0 * voiced + noise
// where dlogf0 is the sentence prosody contour relative to the speaker's
// base log-f0. Voice conversion therefore has an exact target: changing
// speaker A to B shifts every frame by bias[B] - bias[A].
struct SynthConfig {
  std::size_t num_speakers = 8;
  std::size_t num_locales = 2;
  std::size_t bins = 8;
  std::size_t phoneme_count = 24;
  std::size_t num_utterances = 200;
  std::size_t min_frames = 20;
  std::size_t max_frames = 60;
  int min_duration = 2;
  int max_duration = 6;
  double noise_std = 0.1;
  double bias_scale = 1.5;
  double speaker_gap = 2.5;  // minimum pairwise L2 distance of biases
  double pattern_scale = 0.7;
  double f0_gain = 0.5;
  std::uint64_t seed = 1;

  // Throws ConfigError naming the offending field.
  void Validate() const;
  nlohmann::json ToJson() const;
  // Unknown keys are rejected with their name.
  static SynthConfig FromJson(const nlohmann::json& j);
};

struct SynthSpeaker {
  std::vector<double> bias;
  double base_log_f0 = 0.0;
  int locale = 0;
};

std::string LocaleName(std::size_t index);

class SynthWorld {
 public:
  explicit SynthWorld(const SynthConfig& config);

  const SynthConfig& config() const { return config_; }
  const std::vector<SynthSpeaker>& speakers() const { return speakers_; }
  const Matrix& phoneme_patterns() const { return patterns_; }
  const std::vector<double>& f0_direction() const { return f0_direction_; }
  bool IsVoiced(int phoneme) const { return phoneme % 4 != 0; }

  // Renders `phonemes` with `durations` for one speaker. Prosody depends
  // only on `prosody_seed`, noise only on `noise_seed`.
  Utterance Render(int speaker, std::vector<int> phonemes,
                   std::vector<int> durations, std::uint64_t prosody_seed,
                   std::uint64_t noise_seed, std::string id) const;

  // Random phoneme sequence whose durations sum to `frames`.
  void RandomText(std::size_t frames, std::uint64_t seed,
                  std::vector<int>* phonemes, std::vector<int>* durations) const;

  Dataset GenerateCorpus() const;

 private:
  SynthConfig config_;
  std::vector<SynthSpeaker> speakers_;
  Matrix patterns_;
  std::vector<double> f0_direction_;
};

// Stand-in speaker encoder: time-mean of the frames minus the corpus
// mean, mapped through a fixed seeded projection, then L2-normalised.
class ToyEncoder : public SpeakerEncoder {
 public:
  ToyEncoder(Matrix projection, std::vector<double> global_mean);
  // Global mean over every frame of `mels`; Gaussian projection.
  static ToyEncoder Fit(std::span<const MelTensor> mels, std::size_t dim,
                        std::uint64_t seed);

  SpeakerEmbedding Encode(const MelTensor& mel) const override;
  std::size_t dim() const override { return projection_.rows(); }

  const Matrix& projection() const { return projection_; }
  const std::vector<double>& global_mean() const { return global_mean_; }

 private:
  Matrix projection_;  // [dim, bins]
  std::vector<double> global_mean_;
};

// Mean encoder embedding per speaker over `utterances`, renormalised to
// unit length.
SpeakerTable SpeakerCentroids(const Dataset& data,
                              std::span<const std::size_t> utterances,
                              const SpeakerEncoder& encoder);

}  // namespace nfvc::synth

#endif  // NFVC_SYNTHWORLD_H_
