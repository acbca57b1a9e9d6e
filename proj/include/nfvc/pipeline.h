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


#ifndef NFVC_PIPELINE_H_
#define NFVC_PIPELINE_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "nfvc/conditioning.h"
#include "nfvc/dataset.h"
#include "nfvc/flow.h"
#include "nfvc/optimizer.h"
#include "nfvc/speakergen.h"
#include "nfvc/synthworld.h"
#include "nfvc/train.h"

namespace nfvc {

// Everything `train` needs beyond the dataset. Keys match the text
// config file one to one.
struct ModelConfig {
  // flow
  std::size_t num_steps = 8;
  std::size_t hidden = 64;
  std::size_t kernel = 3;
  double log_scale_clamp = 5.0;
  std::uint64_t flow_seed = 7;
  // conditioning
  std::size_t phoneme_dim = 16;
  std::size_t accent_dim = 8;
  std::size_t speaker_dim = 256;
  bool use_f0 = true;
  std::string f0_mean = "all";  // "all" or "voiced"
  std::uint64_t table_seed = 11;
  std::uint64_t encoder_seed = 13;
  // flow training
  std::size_t epochs = 30;
  std::size_t batch_size = 8;
  double learning_rate = 1e-3;
  std::uint64_t train_seed = 17;
  std::size_t holdout_every = 10;  // 0 disables the held-out split
  // speaker generator
  bool train_generator = true;
  std::size_t generator_epochs = 800;
  std::size_t generator_components = 10;
  std::size_t generator_hidden = 256;
  std::size_t generator_locale_dim = 8;
  double generator_learning_rate = 1e-3;
  double generator_stddev_floor = 1e-3;
  std::uint64_t generator_seed = 19;

  F0MeanMode f0_mean_mode() const;
  void Validate() const;
  nlohmann::json ToJson() const;
  // Unknown keys raise ConfigError naming the key.
  static ModelConfig FromJson(const nlohmann::json& j);
};

// Held-out utterances are every `every`-th index starting at every - 1.
struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> held_out;
};
Split SplitUtterances(std::size_t count, std::size_t every);

// Trained artefacts that inference needs.
class ModelBundle {
 public:
  // Builds conditioning tables and an uninitialised flow, and fits the
  // toy encoder and speaker centroids on `train_indices`.
  static ModelBundle Create(ModelConfig config, const Dataset& data,
                            std::span<const std::size_t> train_indices);

  const ModelConfig& config() const { return config_; }
  flow::FlowModel& flow() { return flow_; }
  const flow::FlowModel& flow() const { return flow_; }
  const ConditionTables& tables() const { return tables_; }
  const synth::ToyEncoder& encoder() const { return encoder_; }
  const SpeakerTable& speakers() const { return speakers_; }
  SpeakerTable& mutable_speakers() { return speakers_; }
  const std::vector<std::string>& locales() const { return locales_; }
  std::size_t bins() const { return flow_.config().bins; }

  ConditionOptions condition_options() const;
  ConditionSet Conditions(const Utterance& utt,
                          const SpeakerSource& speaker) const;
  std::vector<flow::TrainExample> Examples(
      const Dataset& data, std::span<const std::size_t> indices) const;

  std::optional<OptimizerState>& optimizer() { return optimizer_; }
  std::optional<speakergen::SpeakerGenerator>& generator() {
    return generator_;
  }
  const std::optional<speakergen::SpeakerGenerator>& generator() const {
    return generator_;
  }
  // Centroids with their locales, as generator training data.
  std::vector<speakergen::LabelledEmbedding> SpeakerPool() const;

  // Rounds every stored value to float32 so the in-memory model equals
  // what Save writes.
  void QuantizeToFloat32();

  Checkpoint ToCheckpoint() const;
  void Save(const std::filesystem::path& path) const;
  static ModelBundle FromCheckpoint(const Checkpoint& ckpt);
  static ModelBundle Load(const std::filesystem::path& path);

 private:
  ModelBundle(ModelConfig config, flow::FlowModel flow, ConditionTables tables,
              synth::ToyEncoder encoder, std::vector<std::string> locales);

  ModelConfig config_;
  flow::FlowModel flow_;
  ConditionTables tables_;
  synth::ToyEncoder encoder_;
  SpeakerTable speakers_;
  std::vector<std::string> locales_;
  std::optional<OptimizerState> optimizer_;
  std::optional<speakergen::SpeakerGenerator> generator_;
};

}  // namespace nfvc

#endif  // NFVC_PIPELINE_H_
