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

#include "nfvc/pipeline.h"

#include <cmath>

#include "nfvc/binary_io.h"
#include "nfvc/error.h"

namespace nfvc {
namespace {

template <typename Config, typename F>
void VisitFields(Config& c, F&& f) {
  f("num_steps", c.num_steps);
  f("hidden", c.hidden);
  f("kernel", c.kernel);
  f("log_scale_clamp", c.log_scale_clamp);
  f("flow_seed", c.flow_seed);
  f("phoneme_dim", c.phoneme_dim);
  f("accent_dim", c.accent_dim);
  f("speaker_dim", c.speaker_dim);
  f("use_f0", c.use_f0);
  f("f0_mean", c.f0_mean);
  f("table_seed", c.table_seed);
  f("encoder_seed", c.encoder_seed);
  f("epochs", c.epochs);
  f("batch_size", c.batch_size);
  f("learning_rate", c.learning_rate);
  f("train_seed", c.train_seed);
  f("holdout_every", c.holdout_every);
  f("train_generator", c.train_generator);
  f("generator_epochs", c.generator_epochs);
  f("generator_components", c.generator_components);
  f("generator_hidden", c.generator_hidden);
  f("generator_locale_dim", c.generator_locale_dim);
  f("generator_learning_rate", c.generator_learning_rate);
  f("generator_stddev_floor", c.generator_stddev_floor);
  f("generator_seed", c.generator_seed);
}

void RoundInPlace(std::span<double> values) {
  for (double& v : values) v = static_cast<double>(static_cast<float>(v));
}

Matrix RoundedCopy(const Matrix& m) {
  Matrix out = m;
  RoundInPlace(out.mutable_values());
  return out;
}

}  // namespace

F0MeanMode ModelConfig::f0_mean_mode() const {
  return f0_mean == "voiced" ? F0MeanMode::kVoicedFrames
                             : F0MeanMode::kAllFrames;
}

void ModelConfig::Validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  require(num_steps >= 1, "num_steps must be at least 1");
  require(hidden >= 1, "hidden must be at least 1");
  require(kernel % 2 == 1, "kernel must be odd");
  require(log_scale_clamp > 0.0, "log_scale_clamp must be positive");
  require(phoneme_dim >= 1 && accent_dim >= 1 && speaker_dim >= 1,
          "embedding dimensions must be positive");
  require(f0_mean == "all" || f0_mean == "voiced",
          "f0_mean must be \"all\" or \"voiced\", got \"" + f0_mean + "\"");
  require(batch_size >= 1, "batch_size must be at least 1");
  require(learning_rate >= 0.0, "learning_rate must be non-negative");
  require(holdout_every == 0 || holdout_every >= 2,
          "holdout_every must be 0 or at least 2");
  require(generator_components >= 1 && generator_hidden >= 1 &&
              generator_locale_dim >= 1,
          "generator sizes must be positive");
  require(generator_learning_rate >= 0.0,
          "generator_learning_rate must be non-negative");
  require(generator_stddev_floor > 0.0,
          "generator_stddev_floor must be positive");
}

nlohmann::json ModelConfig::ToJson() const {
  nlohmann::json j = nlohmann::json::object();
  VisitFields(*this, [&j](const char* key, const auto& value) {
    j[key] = value;
  });
  return j;
}

ModelConfig ModelConfig::FromJson(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("model config must be an object");
  ModelConfig c;
  for (const auto& [key, value] : j.items()) {
    bool found = false;
    VisitFields(c, [&](const char* name, auto& field) {
      if (key != name) return;
      found = true;
      try {
        field = value.get<std::remove_reference_t<decltype(field)>>();
      } catch (const nlohmann::json::exception&) {
        throw ConfigError("config key '" + key + "' has the wrong type: " +
                          value.dump());
      }
    });
    if (!found) throw ConfigError("unknown config key '" + key + "'");
  }
  c.Validate();
  return c;
}

Split SplitUtterances(std::size_t count, std::size_t every) {
  Split split;
  for (std::size_t i = 0; i < count; ++i) {
    if (every > 0 && i % every == every - 1) {
      split.held_out.push_back(i);
    } else {
      split.train.push_back(i);
    }
  }
  return split;
}

ModelBundle::ModelBundle(ModelConfig config, flow::FlowModel flow,
                         ConditionTables tables, synth::ToyEncoder encoder,
                         std::vector<std::string> locales)
    : config_(std::move(config)),
      flow_(std::move(flow)),
      tables_(std::move(tables)),
      encoder_(std::move(encoder)),
      locales_(std::move(locales)) {}

ModelBundle ModelBundle::Create(ModelConfig config, const Dataset& data,
                                std::span<const std::size_t> train_indices) {
  config.Validate();
  if (train_indices.empty()) throw DataError("no training utterances");
  if (data.locales.empty()) throw DataError("dataset declares no locales");
  std::vector<MelTensor> mels;
  for (std::size_t idx : train_indices) {
    const Utterance& u = data.utterances.at(idx);
    if (!u.mel) throw DataError("utterance " + u.id + " has no mel");
    mels.push_back(*u.mel);
  }
  flow::FlowConfig fc;
  fc.bins = data.bins;
  fc.cond_width = ConditionWidth(config.phoneme_dim, config.speaker_dim,
                                 config.accent_dim);
  fc.num_steps = config.num_steps;
  fc.hidden = config.hidden;
  fc.kernel = config.kernel;
  fc.log_scale_clamp = config.log_scale_clamp;
  ConditionTables tables =
      ConditionTables::Make(data.phoneme_count, config.phoneme_dim,
                            data.locales.size(), config.accent_dim,
                            config.table_seed);
  synth::ToyEncoder encoder =
      synth::ToyEncoder::Fit(mels, config.speaker_dim, config.encoder_seed);
  ModelBundle bundle(config, flow::FlowModel(fc, config.flow_seed),
                     std::move(tables), std::move(encoder), data.locales);
  bundle.speakers_ =
      synth::SpeakerCentroids(data, train_indices, bundle.encoder_);
  return bundle;
}

ConditionOptions ModelBundle::condition_options() const {
  return ConditionOptions{config_.use_f0, config_.f0_mean_mode()};
}

ConditionSet ModelBundle::Conditions(const Utterance& utt,
                                     const SpeakerSource& speaker) const {
  return BuildConditionSet(utt, tables_, speaker, condition_options());
}

std::vector<flow::TrainExample> ModelBundle::Examples(
    const Dataset& data, std::span<const std::size_t> indices) const {
  std::vector<flow::TrainExample> out;
  out.reserve(indices.size());
  for (std::size_t idx : indices) {
    const Utterance& u = data.utterances.at(idx);
    if (!u.mel) throw DataError("utterance " + u.id + " has no mel");
    out.push_back({*u.mel, FrameConditionMatrix(Conditions(
                               u, LookupSpeaker{&speakers_}))});
  }
  return out;
}

std::vector<speakergen::LabelledEmbedding> ModelBundle::SpeakerPool() const {
  std::vector<speakergen::LabelledEmbedding> pool;
  for (int id : speakers_.Ids()) {
    pool.push_back({speakers_.Get(id), speakers_.LocaleOf(id)});
  }
  return pool;
}

void ModelBundle::QuantizeToFloat32() {
  for (auto& [name, t] : flow_.NamedParameters()) {
    Tensor handle = t;
    RoundInPlace(handle.mutable_values());
  }
  if (generator_) {
    for (auto& [name, t] : generator_->NamedParameters()) {
      Tensor handle = t;
      RoundInPlace(handle.mutable_values());
    }
  }
  tables_.phonemes = EmbeddingTable(RoundedCopy(tables_.phonemes.matrix()));
  tables_.accents = EmbeddingTable(RoundedCopy(tables_.accents.matrix()));
  std::vector<double> mean = encoder_.global_mean();
  RoundInPlace(mean);
  encoder_ = synth::ToyEncoder(RoundedCopy(encoder_.projection()),
                               std::move(mean));
  SpeakerTable rounded;
  for (int id : speakers_.Ids()) {
    SpeakerEmbedding e = speakers_.Get(id);
    RoundInPlace(e.values);
    rounded.Set(id, std::move(e), speakers_.LocaleOf(id));
  }
  speakers_ = std::move(rounded);
  if (optimizer_) {
    for (auto& m : optimizer_->first_moment) RoundInPlace(m);
    for (auto& v : optimizer_->second_moment) RoundInPlace(v);
  }
}

Checkpoint ModelBundle::ToCheckpoint() const {
  Checkpoint ckpt;
  ckpt.metadata()["format"] = "nfvc-model";
  ckpt.metadata()["config"] = config_.ToJson();
  ckpt.metadata()["locales"] = locales_;
  flow_.SaveTo(ckpt, "flow");
  ckpt.Put("tables.phonemes", tables_.phonemes.matrix());
  ckpt.Put("tables.accents", tables_.accents.matrix());
  ckpt.Put("encoder.projection", encoder_.projection());
  ckpt.Put("encoder.mean", Matrix(1, encoder_.global_mean().size(),
                                  encoder_.global_mean()));
  const std::vector<int> ids = speakers_.Ids();
  nlohmann::json speaker_meta = nlohmann::json::array();
  if (!ids.empty()) {
    Matrix rows(ids.size(), speakers_.dim());
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const auto& v = speakers_.Get(ids[i]).values;
      std::copy(v.begin(), v.end(), rows.row(i).begin());
      speaker_meta.push_back(
          {{"id", ids[i]}, {"locale", speakers_.LocaleOf(ids[i])}});
    }
    ckpt.Put("speakers.embeddings", rows);
  }
  ckpt.metadata()["speakers"] = speaker_meta;
  if (optimizer_) {
    const AdamConfig& a = optimizer_->config;
    ckpt.metadata()["optimizer"] = {{"step", optimizer_->step},
                                    {"learning_rate", a.learning_rate},
                                    {"beta1", a.beta1},
                                    {"beta2", a.beta2},
                                    {"epsilon", a.epsilon},
                                    {"slots", optimizer_->first_moment.size()}};
    for (std::size_t i = 0; i < optimizer_->first_moment.size(); ++i) {
      const auto& m = optimizer_->first_moment[i];
      const auto& v = optimizer_->second_moment[i];
      ckpt.Put("optimizer.m" + std::to_string(i), Matrix(1, m.size(), m));
      ckpt.Put("optimizer.v" + std::to_string(i), Matrix(1, v.size(), v));
    }
  }
  if (generator_) generator_->SaveTo(ckpt, "speakergen");
  return ckpt;
}

void ModelBundle::Save(const std::filesystem::path& path) const {
  ToCheckpoint().Save(path);
}

ModelBundle ModelBundle::FromCheckpoint(const Checkpoint& ckpt) {
  const nlohmann::json& meta = ckpt.metadata();
  if (meta.value("format", "") != "nfvc-model") {
    throw DataError("checkpoint is not a model bundle");
  }
  ModelConfig config;
  std::vector<std::string> locales;
  try {
    config = ModelConfig::FromJson(meta.at("config"));
    locales = meta.at("locales").get<std::vector<std::string>>();
  } catch (const ConfigError& e) {
    throw DataError(std::string("checkpoint config invalid: ") + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint metadata incomplete: ") + e.what());
  }
  ConditionTables tables{EmbeddingTable(ckpt.GetMatrix("tables.phonemes")),
                         EmbeddingTable(ckpt.GetMatrix("tables.accents"))};
  std::vector<double> mean = ckpt.Values("encoder.mean");
  synth::ToyEncoder encoder(ckpt.GetMatrix("encoder.projection"),
                            std::move(mean));
  ModelBundle bundle(config, flow::FlowModel::LoadFrom(ckpt, "flow"),
                     std::move(tables), std::move(encoder), locales);
  try {
    const nlohmann::json& speakers = meta.at("speakers");
    if (!speakers.empty()) {
      const Matrix rows = ckpt.GetMatrix("speakers.embeddings");
      if (rows.rows() != speakers.size()) {
        throw DataError("speaker table size does not match its metadata");
      }
      for (std::size_t i = 0; i < speakers.size(); ++i) {
        auto row = rows.row(i);
        bundle.speakers_.Set(speakers[i].at("id").get<int>(),
                             SpeakerEmbedding{{row.begin(), row.end()}},
                             speakers[i].at("locale").get<int>());
      }
    }
    if (meta.contains("optimizer")) {
      const nlohmann::json& o = meta.at("optimizer");
      OptimizerState state;
      state.config.learning_rate = o.at("learning_rate").get<double>();
      state.config.beta1 = o.at("beta1").get<double>();
      state.config.beta2 = o.at("beta2").get<double>();
      state.config.epsilon = o.at("epsilon").get<double>();
      state.step = o.at("step").get<std::int64_t>();
      const std::size_t slots = o.at("slots").get<std::size_t>();
      for (std::size_t i = 0; i < slots; ++i) {
        state.first_moment.push_back(
            ckpt.Values("optimizer.m" + std::to_string(i)));
        state.second_moment.push_back(
            ckpt.Values("optimizer.v" + std::to_string(i)));
      }
      bundle.optimizer_ = std::move(state);
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint metadata incomplete: ") + e.what());
  }
  if (meta.contains("speakergen")) {
    bundle.generator_ =
        speakergen::SpeakerGenerator::LoadFrom(ckpt, "speakergen");
  }
  return bundle;
}

ModelBundle ModelBundle::Load(const std::filesystem::path& path) {
  return FromCheckpoint(Checkpoint::Load(path));
}

}  // namespace nfvc
