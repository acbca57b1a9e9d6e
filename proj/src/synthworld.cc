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

#include "nfvc/synthworld.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "nfvc/error.h"

namespace nfvc::synth {
namespace {

constexpr std::array<const char*, 6> kLocaleNames = {
    "american", "australian", "british", "canadian", "indian", "welsh"};

template <typename T>
void ReadField(const nlohmann::json& j, const std::string& key, T* out) {
  try {
    *out = j.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type");
  }
}

double SquaredDistance(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

}  // namespace

std::string LocaleName(std::size_t index) {
  if (index < kLocaleNames.size()) return kLocaleNames[index];
  return std::string(kLocaleNames[index % kLocaleNames.size()]) +
         std::to_string(index / kLocaleNames.size());
}

void SynthConfig::Validate() const {
  auto positive = [](const char* name, double v) {
    if (!(v > 0.0)) {
      throw ConfigError(std::string("config key '") + name +
                        "' must be positive");
    }
  };
  positive("num_speakers", static_cast<double>(num_speakers));
  positive("num_locales", static_cast<double>(num_locales));
  positive("bins", static_cast<double>(bins));
  positive("phoneme_count", static_cast<double>(phoneme_count));
  positive("num_utterances", static_cast<double>(num_utterances));
  positive("min_frames", static_cast<double>(min_frames));
  positive("min_duration", min_duration);
  positive("bias_scale", bias_scale);
  positive("speaker_gap", speaker_gap);
  positive("pattern_scale", pattern_scale);
  if (noise_std < 0.0) throw ConfigError("config key 'noise_std' must be >= 0");
  if (f0_gain < 0.0) throw ConfigError("config key 'f0_gain' must be >= 0");
  if (max_frames < min_frames) {
    throw ConfigError("config key 'max_frames' must be >= min_frames");
  }
  if (max_duration < min_duration) {
    throw ConfigError("config key 'max_duration' must be >= min_duration");
  }
  if (num_locales > num_speakers) {
    throw ConfigError("config key 'num_locales' exceeds num_speakers");
  }
  if (!(noise_std < speaker_gap / 4.0)) {
    throw ConfigError(
        "config key 'noise_std' must stay below speaker_gap / 4 so speakers "
        "remain identifiable");
  }
}

nlohmann::json SynthConfig::ToJson() const {
  return {{"num_speakers", num_speakers},   {"num_locales", num_locales},
          {"bins", bins},                   {"phoneme_count", phoneme_count},
          {"num_utterances", num_utterances}, {"min_frames", min_frames},
          {"max_frames", max_frames},       {"min_duration", min_duration},
          {"max_duration", max_duration},   {"noise_std", noise_std},
          {"bias_scale", bias_scale},       {"speaker_gap", speaker_gap},
          {"pattern_scale", pattern_scale}, {"f0_gain", f0_gain},
          {"seed", seed}};
}

SynthConfig SynthConfig::FromJson(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("synth config must be an object");
  SynthConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "num_speakers") ReadField(value, key, &c.num_speakers);
    else if (key == "num_locales") ReadField(value, key, &c.num_locales);
    else if (key == "bins") ReadField(value, key, &c.bins);
    else if (key == "phoneme_count") ReadField(value, key, &c.phoneme_count);
    else if (key == "num_utterances") ReadField(value, key, &c.num_utterances);
    else if (key == "min_frames") ReadField(value, key, &c.min_frames);
    else if (key == "max_frames") ReadField(value, key, &c.max_frames);
    else if (key == "min_duration") ReadField(value, key, &c.min_duration);
    else if (key == "max_duration") ReadField(value, key, &c.max_duration);
    else if (key == "noise_std") ReadField(value, key, &c.noise_std);
    else if (key == "bias_scale") ReadField(value, key, &c.bias_scale);
    else if (key == "speaker_gap") ReadField(value, key, &c.speaker_gap);
    else if (key == "pattern_scale") ReadField(value, key, &c.pattern_scale);
    else if (key == "f0_gain") ReadField(value, key, &c.f0_gain);
    else if (key == "seed") ReadField(value, key, &c.seed);
    else throw ConfigError("unknown config key '" + key + "'");
  }
  c.Validate();
  return c;
}

SynthWorld::SynthWorld(const SynthConfig& config) : config_(config) {
  config_.Validate();
  std::mt19937_64 rng(config_.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t d = config_.bins;

  patterns_ = Matrix(config_.phoneme_count, d);
  for (double& v : patterns_.mutable_values()) {
    v = config_.pattern_scale * normal(rng);
  }
  f0_direction_.resize(d);
  for (double& v : f0_direction_) v = config_.f0_gain * normal(rng);

  std::uniform_real_distribution<double> f0_range(std::log(90.0),
                                                  std::log(250.0));
  const double gap2 = config_.speaker_gap * config_.speaker_gap;
  for (std::size_t s = 0; s < config_.num_speakers; ++s) {
    SynthSpeaker spk;
    spk.locale = static_cast<int>(s % config_.num_locales);
    spk.base_log_f0 = f0_range(rng);
    bool placed = false;
    for (int attempt = 0; attempt < 10000 && !placed; ++attempt) {
      spk.bias.assign(d, 0.0);
      for (double& v : spk.bias) v = config_.bias_scale * normal(rng);
      placed = std::all_of(speakers_.begin(), speakers_.end(),
                           [&](const SynthSpeaker& other) {
                             return SquaredDistance(spk.bias, other.bias) >=
                                    gap2;
                           });
    }
    if (!placed) {
      throw ConfigError(
          "config key 'speaker_gap' cannot be met for this many speakers");
    }
    speakers_.push_back(std::move(spk));
  }
}

void SynthWorld::RandomText(std::size_t frames, std::uint64_t seed,
                            std::vector<int>* phonemes,
                            std::vector<int>* durations) const {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> phone(
      0, static_cast<int>(config_.phoneme_count) - 1);
  std::uniform_int_distribution<int> dur(config_.min_duration,
                                         config_.max_duration);
  phonemes->clear();
  durations->clear();
  std::size_t total = 0;
  while (total < frames) {
    int d = dur(rng);
    d = static_cast<int>(std::min<std::size_t>(d, frames - total));
    phonemes->push_back(phone(rng));
    durations->push_back(d);
    total += static_cast<std::size_t>(d);
  }
}

Utterance SynthWorld::Render(int speaker, std::vector<int> phonemes,
                             std::vector<int> durations,
                             std::uint64_t prosody_seed,
                             std::uint64_t noise_seed, std::string id) const {
  if (speaker < 0 || static_cast<std::size_t>(speaker) >= speakers_.size()) {
    throw DataError("unknown synth speaker " + std::to_string(speaker));
  }
  const SynthSpeaker& spk = speakers_[static_cast<std::size_t>(speaker)];
  Utterance utt;
  utt.id = std::move(id);
  utt.speaker = speaker;
  utt.accent = spk.locale;
  utt.phonemes = std::move(phonemes);
  utt.durations = std::move(durations);
  for (int p : utt.phonemes) {
    if (p < 0 || static_cast<std::size_t>(p) >= config_.phoneme_count) {
      throw DataError("unknown phoneme id " + std::to_string(p));
    }
  }
  const std::size_t t = utt.frames();
  const std::size_t d = config_.bins;

  // Smooth sentence contour: slow sinusoid plus declination.
  std::mt19937_64 prng(prosody_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double cycles = 0.5 + 1.5 * unit(prng);
  const double phase = 2.0 * std::numbers::pi * unit(prng);
  const double depth = 0.1 + 0.1 * unit(prng);
  const double decline = 0.05 + 0.1 * unit(prng);

  std::mt19937_64 nrng(noise_seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  Matrix mel(t, d);
  utt.f0_hz.assign(t, 0.0);
  std::size_t frame = 0;
  for (std::size_t i = 0; i < utt.phonemes.size(); ++i) {
    const int ph = utt.phonemes[i];
    const bool voiced = IsVoiced(ph);
    for (int r = 0; r < utt.durations[i]; ++r, ++frame) {
      const double pos = t > 1 ? static_cast<double>(frame) / (t - 1) : 0.0;
      const double dlog =
          depth * std::sin(2.0 * std::numbers::pi * cycles * pos + phase) -
          decline * (pos - 0.5);
      if (voiced) utt.f0_hz[frame] = std::exp(spk.base_log_f0 + dlog);
      auto row = mel.row(frame);
      for (std::size_t c = 0; c < d; ++c) {
        double v = patterns_(static_cast<std::size_t>(ph), c) + spk.bias[c];
        if (voiced) v += f0_direction_[c] * dlog;
        if (config_.noise_std > 0.0) v += config_.noise_std * noise(nrng);
        row[c] = v;
      }
    }
  }
  utt.mel = MelTensor(std::move(mel));
  return utt;
}

Dataset SynthWorld::GenerateCorpus() const {
  Dataset data;
  data.bins = config_.bins;
  data.phoneme_count = config_.phoneme_count;
  for (std::size_t l = 0; l < config_.num_locales; ++l) {
    data.locales.push_back(LocaleName(l));
  }
  for (std::size_t s = 0; s < speakers_.size(); ++s) {
    data.speakers.push_back({static_cast<int>(s), speakers_[s].locale});
  }
  std::mt19937_64 rng(config_.seed ^ 0x9E3779B97F4A7C15ull);
  std::uniform_int_distribution<std::size_t> length(config_.min_frames,
                                                    config_.max_frames);
  for (std::size_t u = 0; u < config_.num_utterances; ++u) {
    const std::size_t frames = length(rng);
    const std::uint64_t text_seed = rng();
    const std::uint64_t prosody_seed = rng();
    const std::uint64_t noise_seed = rng();
    std::vector<int> phonemes, durations;
    RandomText(frames, text_seed, &phonemes, &durations);
    char id[32];
    std::snprintf(id, sizeof(id), "utt%05zu", u);
    data.utterances.push_back(
        Render(static_cast<int>(u % speakers_.size()), std::move(phonemes),
               std::move(durations), prosody_seed, noise_seed, id));
  }
  data.generator = config_.ToJson();
  return data;
}

ToyEncoder::ToyEncoder(Matrix projection, std::vector<double> global_mean)
    : projection_(std::move(projection)), global_mean_(std::move(global_mean)) {
  if (projection_.cols() != global_mean_.size() || projection_.rows() == 0) {
    throw ShapeError("toy encoder: projection " +
                     ShapeString(projection_.rows(), projection_.cols()) +
                     " does not match a mean of size " +
                     std::to_string(global_mean_.size()));
  }
}

ToyEncoder ToyEncoder::Fit(std::span<const MelTensor> mels, std::size_t dim,
                           std::uint64_t seed) {
  if (mels.empty()) throw DataError("toy encoder: no frames to fit");
  const std::size_t d = mels.front().bins();
  std::vector<double> mean(d, 0.0);
  std::size_t frames = 0;
  for (const MelTensor& m : mels) {
    if (m.bins() != d) throw ShapeError("toy encoder: inconsistent bins");
    for (std::size_t t = 0; t < m.frames(); ++t) {
      for (std::size_t c = 0; c < d; ++c) mean[c] += m(t, c);
    }
    frames += m.frames();
  }
  for (double& v : mean) v /= static_cast<double>(frames);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix projection(dim, d);
  for (double& v : projection.mutable_values()) v = normal(rng);
  return ToyEncoder(std::move(projection), std::move(mean));
}

SpeakerEmbedding ToyEncoder::Encode(const MelTensor& mel) const {
  const std::size_t d = global_mean_.size();
  if (mel.bins() != d) {
    throw ShapeError("toy encoder: mel has " + std::to_string(mel.bins()) +
                     " bins, encoder expects " + std::to_string(d));
  }
  if (mel.frames() == 0) throw DataError("toy encoder: empty mel");
  std::vector<double> centred(d, 0.0);
  for (std::size_t t = 0; t < mel.frames(); ++t) {
    for (std::size_t c = 0; c < d; ++c) centred[c] += mel(t, c);
  }
  for (std::size_t c = 0; c < d; ++c) {
    centred[c] = centred[c] / static_cast<double>(mel.frames()) -
                 global_mean_[c];
  }
  SpeakerEmbedding out;
  out.values.assign(projection_.rows(), 0.0);
  double norm2 = 0.0;
  for (std::size_t r = 0; r < projection_.rows(); ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < d; ++c) acc += projection_(r, c) * centred[c];
    out.values[r] = acc;
    norm2 += acc * acc;
  }
  if (!(norm2 > 0.0)) {
    throw DataError("toy encoder: utterance mean equals the corpus mean; "
                    "embedding undefined");
  }
  const double inv = 1.0 / std::sqrt(norm2);
  for (double& v : out.values) v *= inv;
  return out;
}

SpeakerTable SpeakerCentroids(const Dataset& data,
                              std::span<const std::size_t> utterances,
                              const SpeakerEncoder& encoder) {
  std::map<int, std::vector<double>> sums;
  for (std::size_t idx : utterances) {
    const Utterance& u = data.utterances.at(idx);
    if (!u.mel) throw DataError("utterance " + u.id + " has no mel");
    SpeakerEmbedding e = encoder.Encode(*u.mel);
    auto& acc = sums[u.speaker];
    if (acc.empty()) acc.assign(e.dim(), 0.0);
    for (std::size_t i = 0; i < e.dim(); ++i) acc[i] += e.values[i];
  }
  SpeakerTable table;
  for (auto& [speaker, acc] : sums) {
    double norm2 = 0.0;
    for (double v : acc) norm2 += v * v;
    const double inv = 1.0 / std::sqrt(norm2);
    for (double& v : acc) v *= inv;
    int locale = 0;
    for (const SpeakerInfo& s : data.speakers) {
      if (s.id == speaker) locale = s.locale;
    }
    table.Set(speaker, SpeakerEmbedding{std::move(acc)}, locale);
  }
  return table;
}

}  // namespace nfvc::synth
