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

#include "nfvc/cli/commands.h"

#include <charconv>
#include <filesystem>
#include <random>
#include <sstream>

#include <glog/logging.h>

#include "json.hpp"
#include "nfvc/binary_io.h"
#include "nfvc/cli/config.h"
#include "nfvc/dataset.h"
#include "nfvc/error.h"
#include "nfvc/eval.h"
#include "nfvc/modes.h"
#include "nfvc/pipeline.h"
#include "nfvc/report.h"
#include "nfvc/speakergen.h"
#include "nfvc/synthworld.h"
#include "nfvc/train.h"

namespace nfvc::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void Require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

template <typename T>
std::vector<T> ParseNumbers(const std::string& text, const char* what) {
  std::vector<T> out;
  std::istringstream in(text);
  std::string token;
  while (in >> token) {
    T value{};
    const char* end = token.data() + token.size();
    auto [ptr, ec] = std::from_chars(token.data(), end, value);
    if (ec != std::errc() || ptr != end) {
      throw ConfigError(std::string("cannot parse ") + what + " value '" +
                        token + "'");
    }
    out.push_back(value);
  }
  return out;
}

int ResolveLocale(const std::vector<std::string>& locales,
                  const std::string& text) {
  for (std::size_t i = 0; i < locales.size(); ++i) {
    if (locales[i] == text) return static_cast<int>(i);
  }
  int id = -1;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), id);
  if (ec == std::errc() && ptr == text.data() + text.size() && id >= 0 &&
      static_cast<std::size_t>(id) < locales.size()) {
    return id;
  }
  throw DataError("unknown locale '" + text + "'");
}

std::vector<SpeakerEmbedding> ReadEmbeddingList(const fs::path& path) {
  json j;
  try {
    j = json::parse(ReadFileBytes(path));
  } catch (const json::exception& e) {
    throw DataError("cannot parse embeddings " + path.string() + ": " +
                    e.what());
  }
  if (!j.is_array()) throw DataError(path.string() + " is not a JSON list");
  std::vector<SpeakerEmbedding> out;
  try {
    for (const json& entry : j) {
      out.push_back({entry.at("values").get<std::vector<double>>()});
    }
  } catch (const json::exception& e) {
    throw DataError("malformed embedding entry in " + path.string() + ": " +
                    e.what());
  }
  return out;
}

MelTensor ReadMel(const fs::path& path) {
  return MelTensor(ReadTensorFile(path));
}

// Builds the utterance to synthesise or convert from a dataset entry or
// from explicit phonemes/durations/f0.
Utterance ResolveUtterance(const UtteranceOptions& o,
                           const ModelBundle& bundle,
                           std::optional<Dataset>* data_out) {
  Utterance utt;
  if (!o.utterance.empty()) {
    Require(!o.data.empty(), "--utterance needs --data");
    *data_out = LoadDataset(o.data);
    utt = (*data_out)->Find(o.utterance);
  } else {
    Require(!o.phonemes.empty() && !o.durations.empty(),
            "give either --data/--utterance or --phonemes and --durations");
    utt.id = "input";
    utt.phonemes = ParsePhonemes(o.phonemes);
    utt.durations = ParseNumbers<int>(o.durations, "duration");
    if (!o.f0.empty()) utt.f0_hz = ParseNumbers<double>(o.f0, "f0");
    if (!o.mel.empty()) utt.mel = ReadMel(o.mel);
  }
  if (!o.accent.empty()) utt.accent = ResolveLocale(bundle.locales(), o.accent);
  utt.Validate();
  return utt;
}

SpeakerEmbedding ResolveSpeakerOption(const SpeakerOptions& o,
                                      const ModelBundle& bundle,
                                      const char* role) {
  const int given = (o.id ? 1 : 0) + (o.embedding_file.empty() ? 0 : 1) +
                    (o.mel.empty() ? 0 : 1);
  Require(given == 1, std::string("give exactly one ") + role +
                          " speaker source (id, embedding file or mel)");
  if (o.id) return bundle.speakers().Get(*o.id);
  if (!o.embedding_file.empty()) {
    std::vector<SpeakerEmbedding> list = ReadEmbeddingList(o.embedding_file);
    if (list.empty()) throw DataError(o.embedding_file + " is empty");
    return list.front();
  }
  return bundle.encoder().Encode(ReadMel(o.mel));
}

void CheckProfile(const ModelBundle& bundle, modes::Profile profile) {
  const bool wants_f0 = modes::ModeVariant(profile).use_f0;
  if (wants_f0 != bundle.config().use_f0) {
    throw ConfigError("profile '" + modes::ProfileSystemName(profile) +
                      "' needs a model trained with use_f0 = " +
                      (wants_f0 ? "true" : "false"));
  }
}

ConditionSet ConditionsFor(const ModelBundle& bundle, const Utterance& utt,
                           modes::Profile profile,
                           const SpeakerEmbedding& speaker) {
  ConditionOptions options =
      modes::ConditionOptionsFor(profile, bundle.config().f0_mean_mode());
  if (options.use_f0 && utt.f0_hz.empty()) {
    throw DataError("profile '" + modes::ProfileSystemName(profile) +
                    "' needs an f0 contour for utterance " + utt.id);
  }
  return BuildConditionSet(utt, bundle.tables(), speaker, options);
}

std::vector<eval::PoolEntry> PoolEntries(const ModelBundle& bundle) {
  std::vector<eval::PoolEntry> pool;
  for (int id : bundle.speakers().Ids()) {
    pool.push_back({id, bundle.speakers().Get(id)});
  }
  return pool;
}

std::string Fmt(double v) { return report::FormatDouble(v); }

}  // namespace

void RunDataGen(const DataGenOptions& opts) {
  Require(!opts.out.empty(), "--out is required");
  json config = synth::SynthConfig().ToJson();
  if (!opts.config.empty()) {
    config = MergeConfig(config, LoadConfigFile(opts.config));
  }
  if (opts.seed) config["seed"] = *opts.seed;
  const synth::SynthConfig sc = synth::SynthConfig::FromJson(config);
  const Dataset data = synth::SynthWorld(sc).GenerateCorpus();
  SaveDataset(data, opts.out);
  EchoConfig(opts.out, sc.ToJson());
  LOG(INFO) << "wrote " << data.utterances.size() << " utterances to "
            << opts.out;
}

void RunTrain(const TrainOptions& opts) {
  Require(!opts.data.empty(), "--data is required");
  Require(!opts.out.empty(), "--out is required");
  const Dataset data = LoadDataset(opts.data);

  std::optional<ModelBundle> bundle;
  ModelConfig config;
  if (!opts.resume.empty()) {
    Require(opts.config.empty(), "--resume takes its config from the checkpoint");
    bundle = ModelBundle::Load(opts.resume);
    config = bundle->config();
  } else {
    if (!opts.config.empty()) {
      config = ModelConfig::FromJson(
          MergeConfig(ModelConfig().ToJson(), LoadConfigFile(opts.config)));
    }
  }
  if (opts.epochs) config.epochs = *opts.epochs;
  config.Validate();
  const Split split = SplitUtterances(data.utterances.size(),
                                      config.holdout_every);
  if (!bundle) bundle = ModelBundle::Create(config, data, split.train);
  if (bundle->bins() != data.bins) {
    throw DataError("dataset has " + std::to_string(data.bins) +
                    " bins, the checkpoint expects " +
                    std::to_string(bundle->bins()));
  }

  fs::create_directories(opts.out);
  EchoConfig(opts.out, config.ToJson());

  if (config.train_generator && !bundle->generator()) {
    speakergen::GeneratorConfig gc;
    gc.embedding_dim = config.speaker_dim;
    gc.num_locales = bundle->locales().size();
    gc.locale_dim = config.generator_locale_dim;
    gc.hidden = config.generator_hidden;
    gc.components = config.generator_components;
    gc.stddev_floor = config.generator_stddev_floor;
    speakergen::SpeakerGenerator gen(gc, config.generator_seed);
    speakergen::TrainConfig tc;
    tc.epochs = config.generator_epochs;
    tc.adam.learning_rate = config.generator_learning_rate;
    tc.seed = config.generator_seed;
    const auto pool = bundle->SpeakerPool();
    const speakergen::TrainReport r = speakergen::Train(gen, pool, tc);
    LOG(INFO) << "speaker generator: mean log-likelihood "
              << r.mean_log_likelihood.front() << " -> "
              << r.mean_log_likelihood.back();
    bundle->generator() = std::move(gen);
  }

  const std::vector<flow::TrainExample> examples =
      bundle->Examples(data, split.train);
  flow::TrainConfig tc;
  tc.epochs = config.epochs;
  tc.batch_size = config.batch_size;
  tc.adam.learning_rate = config.learning_rate;
  tc.seed = config.train_seed;
  OptimizerState state;
  if (bundle->optimizer()) state = *bundle->optimizer();
  const std::int64_t first_step = state.step;

  report::CsvTable csv({"epoch", "nll", "optimizer_step"});
  const flow::TrainReport r = flow::Train(
      bundle->flow(), examples, tc, state, [&](std::size_t epoch, double nll) {
        LOG(INFO) << "epoch " << epoch << " nll " << nll;
        if (epoch > 0) {
          csv.AddRow({std::to_string(epoch), Fmt(nll),
                      std::to_string(state.step)});
        }
      });
  bundle->optimizer() = state;
  LOG(INFO) << "optimizer steps " << first_step << " -> " << state.step;
  csv.Write(fs::path(opts.out) / "nll.csv");
  bundle->QuantizeToFloat32();
  bundle->Save(fs::path(opts.out) / "model.nfvc");
  if (r.aborted) {
    throw NumericError("training aborted: " + r.abort_reason +
                       "; saved the restored model to " + opts.out);
  }
}

void RunTts(const SynthesisOptions& opts) {
  Require(!opts.model.empty() && !opts.out.empty(),
          "--model and --out are required");
  const ModelBundle bundle = ModelBundle::Load(opts.model);
  const modes::Profile profile =
      modes::ParseProfile(opts.profile.empty() ? (bundle.config().use_f0
                                                      ? "tts_with_f0"
                                                      : "tts")
                                               : opts.profile);
  Require(!modes::ModeVariant(profile).reuse_source_latent,
          "tts needs a tts profile, got '" + modes::ProfileKey(profile) + "'");
  CheckProfile(bundle, profile);
  std::optional<Dataset> data;
  const Utterance utt = ResolveUtterance(opts.utterance, bundle, &data);
  const SpeakerEmbedding speaker =
      ResolveSpeakerOption(opts.speaker, bundle, "target");
  const ConditionSet cond = ConditionsFor(bundle, utt, profile, speaker);
  const MelTensor mel =
      modes::TtsSynthesize(bundle.flow(), cond, opts.temperature, opts.seed);
  WriteTensorFile(opts.out, mel.matrix());
}

void RunVc(const SynthesisOptions& opts) {
  Require(!opts.model.empty() && !opts.out.empty(),
          "--model and --out are required");
  const ModelBundle bundle = ModelBundle::Load(opts.model);
  const modes::Profile profile =
      modes::ParseProfile(opts.profile.empty() ? (bundle.config().use_f0
                                                      ? "vc"
                                                      : "vc_without_f0")
                                               : opts.profile);
  Require(modes::ModeVariant(profile).reuse_source_latent,
          "vc needs a vc profile, got '" + modes::ProfileKey(profile) + "'");
  CheckProfile(bundle, profile);
  std::optional<Dataset> data;
  const Utterance utt = ResolveUtterance(opts.utterance, bundle, &data);
  if (!utt.mel) throw DataError("vc needs a source mel (--mel or --utterance)");
  SpeakerEmbedding source;
  const SpeakerOptions& so = opts.source_speaker;
  if (so.id || !so.embedding_file.empty() || !so.mel.empty()) {
    source = ResolveSpeakerOption(so, bundle, "source");
  } else if (bundle.speakers().Has(utt.speaker)) {
    source = bundle.speakers().Get(utt.speaker);
  } else {
    source = bundle.encoder().Encode(*utt.mel);
  }
  const SpeakerEmbedding target =
      ResolveSpeakerOption(opts.speaker, bundle, "target");
  const ConditionSet cond = ConditionsFor(bundle, utt, profile, source);
  const MelTensor mel = modes::VcConvert(bundle.flow(), *utt.mel, cond, target);
  WriteTensorFile(opts.out, mel.matrix());
}

void RunGenSpeakers(const GenSpeakersOptions& opts) {
  Require(!opts.model.empty() && !opts.out.empty(),
          "--model and --out are required");
  const ModelBundle bundle = ModelBundle::Load(opts.model);
  if (!bundle.generator()) {
    throw DataError("checkpoint has no trained speaker generator");
  }
  Require(!opts.locale.empty(), "--locale is required");
  const int locale = ResolveLocale(bundle.locales(), opts.locale);
  const speakergen::GmmSpec spec = bundle.generator()->Forward(locale);
  std::mt19937_64 seeds(opts.seed);
  json out = json::array();
  for (std::size_t i = 0; i < opts.count; ++i) {
    const SpeakerEmbedding e = speakergen::SampleSpeaker(spec, seeds());
    out.push_back({{"id", "new-" + std::to_string(i)},
                   {"locale", bundle.locales()[locale]},
                   {"values", e.values}});
  }
  WriteFileBytes(opts.out, out.dump(1) + "\n");
}

void RunEval(const EvalOptions& opts) {
  Require(!opts.model.empty() && !opts.out.empty(),
          "--model and --out are required");
  const std::string& metric = opts.metric;
  Require(metric == "secs" || metric == "variance" || metric == "nn" ||
              metric == "pca",
          "unknown metric '" + metric + "' (expected secs, variance, nn or pca)");
  const ModelBundle bundle = ModelBundle::Load(opts.model);
  const fs::path out(opts.out);
  fs::create_directories(out);
  EchoConfig(out, {{"model", opts.model},
                   {"data", opts.data},
                   {"metric", metric},
                   {"embeddings", opts.embeddings},
                   {"mels", opts.mels},
                   {"target_speaker", opts.target_speaker
                                          ? json(*opts.target_speaker)
                                          : json(nullptr)},
                   {"variance_target", opts.variance_target}});
  std::vector<SpeakerEmbedding> new_voices;
  if (!opts.embeddings.empty()) new_voices = ReadEmbeddingList(opts.embeddings);
  const std::vector<eval::PoolEntry> pool = PoolEntries(bundle);

  if (metric == "secs") {
    report::CsvTable csv({"item", "target_speaker", "secs"});
    std::vector<std::pair<std::string, SpeakerEmbedding>> items;
    for (std::size_t i = 0; i < new_voices.size(); ++i) {
      items.emplace_back("embedding-" + std::to_string(i), new_voices[i]);
    }
    for (const std::string& m : opts.mels) {
      items.emplace_back(m, bundle.encoder().Encode(ReadMel(m)));
    }
    if (!items.empty()) {
      Require(opts.target_speaker.has_value(),
              "secs on given embeddings or mels needs --target-speaker");
      const SpeakerEmbedding& target = bundle.speakers().Get(*opts.target_speaker);
      std::vector<SpeakerEmbedding> all;
      for (const auto& [name, e] : items) {
        csv.AddRow({name, std::to_string(*opts.target_speaker),
                    Fmt(eval::Secs(std::span(&e, 1), target))});
        all.push_back(e);
      }
      csv.AddRow({"mean", std::to_string(*opts.target_speaker),
                  Fmt(eval::Secs(all, target))});
    } else {
      Require(!opts.data.empty(),
              "secs needs --data, --embeddings or --mel inputs");
      const Dataset data = LoadDataset(opts.data);
      for (const Utterance& u : data.utterances) {
        if (!u.mel || !bundle.speakers().Has(u.speaker)) continue;
        const SpeakerEmbedding e = bundle.encoder().Encode(*u.mel);
        csv.AddRow({u.id, std::to_string(u.speaker),
                    Fmt(eval::Secs(std::span(&e, 1),
                                   bundle.speakers().Get(u.speaker)))});
      }
    }
    csv.Write(out / "secs.csv");
  } else if (metric == "variance") {
    report::CsvTable csv({"set", "count", "variance_sum"});
    std::vector<SpeakerEmbedding> pool_embeddings;
    for (const auto& e : pool) pool_embeddings.push_back(e.embedding);
    csv.AddRow({"training", std::to_string(pool_embeddings.size()),
                Fmt(eval::VarianceSum(pool_embeddings))});
    if (!new_voices.empty()) {
      csv.AddRow({"new", std::to_string(new_voices.size()),
                  Fmt(eval::VarianceSum(new_voices))});
    }
    csv.Write(out / "variance.csv");
  } else if (metric == "nn") {
    Require(!new_voices.empty(), "nn needs --embeddings");
    const eval::NewVoiceReport r = eval::NewVoiceDistanceReport(new_voices, pool);
    report::CsvTable csv({"voice", "nn", "distance_to_nn", "nn2nn",
                          "nn_to_nn2nn", "further"});
    for (const eval::NewVoiceRow& row : r.rows) {
      csv.AddRow({std::to_string(row.index), std::to_string(row.nn_id),
                  Fmt(row.distance_to_nn), std::to_string(row.nn2nn_id),
                  Fmt(row.nn_to_nn2nn),
                  row.distance_to_nn > row.nn_to_nn2nn ? "1" : "0"});
    }
    csv.Write(out / "nn.csv");
    report::CsvTable summary({"voices", "fraction_further"});
    summary.AddRow({std::to_string(r.rows.size()), Fmt(r.fraction_further)});
    summary.Write(out / "nn_summary.csv");
  } else {
    std::vector<SpeakerEmbedding> all;
    std::vector<std::pair<std::string, bool>> labels;
    for (const auto& e : pool) {
      all.push_back(e.embedding);
      labels.emplace_back("speaker-" + std::to_string(e.id), false);
    }
    for (std::size_t i = 0; i < new_voices.size(); ++i) {
      all.push_back(new_voices[i]);
      labels.emplace_back("new-" + std::to_string(i), true);
    }
    const eval::PcaResult pca =
        eval::PcaFit(eval::StackEmbeddings(all), opts.variance_target);
    report::CsvTable coords({"label", "set", "pc1", "pc2"});
    std::vector<report::ScatterPoint> points;
    for (std::size_t i = 0; i < all.size(); ++i) {
      const double x = pca.coords2d(i, 0), y = pca.coords2d(i, 1);
      coords.AddRow({labels[i].first, labels[i].second ? "new" : "training",
                     Fmt(x), Fmt(y)});
      points.push_back({x, y, labels[i].second, labels[i].first});
    }
    coords.Write(out / "pca_coords.csv");
    report::CsvTable ratios({"component", "explained_ratio", "cumulative"});
    double cumulative = 0.0;
    for (std::size_t r = 0; r < pca.explained_ratio.size(); ++r) {
      cumulative += pca.explained_ratio[r];
      ratios.AddRow({std::to_string(r + 1), Fmt(pca.explained_ratio[r]),
                     Fmt(cumulative)});
    }
    ratios.Write(out / "pca_explained.csv");
    report::WriteText(out / "pca_summary.json",
                      json({{"k", pca.k},
                            {"variance_target", opts.variance_target}})
                              .dump(2) + "\n");
    report::WriteScatterSvg(out / "pca.svg", points,
                            "Speaker embeddings, first two principal components");
  }
}

}  // namespace nfvc::cli
