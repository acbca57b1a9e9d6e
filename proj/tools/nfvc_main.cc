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

#include <iostream>

#include <glog/logging.h>

#include "CLI11.hpp"
#include "nfvc/cli/commands.h"
#include "nfvc/error.h"

namespace {

void AddUtteranceFlags(CLI::App* cmd, nfvc::cli::UtteranceOptions* u) {
  cmd->add_option("--data", u->data, "Dataset directory");
  cmd->add_option("--utterance", u->utterance, "Utterance id inside --data");
  cmd->add_option("--phonemes", u->phonemes, "Phoneme sequence, e.g. \"p3 p7\"");
  cmd->add_option("--durations", u->durations, "Frames per phoneme, e.g. \"3 2\"");
  cmd->add_option("--f0", u->f0, "Per-frame f0 in Hz, 0 when unvoiced");
  cmd->add_option("--accent", u->accent, "Locale name or id");
}

void AddSpeakerFlags(CLI::App* cmd, nfvc::cli::SpeakerOptions* s,
                     const std::string& prefix) {
  cmd->add_option("--" + prefix + "speaker", s->id, "Speaker id in the model");
  cmd->add_option("--" + prefix + "embedding", s->embedding_file,
                  "Embedding list file; the first entry is used");
  cmd->add_option("--" + prefix + "speaker-mel", s->mel,
                  "Mel tensor file to encode as the speaker");
}

void AddSynthesisFlags(CLI::App* cmd, nfvc::cli::SynthesisOptions* o) {
  cmd->add_option("--model", o->model, "Model checkpoint")->required();
  cmd->add_option("--profile", o->profile,
                  "tts, tts_with_f0, vc, vc_without_f0 or the system names");
  cmd->add_option("--temperature", o->temperature, "Prior temperature")
      ->capture_default_str();
  cmd->add_option("--seed", o->seed, "Sampling seed")->capture_default_str();
  cmd->add_option("--out", o->out, "Output mel tensor file")->required();
  AddUtteranceFlags(cmd, &o->utterance);
}

}  // namespace

int main(int argc, char** argv) {
  google::InitGoogleLogging(argv[0]);
  FLAGS_logtostderr = true;

  CLI::App app{"Conditional normalising-flow voice toolkit"};
  app.require_subcommand(1);

  nfvc::cli::DataGenOptions data_gen;
  auto* cmd_data = app.add_subcommand("data-gen", "Generate a synthetic corpus");
  cmd_data->add_option("--config", data_gen.config, "Corpus config file");
  cmd_data->add_option("--out", data_gen.out, "Dataset directory")->required();
  cmd_data->add_option("--seed", data_gen.seed, "Override the config seed");

  nfvc::cli::TrainOptions train;
  auto* cmd_train = app.add_subcommand("train", "Train the flow and speaker generator");
  cmd_train->add_option("--data", train.data, "Dataset directory")->required();
  cmd_train->add_option("--config", train.config, "Model config file");
  cmd_train->add_option("--out", train.out, "Output directory")->required();
  cmd_train->add_option("--resume", train.resume, "Checkpoint to continue");
  cmd_train->add_option("--epochs", train.epochs, "Override the epoch count");

  nfvc::cli::SynthesisOptions tts;
  auto* cmd_tts = app.add_subcommand("tts", "Sample a mel from the prior");
  AddSynthesisFlags(cmd_tts, &tts);
  AddSpeakerFlags(cmd_tts, &tts.speaker, "");

  nfvc::cli::SynthesisOptions vc;
  auto* cmd_vc = app.add_subcommand("vc", "Convert a mel to another speaker");
  AddSynthesisFlags(cmd_vc, &vc);
  cmd_vc->add_option("--mel", vc.utterance.mel, "Source mel tensor file");
  AddSpeakerFlags(cmd_vc, &vc.speaker, "target-");
  AddSpeakerFlags(cmd_vc, &vc.source_speaker, "source-");

  nfvc::cli::GenSpeakersOptions gen;
  auto* cmd_gen = app.add_subcommand("gen-speakers", "Sample new speaker embeddings");
  cmd_gen->add_option("--model", gen.model, "Model checkpoint")->required();
  cmd_gen->add_option("--locale", gen.locale, "Locale name or id")->required();
  cmd_gen->add_option("--count", gen.count, "Number of voices")
      ->capture_default_str();
  cmd_gen->add_option("--seed", gen.seed, "Sampling seed")->capture_default_str();
  cmd_gen->add_option("--out", gen.out, "Output JSON file")->required();

  nfvc::cli::EvalOptions ev;
  auto* cmd_eval = app.add_subcommand("eval", "Embedding metrics and reports");
  cmd_eval->add_option("--model", ev.model, "Model checkpoint")->required();
  cmd_eval->add_option("--data", ev.data, "Dataset directory");
  cmd_eval->add_option("--metric", ev.metric, "secs, variance, nn or pca")
      ->required();
  cmd_eval->add_option("--out", ev.out, "Report directory")->required();
  cmd_eval->add_option("--embeddings", ev.embeddings,
                       "New-voice list from gen-speakers");
  cmd_eval->add_option("--mel", ev.mels, "Mel tensor files to score (secs)");
  cmd_eval->add_option("--target-speaker", ev.target_speaker,
                       "Reference speaker id (secs)");
  cmd_eval->add_option("--variance-target", ev.variance_target,
                       "Explained variance for the component count (pca)")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*cmd_data) nfvc::cli::RunDataGen(data_gen);
    if (*cmd_train) nfvc::cli::RunTrain(train);
    if (*cmd_tts) nfvc::cli::RunTts(tts);
    if (*cmd_vc) nfvc::cli::RunVc(vc);
    if (*cmd_gen) nfvc::cli::RunGenSpeakers(gen);
    if (*cmd_eval) nfvc::cli::RunEval(ev);
  } catch (const nfvc::Error& e) {
    LOG(ERROR) << e.what();
    return nfvc::ExitCodeFor(e);
  } catch (const std::filesystem::filesystem_error& e) {
    LOG(ERROR) << e.what();
    return 3;
  }
  return 0;
}
