// plugin-se/config.h

// Copyright 2026  plugin-se contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef PLUGIN_SE_CONFIG_H_
#define PLUGIN_SE_CONFIG_H_

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "plugin-se/downstream.h"
#include "plugin-se/enhancer.h"
#include "plugin-se/gate.h"
#include "plugin-se/predictor.h"
#include "plugin-se/signal-core.h"

namespace plugin_se {

constexpr int kConfigFormatVersion = 1;

/// Experiment description read from JSON. Every key is optional except
/// format_version; unknown keys are rejected. Field names match the JSON keys.
struct ExperimentConfig {
  uint64_t seed = 1;

  struct Corpus {
    int train_items = 192;
    int held_out_items = 48;
    double duration_s = 1.0;
    int sample_rate = kDefaultSampleRate;
    std::vector<double> snr_grid_db = {-5, 0, 5, 10, 15, 20};
    std::vector<std::string> noise_kinds = {"white", "pink"};
    int speaker_classes = 4;
    int export_wav_items = 4;  // per corpus, for listening; 0 disables
  } corpus;

  struct Enhancer {
    std::string loss = "si_sdr";
    int epochs = 40;
    int batch_size = 8;
    double lr = 3e-3;
    double decay_gamma = 0.9;
    int decay_period = 10;
    std::vector<int> hidden = {128, 128};
    int frame_length = 256;
    int hop = 128;
    double lambda_cm = 0.01;
    double lambda_ct = 0.01;
    // Downstream model whose distributions feed the cm loss, as "SV/clean".
    std::string cm_downstream = "SV/clean";
  } enhancer;

  struct Downstream {
    std::string task = "SV";
    bool noise_injection = false;
    int epochs = 30;
    int batch_size = 16;
    double lr = 1e-3;
    double decay_gamma = 0.9;
    int decay_period = 10;
    std::vector<int> hidden = {64};
    int class_count = 0;
    std::vector<double> injection_snr_db = {0, 5, 10, 15, 20};
  };
  std::vector<Downstream> downstream;

  struct Gate {
    int items = 48;
    std::vector<double> snr_grid_db = {-5};
    int iterations = 300;
    double lr = 0.05;
    double grid_step = 0.01;
    int sweep_points = 11;
    double sweep_snr_db = -5;
  } gate;

  struct Predictor {
    std::string targets = "optimized";  // or "reference"
    std::string fixture;                // optional path for "reference"
    int epochs = 3000;
    double lr = 1e-3;
    double decay_gamma = 0.9;
    int decay_period = 500;
    int capacity = kNumTasks;
    int embed_dim = 10;
    std::vector<int> hidden = {256, 256, 256};
  } predictor;

  struct Report {
    std::vector<double> eval_snr_db = {-5, 30};
    int eval_items = 48;
  } report;

  ExperimentConfig();  // fills the default downstream list

  /// Throws SchemaError naming the offending key.
  static ExperimentConfig FromJson(const nlohmann::json &j);
  nlohmann::json ToJson() const;
  /// FNV-1a 64 of the canonical JSON dump, as 16 hex digits.
  std::string Hash() const;

  // Derived run settings.
  CorpusConfig EnhancerCorpus(bool held_out) const;
  CorpusConfig TaskCorpus(const TaskDescriptor &d, bool held_out) const;
  CorpusConfig GateCorpus(const TaskDescriptor &d) const;
  CorpusConfig EvalCorpus(const TaskDescriptor &d, double snr_db) const;
  EnhancerConfig EnhancerModel() const;
  EnhancerTrainOptions EnhancerTraining() const;
  DownstreamConfig DownstreamTraining(const Downstream &d) const;
  GateOptions GateOptimization() const;
  PredictorConfig PredictorModel() const;
  PredictorTrainOptions PredictorTraining() const;
  TaskDescriptor Descriptor(const Downstream &d) const;
};

/// Parses "SV/clean", "SV/NI", "ASR/NI", ...
TaskDescriptor ParseDescriptor(const std::string &s);
/// File-name friendly form, e.g. "sv_ni".
std::string DescriptorSlug(const TaskDescriptor &d);

uint64_t Fnv1a64(const std::string &data);

}  // namespace plugin_se

#endif  // PLUGIN_SE_CONFIG_H_
