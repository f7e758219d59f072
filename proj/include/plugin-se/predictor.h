// plugin-se/predictor.h

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

#ifndef PLUGIN_SE_PREDICTOR_H_
#define PLUGIN_SE_PREDICTOR_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "plugin-se/downstream.h"
#include "plugin-se/enhancer.h"
#include "plugin-se/gate.h"
#include "plugin-se/nn-core.h"

namespace plugin_se {

/// Task embeddings, one row per task slot: E_task = M.row(id).
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(RowMatrix m);

  static EmbeddingTable Zeros(int capacity, int dim);
  /// Entries uniform in [-scale, scale].
  static EmbeddingTable Random(int capacity, int dim, double scale,
                               uint64_t seed);

  int capacity() const { return static_cast<int>(m_.rows()); }
  int dim() const { return static_cast<int>(m_.cols()); }
  const RowMatrix &matrix() const { return m_; }
  RowMatrix &mutable_matrix() { return m_; }

  /// Throws InvalidArgument for ids outside [0, capacity).
  Eigen::VectorXd Lookup(int id) const;

 private:
  RowMatrix m_;
};

struct PredictorConfig {
  int capacity = kNumTasks;
  int embed_dim = 10;
  std::vector<int> hidden = {256, 256, 256};
  uint64_t seed = 1;
  double embedding_scale = 0.5;
};

/// w_hat = f_map([M[id], B_NI]) with ReLU hidden layers and a sigmoid output.
class WeightPredictor {
 public:
  WeightPredictor() = default;
  WeightPredictor(EmbeddingTable table, DenseNetwork net);

  /// Random embeddings, Glorot hidden layers and a zero output layer, so
  /// every prediction starts at exactly 0.5 but the hidden layers can learn.
  static WeightPredictor Create(const PredictorConfig &config);
  /// Embeddings and every weight zero.
  static WeightPredictor Zeros(const PredictorConfig &config);
  /// Predicts `w` for every input; 0 and 1 are reproduced exactly.
  static WeightPredictor Constant(double w, const PredictorConfig &config = {});

  const EmbeddingTable &table() const { return table_; }
  EmbeddingTable &mutable_table() { return table_; }
  const DenseNetwork &net() const { return net_; }
  DenseNetwork &mutable_net() { return net_; }

  Eigen::VectorXd Input(const TaskDescriptor &d) const;
  double PredictValue(const TaskDescriptor &d) const;
  GateWeight Predict(const TaskDescriptor &d) const {
    return GateWeight::Clamped(PredictValue(d));
  }

  nlohmann::json ToJson() const;
  static WeightPredictor FromJson(const nlohmann::json &j);

 private:
  EmbeddingTable table_;
  DenseNetwork net_;
};

// ---------------------------------------------------------------------------

struct GateTarget {
  TaskDescriptor descriptor;
  GateWeight w;
  std::string provenance;  // "published" or "optimized"
  std::string note;        // free text, e.g. the model the row came from
};

/// Descriptors are unique. Loading merges rows that repeat a descriptor with
/// the same w; a repeated descriptor with a different w is an error.
class GateTargetTable {
 public:
  void Add(const GateTarget &row);
  const std::vector<GateTarget> &rows() const { return rows_; }
  size_t size() const { return rows_.size(); }
  const GateTarget *Find(const TaskDescriptor &d) const;

  /// JSON array of {task, task_id, noise_injection, w, provenance[, note]}.
  nlohmann::json ToJson() const;
  static GateTargetTable FromJson(const nlohmann::json &j);
  /// Number of entries in the array before duplicates were merged.
  size_t source_rows() const { return source_rows_; }

 private:
  std::vector<GateTarget> rows_;
  size_t source_rows_ = 0;
};

/// The published relationship table: ASR/NI 0.9, SV/NI 0.56 (two models),
/// SV/clean 0.02, SE 0, Representation/clean 0.01.
nlohmann::json ReferenceGateTargetsJson();

/// One OptimizeGate run per descriptor. `models` must hold a downstream model
/// for every descriptor (SE may be the identity); `corpora` maps each
/// descriptor to its gate corpus.
GateTargetTable BuildTargetTable(
    const std::vector<TaskDescriptor> &pairs, const MaskEnhancer &enhancer,
    const std::map<TaskDescriptor, DownstreamModel> &models,
    const std::map<TaskDescriptor, Batch> &corpora,
    const GateOptions &options = {}, Execution exec = Execution::kParallel);

struct PredictorTrainOptions {
  int epochs = 3000;
  AdamConfig adam{1e-3, 0.9, 0.999, 1e-8, 0.9, 500};
};

struct PredictorTrainResult {
  WeightPredictor predictor;
  double final_mse = 0.0;
  std::vector<CurvePoint> curve;  // MSE before each epoch's update
};

/// Full-batch joint training of the embeddings and the mapping network on
/// the mean squared error to the table targets.
PredictorTrainResult TrainPredictor(const WeightPredictor &init,
                                    const GateTargetTable &table,
                                    const PredictorTrainOptions &options = {});

double PredictorMse(const WeightPredictor &p, const GateTargetTable &table);

struct InferenceResult {
  GateWeight w_hat;
  Waveform s_hat;
  Waveform s_mix;
  FeatureDistribution v_x;  // empty for the SE identity model
};

/// w_hat is predicted first; then s_hat = enhance(x), s_mix = MixGate(s_hat,
/// x, w_hat) and v_x = infer(downstream, s_mix).
InferenceResult RunInference(const Waveform &x, const TaskDescriptor &task,
                             const MaskEnhancer &enhancer,
                             const DownstreamModel &downstream,
                             const WeightPredictor &predictor);

}  // namespace plugin_se

#endif  // PLUGIN_SE_PREDICTOR_H_
