// src/predictor.cc

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

#include "plugin-se/predictor.h"

#include <cmath>
#include <sstream>

#include "plugin-se/errors.h"
#include "plugin-se/rng.h"

namespace plugin_se {

namespace {

constexpr int kPredictorFormatVersion = 1;
constexpr double kSaturated = 1000.0;

std::vector<int> MapDims(const PredictorConfig &c) {
  std::vector<int> dims = {c.embed_dim + 1};
  for (int h : c.hidden) {
    if (h < 1) throw InvalidArgument("predictor: hidden sizes must be >= 1");
    dims.push_back(h);
  }
  dims.push_back(1);
  return dims;
}

std::vector<Activation> MapActivations(const PredictorConfig &c) {
  std::vector<Activation> acts(c.hidden.size(), Activation::kRelu);
  acts.push_back(Activation::kSigmoid);
  return acts;
}

void CheckConfig(const PredictorConfig &c) {
  if (c.capacity < 1 || c.embed_dim < 1)
    throw InvalidArgument("predictor: capacity and embed_dim must be >= 1");
}

}  // namespace

EmbeddingTable::EmbeddingTable(RowMatrix m) : m_(std::move(m)) {
  if (m_.rows() < 1 || m_.cols() < 1)
    throw InvalidArgument("EmbeddingTable: empty matrix");
  if (!m_.allFinite()) throw InvalidArgument("EmbeddingTable: non-finite entry");
}

EmbeddingTable EmbeddingTable::Zeros(int capacity, int dim) {
  return EmbeddingTable(RowMatrix::Zero(capacity, dim));
}

EmbeddingTable EmbeddingTable::Random(int capacity, int dim, double scale,
                                      uint64_t seed) {
  Rng rng(seed);
  RowMatrix m(capacity, dim);
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = rng.Uniform(-scale, scale);
  return EmbeddingTable(std::move(m));
}

Eigen::VectorXd EmbeddingTable::Lookup(int id) const {
  if (id < 0 || id >= capacity()) {
    std::ostringstream os;
    os << "task id " << id << " outside embedding capacity " << capacity();
    throw InvalidArgument(os.str());
  }
  return m_.row(id).transpose();
}

WeightPredictor::WeightPredictor(EmbeddingTable table, DenseNetwork net)
    : table_(std::move(table)), net_(std::move(net)) {
  if (net_.input_dim() != table_.dim() + 1 || net_.output_dim() != 1)
    throw InvalidArgument("WeightPredictor: network must map embed_dim + 1 -> 1");
  if (net_.layer(net_.num_layers() - 1).activation != Activation::kSigmoid)
    throw InvalidArgument("WeightPredictor: output layer must be sigmoid");
}

WeightPredictor WeightPredictor::Create(const PredictorConfig &c) {
  CheckConfig(c);
  DenseNetwork net =
      DenseNetwork::Glorot(MapDims(c), MapActivations(c), DeriveSeed(c.seed, 1));
  DenseLayer &out = net.mutable_layer(net.num_layers() - 1);
  out.weights.setZero();
  out.biases.setZero();
  return WeightPredictor(EmbeddingTable::Random(c.capacity, c.embed_dim,
                                                c.embedding_scale,
                                                DeriveSeed(c.seed, 2)),
                         std::move(net));
}

WeightPredictor WeightPredictor::Zeros(const PredictorConfig &c) {
  CheckConfig(c);
  return WeightPredictor(EmbeddingTable::Zeros(c.capacity, c.embed_dim),
                         DenseNetwork::Zeros(MapDims(c), MapActivations(c)));
}

WeightPredictor WeightPredictor::Constant(double w, const PredictorConfig &c) {
  const GateWeight gw(w);
  WeightPredictor p = Zeros(c);
  double logit;
  if (gw.value() == 0.0)
    logit = -kSaturated;
  else if (gw.value() == 1.0)
    logit = kSaturated;
  else
    logit = std::log(gw.value() / (1.0 - gw.value()));
  p.net_.mutable_layer(p.net_.num_layers() - 1).biases.setConstant(logit);
  return p;
}

Eigen::VectorXd WeightPredictor::Input(const TaskDescriptor &d) const {
  Eigen::VectorXd in(table_.dim() + 1);
  in.head(table_.dim()) = table_.Lookup(d.task_id);
  in(table_.dim()) = d.noise_injection ? 1.0 : 0.0;
  return in;
}

double WeightPredictor::PredictValue(const TaskDescriptor &d) const {
  return net_.Forward(Input(d))(0);
}

nlohmann::json WeightPredictor::ToJson() const {
  const RowMatrix &m = table_.matrix();
  return {{"format_version", kPredictorFormatVersion},
          {"kind", "weight_predictor"},
          {"embedding",
           {{"capacity", m.rows()},
            {"dim", m.cols()},
            {"data", std::vector<double>(m.data(), m.data() + m.size())}}},
          {"net", net_.ToJson()}};
}

WeightPredictor WeightPredictor::FromJson(const nlohmann::json &j) {
  if (j.at("format_version").get<int>() != kPredictorFormatVersion)
    throw SchemaError("predictor checkpoint: unsupported format_version");
  if (j.at("kind").get<std::string>() != "weight_predictor")
    throw SchemaError("predictor checkpoint: wrong kind");
  const auto &e = j.at("embedding");
  const auto data = e.at("data").get<std::vector<double>>();
  const Eigen::Index rows = e.at("capacity").get<Eigen::Index>();
  const Eigen::Index cols = e.at("dim").get<Eigen::Index>();
  if (static_cast<Eigen::Index>(data.size()) != rows * cols)
    throw SchemaError("predictor checkpoint: embedding size mismatch");
  return WeightPredictor(
      EmbeddingTable(Eigen::Map<const RowMatrix>(data.data(), rows, cols)),
      DenseNetwork::FromJson(j.at("net")));
}

// ---------------------------------------------------------------------------

void GateTargetTable::Add(const GateTarget &row) {
  row.descriptor.Validate();
  for (const GateTarget &r : rows_) {
    if (r.descriptor == row.descriptor) {
      if (r.w.value() == row.w.value()) return;
      throw InvalidArgument("gate target table: conflicting targets for " +
                            row.descriptor.ToString());
    }
  }
  rows_.push_back(row);
}

const GateTarget *GateTargetTable::Find(const TaskDescriptor &d) const {
  for (const GateTarget &r : rows_)
    if (r.descriptor == d) return &r;
  return nullptr;
}

nlohmann::json GateTargetTable::ToJson() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const GateTarget &r : rows_) {
    nlohmann::json j = {{"task", TaskName(r.descriptor.kind())},
                        {"task_id", r.descriptor.task_id},
                        {"noise_injection", r.descriptor.noise_injection},
                        {"w", r.w.value()},
                        {"provenance", r.provenance}};
    if (!r.note.empty()) j["note"] = r.note;
    arr.push_back(j);
  }
  return arr;
}

GateTargetTable GateTargetTable::FromJson(const nlohmann::json &j) {
  if (!j.is_array()) throw SchemaError("gate target table: expected a JSON array");
  GateTargetTable t;
  for (const auto &row : j) {
    if (!row.is_object()) throw SchemaError("gate target table: rows must be objects");
    for (auto it = row.begin(); it != row.end(); ++it) {
      static const char *kKeys[] = {"task", "task_id", "noise_injection", "w",
                                    "provenance", "note"};
      bool known = false;
      for (const char *k : kKeys) known = known || it.key() == k;
      if (!known)
        throw SchemaError("gate target table: unknown key '" + it.key() + "'");
    }
    GateTarget g;
    try {
      g.descriptor = {row.at("task_id").get<int>(),
                      row.at("noise_injection").get<bool>()};
      g.descriptor.Validate();
      if (ParseTaskName(row.at("task").get<std::string>()) != g.descriptor.kind())
        throw SchemaError("gate target table: task name does not match task_id");
      g.w = GateWeight(row.at("w").get<double>());
      g.provenance = row.at("provenance").get<std::string>();
      if (g.provenance != "published" && g.provenance != "optimized")
        throw SchemaError("gate target table: provenance must be published or optimized");
      if (row.contains("note")) g.note = row.at("note").get<std::string>();
    } catch (const nlohmann::json::exception &e) {
      throw SchemaError(std::string("gate target table: ") + e.what());
    } catch (const InvalidArgument &e) {
      throw SchemaError(std::string("gate target table: ") + e.what());
    }
    t.Add(g);
    ++t.source_rows_;
  }
  return t;
}

nlohmann::json ReferenceGateTargetsJson() {
  auto row = [](const char *task, int id, bool ni, double w, const char *note) {
    return nlohmann::json{{"task", task}, {"task_id", id}, {"noise_injection", ni},
                          {"w", w}, {"provenance", "published"}, {"note", note}};
  };
  return nlohmann::json::array({
      row("ASR", 2, true, 0.9, "Conformer"),
      row("SV", 1, true, 0.56, "ResNet34"),
      row("SV", 1, true, 0.56, "ECAPA-TDNN"),
      row("SV", 1, false, 0.02, "ResNet34 w/o"),
      row("SE", 0, false, 0.0, "none"),
      row("Representation", 3, false, 0.01, "Hubert"),
  });
}

GateTargetTable BuildTargetTable(
    const std::vector<TaskDescriptor> &pairs, const MaskEnhancer &enhancer,
    const std::map<TaskDescriptor, DownstreamModel> &models,
    const std::map<TaskDescriptor, Batch> &corpora, const GateOptions &options,
    Execution exec) {
  GateTargetTable table;
  for (const TaskDescriptor &d : pairs) {
    d.Validate();
    auto m = models.find(d);
    if (m == models.end())
      throw InvalidArgument("no downstream model for " + d.ToString());
    auto c = corpora.find(d);
    if (c == corpora.end())
      throw InvalidArgument("no gate corpus for " + d.ToString());
    const GateObjective objective(enhancer, m->second, c->second, exec);
    const GateResult r = OptimizeGate(objective, options);
    table.Add({d, r.w_star, "optimized", ""});
  }
  return table;
}

// ---------------------------------------------------------------------------

double PredictorMse(const WeightPredictor &p, const GateTargetTable &table) {
  if (table.size() == 0) throw InvalidArgument("PredictorMse: empty table");
  double mse = 0.0;
  for (const GateTarget &r : table.rows()) {
    const double d = p.PredictValue(r.descriptor) - r.w.value();
    mse += d * d / table.size();
  }
  return mse;
}

PredictorTrainResult TrainPredictor(const WeightPredictor &init,
                                    const GateTargetTable &table,
                                    const PredictorTrainOptions &options) {
  if (table.size() == 0) throw InvalidArgument("TrainPredictor: empty table");
  if (options.epochs < 0) throw InvalidArgument("TrainPredictor: epochs < 0");
  PredictorTrainResult result{init, 0.0, {}};
  WeightPredictor &p = result.predictor;
  const int rows = static_cast<int>(table.size());
  const int dim = p.table().dim();
  for (const GateTarget &r : table.rows()) r.descriptor.Validate(p.table().capacity());

  std::vector<double> net_params = p.net().Parameters();
  const size_t net_count = net_params.size();
  std::vector<double> params = net_params;
  const RowMatrix &m0 = p.table().matrix();
  params.insert(params.end(), m0.data(), m0.data() + m0.size());
  AdamState adam(static_cast<int>(params.size()), options.adam);

  Eigen::VectorXd target(rows);
  for (int r = 0; r < rows; ++r) target(r) = table.rows()[r].w.value();

  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    adam.set_epoch(epoch);
    Eigen::MatrixXd input(dim + 1, rows);
    for (int r = 0; r < rows; ++r) input.col(r) = p.Input(table.rows()[r].descriptor);
    ForwardCache cache;
    const Eigen::MatrixXd out = p.net().Forward(input, &cache);
    const Eigen::VectorXd diff = out.row(0).transpose() - target;
    result.curve.push_back({epoch, diff.squaredNorm() / rows});
    const Eigen::MatrixXd grad_out = (2.0 / rows) * diff.transpose();
    const BackwardResult br = p.net().Backward(cache, grad_out);

    std::vector<double> grad(params.size(), 0.0);
    std::copy(br.parameter_gradient.data(),
              br.parameter_gradient.data() + net_count, grad.begin());
    for (int r = 0; r < rows; ++r) {
      const int id = table.rows()[r].descriptor.task_id;
      for (int k = 0; k < dim; ++k)
        grad[net_count + static_cast<size_t>(id) * dim + k] += br.input_gradient(k, r);
    }
    adam.Step(params, grad);
    p.mutable_net().SetParameters(std::span<const double>(params.data(), net_count));
    RowMatrix &m = p.mutable_table().mutable_matrix();
    std::copy(params.begin() + net_count, params.end(), m.data());
  }
  result.final_mse = PredictorMse(p, table);
  return result;
}

InferenceResult RunInference(const Waveform &x, const TaskDescriptor &task,
                             const MaskEnhancer &enhancer,
                             const DownstreamModel &downstream,
                             const WeightPredictor &predictor) {
  if (task != downstream.descriptor())
    throw InvalidArgument("RunInference: asked for " + task.ToString() +
                          " but the downstream model is " +
                          downstream.descriptor().ToString());
  InferenceResult r;
  r.w_hat = predictor.Predict(task);
  r.s_hat = enhancer.Enhance(x);
  r.s_mix = MixGate(r.s_hat, x, r.w_hat);
  if (!downstream.is_identity()) r.v_x = downstream.Infer(r.s_mix);
  return r;
}

}  // namespace plugin_se
