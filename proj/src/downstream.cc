// src/downstream.cc

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

#include "plugin-se/downstream.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "plugin-se/enhancer.h"
#include "plugin-se/errors.h"
#include "plugin-se/gate.h"
#include "plugin-se/rng.h"

namespace plugin_se {

namespace {

constexpr int kDownstreamFormatVersion = 1;
constexpr int kRepresentationClasses = 4;

int ArgMax(const Eigen::MatrixXd &m, Eigen::Index col) {
  Eigen::Index best;
  m.col(col).maxCoeff(&best);
  return static_cast<int>(best);
}

}  // namespace

TaskKind TaskDescriptor::kind() const {
  Validate();
  return static_cast<TaskKind>(task_id);
}

void TaskDescriptor::Validate(int capacity) const {
  if (task_id < 0 || task_id >= capacity) {
    std::ostringstream os;
    os << "task id " << task_id << " outside [0, " << capacity << ")";
    throw InvalidArgument(os.str());
  }
}

std::string TaskDescriptor::ToString() const {
  std::string name = task_id >= 0 && task_id < kNumTasks
                         ? TaskName(static_cast<TaskKind>(task_id))
                         : "task" + std::to_string(task_id);
  return name + (noise_injection ? "/NI" : "/clean");
}

int DefaultClassCount(TaskKind kind, int speaker_classes) {
  switch (kind) {
    case TaskKind::kSe: return 0;
    case TaskKind::kSv: return speaker_classes;
    case TaskKind::kAsr: return kNumPhoneTemplates;
    case TaskKind::kRepresentation: return kRepresentationClasses;
  }
  return 0;
}

DownstreamModel DownstreamModel::Identity(bool noise_injection) {
  DownstreamModel m;
  m.descriptor_ = {0, noise_injection};
  return m;
}

DownstreamModel DownstreamModel::Create(const DownstreamConfig &config,
                                        const Batch &corpus) {
  config.descriptor.Validate();
  config.stft.Validate();
  if (config.descriptor.task_id == 0)
    return Identity(config.descriptor.noise_injection);

  DownstreamModel m;
  m.descriptor_ = config.descriptor;
  m.stft_ = config.stft;
  const TaskKind kind = config.descriptor.kind();
  m.class_count_ = config.class_count > 0
                       ? config.class_count
                       : DefaultClassCount(kind, corpus.class_count);
  if (m.class_count_ < 2)
    throw InvalidArgument("downstream model needs at least two classes");
  const int bins = m.stft_.num_bins();

  std::vector<int> dims = {bins};
  std::vector<Activation> acts;
  for (int h : config.hidden) {
    if (h < 1) throw InvalidArgument("downstream: hidden sizes must be >= 1");
    dims.push_back(h);
    acts.push_back(Activation::kRelu);
  }
  dims.push_back(m.class_count_);
  acts.push_back(Activation::kSoftmax);
  m.net_ = DenseNetwork::Glorot(dims, acts, DeriveSeed(config.seed, 1));

  if (kind == TaskKind::kRepresentation) {
    if (corpus.size() == 0)
      throw InvalidArgument("representation encoder needs a corpus");
    std::vector<Eigen::MatrixXd> feats(corpus.size());
    for (size_t i = 0; i < corpus.size(); ++i)
      feats[i] = Featurize(corpus.items[i].clean, m.stft_);
    m.encoder_normalizer_ = FeatureNormalizer::Fit(feats);
    Rng rng(DeriveSeed(config.seed, 2));
    m.encoder_.resize(m.class_count_, bins);
    for (Eigen::Index r = 0; r < m.encoder_.rows(); ++r)
      for (Eigen::Index c = 0; c < m.encoder_.cols(); ++c)
        m.encoder_(r, c) = rng.Normal() / std::sqrt(static_cast<double>(bins));
  }
  return m;
}

FeatureDistribution DownstreamModel::InferSpectrum(const ComplexMatrix &spec,
                                                   ForwardCache *cache) const {
  if (is_identity())
    throw InvalidArgument("the SE identity model has no distribution output");
  return net_.Forward(normalizer_.Apply(LogMagnitude(spec)), cache);
}

FeatureDistribution DownstreamModel::Infer(const Waveform &w) const {
  ValidateWaveform(w, "Infer");
  return InferSpectrum(Stft(w, stft_));
}

ComplexMatrix DownstreamModel::SpectrumGradient(
    const ComplexMatrix &spec, const FeatureDistribution &grad_v) const {
  ForwardCache cache;
  InferSpectrum(spec, &cache);
  return SpectrumGradient(spec, cache, grad_v);
}

ComplexMatrix DownstreamModel::SpectrumGradient(
    const ComplexMatrix &spec, const ForwardCache &cache,
    const FeatureDistribution &grad_v) const {
  const BackwardResult br = net_.Backward(cache, grad_v);
  return LogMagnitudeBackward(spec, normalizer_.Backward(br.input_gradient));
}

std::vector<double> DownstreamModel::InputGradient(
    const Waveform &w, const FeatureDistribution &grad_v) const {
  const ComplexMatrix spec = Stft(w, stft_);
  return StftAdjoint(SpectrumGradient(spec, grad_v), stft_, w.size());
}

std::vector<int> DownstreamModel::FrameTargets(const BatchItem &item) const {
  const int frames = stft_.NumFrames(item.clean.size());
  std::vector<int> t(frames, 0);
  switch (descriptor_.kind()) {
    case TaskKind::kSe:
      break;
    case TaskKind::kSv:
      if (item.label < 0 || item.label >= class_count_)
        throw InvalidArgument("speaker label outside the class count");
      std::fill(t.begin(), t.end(), item.label);
      break;
    case TaskKind::kAsr:
      if (item.segments.empty())
        throw InvalidArgument("ASR targets need phone segments");
      for (int m = 0; m < frames; ++m) {
        const size_t center =
            static_cast<size_t>(m) * stft_.hop + stft_.frame_length / 2;
        int label = item.segments.back().label;
        for (const Segment &s : item.segments)
          if (center >= s.begin && center < s.end) {
            label = s.label;
            break;
          }
        if (label < 0 || label >= class_count_)
          throw InvalidArgument("phone label outside the class count");
        t[m] = label;
      }
      break;
    case TaskKind::kRepresentation: {
      const Eigen::MatrixXd z =
          encoder_ * encoder_normalizer_.Apply(Featurize(item.clean, stft_));
      for (int m = 0; m < frames; ++m) t[m] = ArgMax(z, m);
      break;
    }
  }
  return t;
}

nlohmann::json DownstreamModel::ToJson() const {
  nlohmann::json j = {
      {"format_version", kDownstreamFormatVersion},
      {"kind", "downstream"},
      {"descriptor",
       {{"task", TaskName(descriptor_.kind())},
        {"task_id", descriptor_.task_id},
        {"noise_injection", descriptor_.noise_injection}}},
      {"class_count", class_count_},
      {"stft", StftConfigToJson(stft_)},
      {"clean_accuracy", clean_accuracy_}};
  if (!is_identity()) {
    j["normalizer"] = normalizer_.ToJson();
    j["net"] = net_.ToJson();
  }
  if (encoder_.size() > 0) {
    j["encoder"] = {{"rows", encoder_.rows()},
                    {"cols", encoder_.cols()},
                    {"data", std::vector<double>(encoder_.data(),
                                                 encoder_.data() + encoder_.size())}};
    j["encoder_normalizer"] = encoder_normalizer_.ToJson();
  }
  return j;
}

DownstreamModel DownstreamModel::FromJson(const nlohmann::json &j) {
  if (j.at("format_version").get<int>() != kDownstreamFormatVersion)
    throw SchemaError("downstream checkpoint: unsupported format_version");
  if (j.at("kind").get<std::string>() != "downstream")
    throw SchemaError("downstream checkpoint: wrong kind");
  DownstreamModel m;
  const auto &d = j.at("descriptor");
  m.descriptor_ = {d.at("task_id").get<int>(), d.at("noise_injection").get<bool>()};
  m.descriptor_.Validate();
  m.class_count_ = j.at("class_count").get<int>();
  m.stft_ = StftConfigFromJson(j.at("stft"));
  m.clean_accuracy_ = j.at("clean_accuracy").get<double>();
  if (!m.is_identity()) {
    m.normalizer_ = FeatureNormalizer::FromJson(j.at("normalizer"));
    m.net_ = DenseNetwork::FromJson(j.at("net"));
    if (m.net_.output_dim() != m.class_count_ ||
        m.net_.input_dim() != m.stft_.num_bins())
      throw SchemaError("downstream checkpoint: network shape mismatch");
  }
  if (j.contains("encoder")) {
    const auto &e = j.at("encoder");
    const auto data = e.at("data").get<std::vector<double>>();
    const Eigen::Index rows = e.at("rows").get<Eigen::Index>();
    const Eigen::Index cols = e.at("cols").get<Eigen::Index>();
    if (static_cast<Eigen::Index>(data.size()) != rows * cols)
      throw SchemaError("downstream checkpoint: encoder size mismatch");
    m.encoder_ = Eigen::Map<const RowMatrix>(data.data(), rows, cols);
    m.encoder_normalizer_ = FeatureNormalizer::FromJson(j.at("encoder_normalizer"));
  } else if (m.descriptor_.task_id == static_cast<int>(TaskKind::kRepresentation)) {
    throw SchemaError("downstream checkpoint: representation model lacks encoder");
  }
  return m;
}

// ---------------------------------------------------------------------------

double FrameAccuracy(const FeatureDistribution &v, std::span<const int> targets) {
  if (static_cast<size_t>(v.cols()) != targets.size())
    throw InvalidArgument("FrameAccuracy: frame count mismatch");
  if (targets.empty()) return 0.0;
  int hits = 0;
  for (Eigen::Index m = 0; m < v.cols(); ++m)
    if (ArgMax(v, m) == targets[m]) ++hits;
  return static_cast<double>(hits) / targets.size();
}

DownstreamTrainResult TrainDownstream(const DownstreamConfig &config,
                                      const Batch &corpus) {
  if (config.epochs < 0) throw InvalidArgument("TrainDownstream: epochs < 0");
  if (config.batch_size < 1)
    throw InvalidArgument("TrainDownstream: batch_size < 1");
  if (corpus.size() == 0) throw InvalidArgument("TrainDownstream: empty corpus");
  if (config.descriptor.noise_injection && config.injection_snr_db.empty())
    throw InvalidArgument("TrainDownstream: empty noise-injection SNR grid");

  DownstreamTrainResult result;
  result.model = DownstreamModel::Create(config, corpus);
  DownstreamModel &m = result.model;
  if (m.is_identity()) return result;

  const size_t n = corpus.size();
  std::vector<std::vector<int>> targets(n);
  ForEachIndex(n, config.exec,
               [&](size_t i) { targets[i] = m.FrameTargets(corpus.items[i]); });

  // Training inputs of one epoch, featurized but not yet normalized.
  auto epoch_features = [&](int epoch) {
    std::vector<double> snr(n, 0.0);
    if (config.descriptor.noise_injection) {
      Rng rng(DeriveSeed(config.seed, 1000 + epoch));
      for (size_t i = 0; i < n; ++i)
        snr[i] = config.injection_snr_db[rng.UniformInt(config.injection_snr_db.size())];
    }
    std::vector<Eigen::MatrixXd> feats(n);
    ForEachIndex(n, config.exec, [&](size_t i) {
      const BatchItem &item = corpus.items[i];
      if (config.descriptor.noise_injection) {
        const Waveform &raw = item.raw_noise.size() ? item.raw_noise : item.noise;
        feats[i] = Featurize(MixAtSnr(item.clean, raw, snr[i]).mix, m.stft());
      } else {
        feats[i] = Featurize(item.clean, m.stft());
      }
    });
    return feats;
  };

  if (config.epochs > 0) m.set_normalizer(FeatureNormalizer::Fit(epoch_features(0)));

  std::vector<double> params = m.net().Parameters();
  AdamState adam(static_cast<int>(params.size()), config.adam);
  Rng order_rng(DeriveSeed(config.seed, 3));
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    adam.set_epoch(epoch);
    const std::vector<Eigen::MatrixXd> feats = epoch_features(epoch);
    std::shuffle(order.begin(), order.end(), order_rng);
    double ce_sum = 0.0;
    Eigen::Index frames_seen = 0;
    for (size_t start = 0; start < n; start += config.batch_size) {
      const size_t end = std::min(n, start + static_cast<size_t>(config.batch_size));
      Eigen::Index cols = 0;
      for (size_t k = start; k < end; ++k) cols += feats[order[k]].cols();
      Eigen::MatrixXd input(m.stft().num_bins(), cols);
      std::vector<int> tgt;
      tgt.reserve(cols);
      Eigen::Index c = 0;
      for (size_t k = start; k < end; ++k) {
        const size_t i = order[k];
        input.middleCols(c, feats[i].cols()) = m.normalizer().Apply(feats[i]);
        c += feats[i].cols();
        tgt.insert(tgt.end(), targets[i].begin(), targets[i].end());
      }
      ForwardCache cache;
      const Eigen::MatrixXd p = m.net().Forward(input, &cache);
      Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(p.rows(), p.cols());
      double ce = 0.0;
      for (Eigen::Index f = 0; f < cols; ++f) {
        const double pt = std::max(p(tgt[f], f), 1e-300);
        ce -= std::log(pt);
        grad(tgt[f], f) = -1.0 / (pt * cols);
      }
      const BackwardResult br = m.net().Backward(cache, grad);
      adam.Step(params, std::span<const double>(br.parameter_gradient.data(),
                                                br.parameter_gradient.size()));
      m.mutable_net().SetParameters(params);
      ce_sum += ce;
      frames_seen += cols;
    }
    result.curve.emplace_back(epoch, ce_sum / frames_seen);
  }
  result.clean_accuracy =
      Evaluate(m, corpus, Condition::kClean, nullptr, 0.0, config.exec).accuracy;
  m.set_recorded_clean_accuracy(result.clean_accuracy);
  return result;
}

EvalResult Evaluate(const DownstreamModel &m, const Batch &corpus,
                    Condition condition, const MaskEnhancer *enhancer, double w,
                    Execution exec) {
  const size_t n = corpus.size();
  if (n == 0) throw InvalidArgument("Evaluate: empty corpus");
  if (condition == Condition::kEnhanced && enhancer == nullptr)
    throw InvalidArgument("Evaluate: enhanced condition needs an enhancer");
  const GateWeight gate(w);

  struct Slot {
    double score = 0.0;
    int hits = 0;
    int frames = 0;
    double kl = 0.0;
  };
  std::vector<Slot> slots(n);
  ForEachIndex(n, exec, [&](size_t i) {
    const BatchItem &item = corpus.items[i];
    Waveform input;
    switch (condition) {
      case Condition::kClean: input = item.clean; break;
      case Condition::kNoisy: input = item.mix; break;
      case Condition::kEnhanced:
        input = MixGate(enhancer->Enhance(item.mix), item.mix, gate);
        break;
    }
    Slot &s = slots[i];
    if (m.is_identity()) {
      s.score = SiSdrTerm(input.view(), item.clean.view(), LossConfig().db_clamp, {}).db;
      return;
    }
    const FeatureDistribution v = m.Infer(input);
    const std::vector<int> t = m.FrameTargets(item);
    s.frames = static_cast<int>(t.size());
    s.hits = static_cast<int>(std::lround(FrameAccuracy(v, t) * t.size()));
    if (condition != Condition::kClean) {
      const FeatureDistribution vs = m.Infer(item.clean);
      s.kl = KlDivergence(std::span<const FeatureDistribution>(&v, 1),
                          std::span<const FeatureDistribution>(&vs, 1))
                 .value;
    }
  });

  EvalResult r;
  if (m.is_identity()) {
    for (const Slot &s : slots) r.accuracy += s.score / n;
    return r;
  }
  long hits = 0, frames = 0;
  for (const Slot &s : slots) {
    hits += s.hits;
    frames += s.frames;
    r.mean_kl_to_clean += s.kl / n;
  }
  r.accuracy = frames ? static_cast<double>(hits) / frames : 0.0;
  return r;
}

}  // namespace plugin_se
