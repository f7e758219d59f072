// plugin-se/downstream.h

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

#ifndef PLUGIN_SE_DOWNSTREAM_H_
#define PLUGIN_SE_DOWNSTREAM_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "plugin-se/features.h"
#include "plugin-se/kernels.h"
#include "plugin-se/losses.h"
#include "plugin-se/nn-core.h"
#include "plugin-se/signal-core.h"
#include "plugin-se/stft.h"

namespace plugin_se {

class MaskEnhancer;

/// Task id (index into SE, SV, ASR, Representation) plus whether the model
/// was trained with noise injection.
struct TaskDescriptor {
  int task_id = 0;
  bool noise_injection = false;

  TaskKind kind() const;
  void Validate(int capacity = kNumTasks) const;
  std::string ToString() const;  // e.g. "SV/NI"

  friend bool operator==(const TaskDescriptor &, const TaskDescriptor &) = default;
  friend auto operator<=>(const TaskDescriptor &, const TaskDescriptor &) = default;
};

/// Default class count of each task analog.
int DefaultClassCount(TaskKind kind, int speaker_classes = 4);

struct DownstreamConfig {
  TaskDescriptor descriptor;
  int class_count = 0;  // 0: DefaultClassCount
  std::vector<int> hidden = {64};
  int epochs = 30;
  int batch_size = 16;
  AdamConfig adam{1e-3, 0.9, 0.999, 1e-8, 0.9, 10};
  StftConfig stft;
  uint64_t seed = 1;
  // Per item per epoch, uniform over this grid.
  std::vector<double> injection_snr_db = {0, 5, 10, 15, 20};
  Execution exec = Execution::kParallel;
};

/// Frame-wise classifier on normalized log-magnitude frames, softmax output.
/// Task 0 (SE) is the identity on waveforms and has no network; its score
/// is SI-SDR.
class DownstreamModel {
 public:
  DownstreamModel() = default;

  static DownstreamModel Identity(bool noise_injection = false);
  /// Untrained model for `config`; the representation encoder, if any, is
  /// drawn here and frozen.
  static DownstreamModel Create(const DownstreamConfig &config,
                                const Batch &corpus);

  bool is_identity() const { return descriptor_.task_id == 0; }
  const TaskDescriptor &descriptor() const { return descriptor_; }
  int class_count() const { return class_count_; }
  const StftConfig &stft() const { return stft_; }
  const DenseNetwork &net() const { return net_; }
  DenseNetwork &mutable_net() { return net_; }
  const FeatureNormalizer &normalizer() const { return normalizer_; }
  void set_normalizer(FeatureNormalizer n) { normalizer_ = std::move(n); }
  double recorded_clean_accuracy() const { return clean_accuracy_; }
  void set_recorded_clean_accuracy(double a) { clean_accuracy_ = a; }

  /// classes x frames.
  FeatureDistribution Infer(const Waveform &w) const;
  FeatureDistribution InferSpectrum(const ComplexMatrix &spec,
                                    ForwardCache *cache = nullptr) const;
  /// dL/d(spectrum) given dL/dV for V = InferSpectrum(spec).
  ComplexMatrix SpectrumGradient(const ComplexMatrix &spec,
                                 const FeatureDistribution &grad_v) const;
  /// Same, reusing the cache of an InferSpectrum(spec, &cache) call.
  ComplexMatrix SpectrumGradient(const ComplexMatrix &spec,
                                 const ForwardCache &cache,
                                 const FeatureDistribution &grad_v) const;
  /// dL/d(waveform) given dL/dV for V = Infer(w).
  std::vector<double> InputGradient(const Waveform &w,
                                    const FeatureDistribution &grad_v) const;

  /// Per-frame class targets of a corpus item, computed from its clean
  /// speech. Throws if the item's label does not fit the class count.
  std::vector<int> FrameTargets(const BatchItem &item) const;

  nlohmann::json ToJson() const;
  static DownstreamModel FromJson(const nlohmann::json &j);

 private:
  TaskDescriptor descriptor_;
  int class_count_ = 0;
  StftConfig stft_;
  FeatureNormalizer normalizer_;
  DenseNetwork net_;
  // Representation analog: frozen projection of standardized clean frames;
  // argmax gives the pseudo-labels.
  RowMatrix encoder_;
  FeatureNormalizer encoder_normalizer_;
  double clean_accuracy_ = 0.0;
};

struct DownstreamTrainResult {
  DownstreamModel model;
  std::vector<std::pair<int, double>> curve;  // (epoch, mean cross-entropy)
  double clean_accuracy = 0.0;
};

/// Frame-level cross-entropy with Adam. With noise injection every item is
/// remixed from its stored raw noise at a fresh grid SNR each epoch;
/// otherwise the clean speech is used. The clean accuracy on `corpus` is
/// recorded on the returned model.
DownstreamTrainResult TrainDownstream(const DownstreamConfig &config,
                                      const Batch &corpus);

enum class Condition { kClean, kNoisy, kEnhanced };

struct EvalResult {
  // Fraction of frames whose argmax matches the target. For the SE identity
  // model this holds the mean SI-SDR of the condition input in dB.
  double accuracy = 0.0;
  // Mean over items of the KL divergence to the clean-input distributions.
  // Zero for the SE identity model.
  double mean_kl_to_clean = 0.0;
};

/// kEnhanced feeds MixGate(enhance(mix), mix, w) to the model.
EvalResult Evaluate(const DownstreamModel &m, const Batch &corpus,
                    Condition condition, const MaskEnhancer *enhancer = nullptr,
                    double w = 0.0, Execution exec = Execution::kParallel);

/// Fraction of columns whose argmax equals the target.
double FrameAccuracy(const FeatureDistribution &v, std::span<const int> targets);

}  // namespace plugin_se

#endif  // PLUGIN_SE_DOWNSTREAM_H_
