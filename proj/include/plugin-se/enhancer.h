// plugin-se/enhancer.h

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

#ifndef PLUGIN_SE_ENHANCER_H_
#define PLUGIN_SE_ENHANCER_H_

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

class DownstreamModel;

struct EnhancerConfig {
  StftConfig stft;
  std::vector<int> hidden = {128, 128};
  uint64_t seed = 1;
};

/// Everything Backward needs from one Forward call.
struct EnhancerTrace {
  Padding pad;
  size_t length = 0;
  ComplexMatrix spec;  // STFT of the padded input
  ForwardCache cache;
  Eigen::MatrixXd mask;
};

/// Frame-wise magnitude mask predicted from normalized log-magnitude frames.
/// The noisy phase is reused. Inputs are zero padded by CenterPadding before
/// analysis, so an all-ones mask returns the input unchanged.
class MaskEnhancer {
 public:
  MaskEnhancer() = default;
  MaskEnhancer(DenseNetwork net, StftConfig stft,
               FeatureNormalizer normalizer = {});

  /// bins -> hidden... (ReLU) -> bins (sigmoid), Glorot init.
  static MaskEnhancer Create(const EnhancerConfig &config);
  /// Outputs `value` for every bin regardless of input; value in {0, 1} is
  /// reproduced exactly.
  static MaskEnhancer ConstantMask(double value, const StftConfig &stft = {});

  const DenseNetwork &net() const { return net_; }
  DenseNetwork &mutable_net() { return net_; }
  const StftConfig &stft() const { return stft_; }
  const FeatureNormalizer &normalizer() const { return normalizer_; }
  void set_normalizer(FeatureNormalizer n) { normalizer_ = std::move(n); }

  Waveform Enhance(const Waveform &x) const;
  Waveform Forward(const Waveform &x, EnhancerTrace *trace) const;
  /// Mask for every padded frame of x.
  Eigen::MatrixXd Mask(const Waveform &x) const;
  /// Applies a caller-supplied mask (bins x padded frames).
  Waveform ApplyMask(const Waveform &x, const Eigen::MatrixXd &mask) const;

  /// Parameter gradient of a loss given dLoss/d(output waveform).
  Eigen::VectorXd Backward(const EnhancerTrace &trace,
                           std::span<const double> grad_output) const;

  /// Log-magnitude features of the padded input, before normalization.
  Eigen::MatrixXd RawFeatures(const Waveform &x) const;

  nlohmann::json ToJson() const;
  static MaskEnhancer FromJson(const nlohmann::json &j);

 private:
  std::vector<double> Pad(const Waveform &x, Padding *pad) const;

  DenseNetwork net_;
  StftConfig stft_;
  FeatureNormalizer normalizer_;
};

std::vector<Waveform> EnhanceBatch(const MaskEnhancer &e,
                                   std::span<const Waveform> inputs,
                                   Execution exec);

// ---------------------------------------------------------------------------
// Training.

enum class EnhancerLoss { kSiSdr, kCt, kCm };

std::string EnhancerLossName(EnhancerLoss l);
EnhancerLoss ParseEnhancerLoss(const std::string &name);

struct EnhancerTrainOptions {
  EnhancerLoss loss = EnhancerLoss::kSiSdr;
  int epochs = 30;
  int batch_size = 16;
  AdamConfig adam{1e-3, 0.9, 0.999, 1e-8, 0.9, 10};
  LossConfig loss_config;
  uint64_t seed = 1;
  // Fit the feature normalizer on the training mixes before the first epoch.
  bool fit_normalizer = true;
  Execution exec = Execution::kParallel;
};

struct CurvePoint {
  int epoch = 0;
  double loss = 0.0;
};

struct EnhancerTrainResult {
  MaskEnhancer enhancer;
  std::vector<CurvePoint> curve;  // mean minibatch loss per epoch
};

/// Minibatch Adam on the selected loss. kCm needs a learned downstream model
/// for the distributions; kCt uses the scaled noise stored with each item.
EnhancerTrainResult TrainEnhancer(const MaskEnhancer &init,
                                  const Batch &corpus,
                                  const EnhancerTrainOptions &options,
                                  const DownstreamModel *downstream = nullptr);

struct EnhancementMetrics {
  double input_si_sdr_db = 0.0;   // mix vs clean
  double output_si_sdr_db = 0.0;  // enhanced vs clean
  double output_si_sar_db = 0.0;
  double artifact_energy = 0.0;   // mean ||e_art||^2
  double relative_artifact_energy = 0.0;  // mean ||e_art||^2 / ||s_hat||^2
};

/// Unclamped means over the corpus.
EnhancementMetrics EvaluateEnhancer(const MaskEnhancer &e, const Batch &corpus,
                                    Execution exec = Execution::kParallel);

}  // namespace plugin_se

#endif  // PLUGIN_SE_ENHANCER_H_
