// plugin-se/losses.h

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

#ifndef PLUGIN_SE_LOSSES_H_
#define PLUGIN_SE_LOSSES_H_

#include <Eigen/Dense>

#include <span>
#include <vector>

#include "plugin-se/signal-core.h"

namespace plugin_se {

/// Per-frame class distributions: classes x frames, each column sums to one.
using FeatureDistribution = Eigen::MatrixXd;

enum class SarProjection {
  kApproximate,  // independent projections onto s and n, summed
  kExact,        // orthogonal projection onto span{s, n}
};

struct LossConfig {
  double lambda_cm = 0.01;
  double lambda_ct = 0.01;
  double db_clamp = 60.0;     // |per-item dB term| cap
  double prob_floor = 1e-12;  // applied before logs in the KL divergence
  SarProjection sar_projection = SarProjection::kApproximate;

  void Validate() const;
};

/// A batch loss and its gradients. Which gradient vectors are filled depends
/// on the loss: waveform losses fill `grad_estimate` (one vector per item,
/// same length as the estimate), distribution losses fill
/// `grad_distribution`.
struct LossValue {
  double value = 0.0;
  std::vector<std::vector<double>> grad_estimate;
  std::vector<FeatureDistribution> grad_distribution;
  // Per item: the dB term hit +-db_clamp (gradient zeroed for that item).
  std::vector<bool> clamped;
  // Per item: the target projection vanished (estimate orthogonal to target).
  std::vector<bool> degenerate;
  // Unclamped per-item terms (dB, or nats for KL), for reporting.
  std::vector<double> item_terms;
};

// ---------------------------------------------------------------------------
// Item-level kernels. `grad` (optional, may be empty) receives
// d(term)/d(estimate) of the *clamped* dB term.

struct ItemTerm {
  double db = 0.0;       // clamped
  double raw_db = 0.0;   // unclamped
  bool clamped = false;
  bool degenerate = false;
  double artifact_energy = 0.0;  // ||e||^2 of the residual
};

ItemTerm SiSdrTerm(std::span<const double> estimate,
                   std::span<const double> target, double db_clamp,
                   std::span<double> grad);

ItemTerm SiSarTerm(std::span<const double> estimate,
                   std::span<const double> target,
                   std::span<const double> noise, double db_clamp,
                   SarProjection projection, std::span<double> grad);

// ---------------------------------------------------------------------------
// Batch losses. N is the number of items.

/// -(1/N) sum_i clamp(10 log10(||s_t||^2 / ||e_d||^2)).
LossValue SiSdrLoss(std::span<const Waveform> estimates,
                    std::span<const Waveform> targets,
                    const LossConfig &config = {});

/// -(1/N) sum_i clamp(10 log10(||x_t||^2 / ||e_art||^2)).
LossValue SiSarLoss(std::span<const Waveform> estimates,
                    std::span<const Waveform> targets,
                    std::span<const Waveform> noises,
                    const LossConfig &config = {});

/// (1/N) sum_items sum_frames sum_k vs_k ln(vs_k / vx_k), natural log, both
/// arguments floored at prob_floor. Gradient is with respect to vx.
LossValue KlDivergence(std::span<const FeatureDistribution> vx,
                       std::span<const FeatureDistribution> vs,
                       const LossConfig &config = {});

/// SI-SDR + lambda_cm * KL(vx, vs).
LossValue CmLoss(std::span<const Waveform> estimates,
                 std::span<const Waveform> targets,
                 std::span<const FeatureDistribution> vx,
                 std::span<const FeatureDistribution> vs,
                 const LossConfig &config = {});

/// SI-SDR + lambda_ct * SI-SAR.
LossValue CtLoss(std::span<const Waveform> estimates,
                 std::span<const Waveform> targets,
                 std::span<const Waveform> noises,
                 const LossConfig &config = {});

/// Mean squared difference; gradient 2(a - b)/len with respect to a, stored
/// as grad_estimate[0].
LossValue Mse(std::span<const double> a, std::span<const double> b);

}  // namespace plugin_se

#endif  // PLUGIN_SE_LOSSES_H_
