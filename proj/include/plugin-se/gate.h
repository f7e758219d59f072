// plugin-se/gate.h

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

#ifndef PLUGIN_SE_GATE_H_
#define PLUGIN_SE_GATE_H_

#include <ostream>
#include <span>
#include <vector>

#include "plugin-se/downstream.h"
#include "plugin-se/enhancer.h"
#include "plugin-se/errors.h"
#include "plugin-se/kernels.h"
#include "plugin-se/losses.h"
#include "plugin-se/signal-core.h"

namespace plugin_se {

/// Scalar in [0, 1]; 0 is full enhancement, 1 is passthrough.
class GateWeight {
 public:
  GateWeight() = default;
  /// Throws InvalidArgument unless value is finite and within [0, 1].
  explicit GateWeight(double value);
  /// Clamps finite values into [0, 1]; values already inside are kept
  /// bit-exactly. NaN throws.
  static GateWeight Clamped(double value);

  double value() const { return value_; }

 private:
  double value_ = 0.0;
};

/// s_mix = (1 - w) s_hat + w x. The endpoints return copies of s_hat and x.
Waveform MixGate(const Waveform &s_hat, const Waveform &x, GateWeight w);

struct GateTracePoint {
  int iter = 0;
  double w = 0.0;
  double loss = 0.0;
};

/// Raised when L_w or its derivative becomes non-finite; carries the
/// optimization trace up to that point.
class GateNumericError : public NumericError {
 public:
  GateNumericError(const std::string &what, std::vector<GateTracePoint> trace)
      : NumericError(what), trace_(std::move(trace)) {}
  const std::vector<GateTracePoint> &trace() const { return trace_; }

 private:
  std::vector<GateTracePoint> trace_;
};

struct SweepPoint {
  GateWeight w;
  OirMeasurement oir;
  double downstream_loss = 0.0;  // L_w
  double accuracy = 0.0;         // frame accuracy, or SI-SDR dB for SE
  int clamped_items = 0;         // SE only: items whose SI-SDR hit the cap
};

struct GateSweepCurve {
  std::vector<SweepPoint> points;
};

/// L_w over a fixed corpus for a frozen (enhancer, downstream) pair.
///
/// For a learned downstream model L_w is the mean over items of
/// KL(infer(s_mix), infer(s)). Since the STFT is linear, the spectrum of
/// s_mix is the same blend of the precomputed spectra of s_hat and x, so
/// every evaluation reuses them. For the SE identity model L_w is the SI-SDR
/// loss of s_mix against s.
class GateObjective {
 public:
  GateObjective(const MaskEnhancer &enhancer, const DownstreamModel &downstream,
                const Batch &corpus, Execution exec = Execution::kParallel,
                const LossConfig &loss_config = {});
  /// Same, with the enhanced signals supplied directly (one per item).
  GateObjective(std::vector<Waveform> enhanced,
                const DownstreamModel &downstream, const Batch &corpus,
                Execution exec = Execution::kParallel,
                const LossConfig &loss_config = {});

  size_t size() const { return mixes_.size(); }
  const DownstreamModel &downstream() const { return *downstream_; }
  Execution exec() const { return exec_; }

  double Value(double w) const;
  /// Value and dL/dw.
  double ValueAndGradient(double w, double *grad) const;

  /// Full measurement at one w on the waveform path (mix, OIR, accuracy).
  SweepPoint Measure(double w) const;

 private:
  double Evaluate(double w, double *grad) const;

  const DownstreamModel *downstream_;
  Execution exec_;
  LossConfig loss_config_;
  std::vector<Waveform> enhanced_;
  std::vector<Waveform> mixes_;
  std::vector<Waveform> cleans_;
  std::vector<ComplexMatrix> enhanced_spec_;
  std::vector<ComplexMatrix> diff_spec_;  // STFT(x) - STFT(s_hat)
  std::vector<FeatureDistribution> clean_dist_;
  std::vector<std::vector<int>> targets_;
};

struct GateOptions {
  int iterations = 300;
  double lr = 0.05;
  double u0 = 0.0;  // w = sigmoid(u)
  double tie_tolerance = 1e-9;
  // Also score w = 0 and w = 1, which the sigmoid never reaches.
  bool probe_endpoints = true;
};

struct GateResult {
  GateWeight w_star;
  double loss = 0.0;
  std::vector<GateTracePoint> trace;
};

/// Adam on u with w = sigmoid(u). Returns the best w observed, ties within
/// tie_tolerance going to the smaller w. Throws GateNumericError on a
/// non-finite loss or gradient.
GateResult OptimizeGate(const GateObjective &objective,
                        const GateOptions &options = {});

/// Exhaustive search over {0, step, 2 step, ..., 1} with the same tie rule.
GateResult GridSearchGate(const GateObjective &objective, double step = 0.01,
                          double tie_tolerance = 1e-9);

/// {0, 1/(points-1), ..., 1}.
std::vector<double> UniformGrid(int points);

/// Throws unless the grid is non-empty, strictly increasing and in [0, 1].
GateSweepCurve SweepGate(const GateObjective &objective,
                         std::span<const double> grid);

/// Header w,oir_ratio,oir_db,downstream_loss,accuracy,clamped_items.
void WriteSweepCsv(const GateSweepCurve &curve, std::ostream &os);

}  // namespace plugin_se

#endif  // PLUGIN_SE_GATE_H_
