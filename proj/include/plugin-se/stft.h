// plugin-se/stft.h

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

#ifndef PLUGIN_SE_STFT_H_
#define PLUGIN_SE_STFT_H_

#include <Eigen/Dense>

#include <complex>
#include <span>
#include <vector>

#include "plugin-se/signal-core.h"

namespace plugin_se {

/// Periodic Hann window for analysis and synthesis. The inverse is the
/// least-squares one (weighted overlap-add divided by the summed squared
/// windows), which reconstructs every sample covered by a nonzero window.
struct StftConfig {
  int frame_length = 256;
  int hop = 128;

  void Validate() const;
  int num_bins() const { return frame_length / 2 + 1; }
  /// 1 + floor((length - frame_length) / hop); throws if length < frame.
  int NumFrames(size_t length) const;
};

std::vector<double> HannWindow(int n);

using ComplexMatrix = Eigen::MatrixXcd;

/// bins x frames.
ComplexMatrix Stft(std::span<const double> x, const StftConfig &cfg);
inline ComplexMatrix Stft(const Waveform &w, const StftConfig &cfg) {
  return Stft(std::span<const double>(w.samples), cfg);
}

/// Windowed overlap-add, divided by SquaredWindowSum wherever it is
/// positive; samples covered by no window (or only by window zeros) come
/// out as zero.
std::vector<double> Istft(const ComplexMatrix &spec, const StftConfig &cfg,
                          size_t length);
Waveform Istft(const ComplexMatrix &spec, const StftConfig &cfg,
               size_t length, int sample_rate);

/// Adjoint of Istft with respect to a real per-bin gain: given dL/dy for
/// y = Istft(G .* X), returns dL/dG (bins x frames).
Eigen::MatrixXd IstftGainAdjoint(const ComplexMatrix &x,
                                 std::span<const double> grad_output,
                                 const StftConfig &cfg);

/// Adjoint of Stft: given dL/dRe X + i dL/dIm X per bin and frame, returns
/// dL/dx.
std::vector<double> StftAdjoint(const ComplexMatrix &grad_spec,
                                const StftConfig &cfg, size_t length);

/// Sum of the shifted squared windows at every sample.
std::vector<double> SquaredWindowSum(const StftConfig &cfg, size_t length);

/// Additive floor inside the log-magnitude features.
constexpr double kLogMagnitudeFloor = 1e-8;

/// log10(|X| + kLogMagnitudeFloor), bins x frames.
Eigen::MatrixXd LogMagnitude(const ComplexMatrix &spec);

/// Given dL/dF for F = LogMagnitude(X), returns dL/dRe X + i dL/dIm X. Bins
/// with |X| = 0 get a zero gradient.
ComplexMatrix LogMagnitudeBackward(const ComplexMatrix &spec,
                                   const Eigen::MatrixXd &grad_features);

/// Zero padding that places every original sample strictly inside the
/// analysis grid so that Istft(Stft(pad(x))) recovers all of x.
struct Padding {
  size_t left = 0;
  size_t right = 0;
};
Padding CenterPadding(size_t length, const StftConfig &cfg);

}  // namespace plugin_se

#endif  // PLUGIN_SE_STFT_H_
