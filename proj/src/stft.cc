// src/stft.cc

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

#include "plugin-se/stft.h"

#include <cmath>
#include <numbers>
#include <sstream>

#include "plugin-se/errors.h"
#include "plugin-se/fft.h"

namespace plugin_se {

namespace {

// Window sums below this are treated as uncovered.
constexpr double kMinWindowSum = 1e-10;

}  // namespace

void StftConfig::Validate() const {
  if (frame_length < 2 || frame_length % 2 != 0)
    throw InvalidArgument("StftConfig: frame_length must be even and >= 2");
  if (hop < 1 || hop > frame_length)
    throw InvalidArgument("StftConfig: need 1 <= hop <= frame_length");
}

int StftConfig::NumFrames(size_t length) const {
  if (length < static_cast<size_t>(frame_length)) {
    std::ostringstream os;
    os << "STFT: input of " << length << " samples is shorter than one frame ("
       << frame_length << ")";
    throw InvalidArgument(os.str());
  }
  return 1 + static_cast<int>((length - frame_length) / hop);
}

std::vector<double> HannWindow(int n) {
  std::vector<double> w(n);
  for (int t = 0; t < n; ++t)
    w[t] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * t / n);
  return w;
}

ComplexMatrix Stft(std::span<const double> x, const StftConfig &cfg) {
  cfg.Validate();
  const int frames = cfg.NumFrames(x.size());
  const int n = cfg.frame_length;
  const std::vector<double> window = HannWindow(n);
  RealFft fft(n);
  ComplexMatrix spec(cfg.num_bins(), frames);
  std::vector<double> buf(n);
  for (int m = 0; m < frames; ++m) {
    const size_t start = static_cast<size_t>(m) * cfg.hop;
    for (int t = 0; t < n; ++t) buf[t] = window[t] * x[start + t];
    fft.Forward(buf, std::span<std::complex<double>>(spec.col(m).data(),
                                                     spec.rows()));
  }
  return spec;
}

std::vector<double> SquaredWindowSum(const StftConfig &cfg, size_t length) {
  const int frames = cfg.NumFrames(length);
  const std::vector<double> window = HannWindow(cfg.frame_length);
  std::vector<double> sum(length, 0.0);
  for (int m = 0; m < frames; ++m) {
    const size_t start = static_cast<size_t>(m) * cfg.hop;
    for (int t = 0; t < cfg.frame_length; ++t)
      sum[start + t] += window[t] * window[t];
  }
  return sum;
}

std::vector<double> Istft(const ComplexMatrix &spec, const StftConfig &cfg,
                          size_t length) {
  cfg.Validate();
  const int n = cfg.frame_length;
  if (spec.rows() != cfg.num_bins())
    throw InvalidArgument("ISTFT: bin count does not match the frame length");
  if (spec.cols() != cfg.NumFrames(length))
    throw InvalidArgument("ISTFT: frame count does not match the length");
  const std::vector<double> window = HannWindow(n);
  RealFft fft(n);
  std::vector<double> out(length, 0.0);
  std::vector<double> frame(n);
  for (Eigen::Index m = 0; m < spec.cols(); ++m) {
    fft.Inverse(std::span<const std::complex<double>>(spec.col(m).data(),
                                                      spec.rows()),
                frame);
    const size_t start = static_cast<size_t>(m) * cfg.hop;
    for (int t = 0; t < n; ++t) out[start + t] += window[t] * frame[t] / n;
  }
  const std::vector<double> wsum = SquaredWindowSum(cfg, length);
  for (size_t i = 0; i < length; ++i)
    out[i] = wsum[i] > kMinWindowSum ? out[i] / wsum[i] : 0.0;
  return out;
}

Waveform Istft(const ComplexMatrix &spec, const StftConfig &cfg,
               size_t length, int sample_rate) {
  return Waveform(Istft(spec, cfg, length), sample_rate);
}

Eigen::MatrixXd IstftGainAdjoint(const ComplexMatrix &x,
                                 std::span<const double> grad_output,
                                 const StftConfig &cfg) {
  cfg.Validate();
  const int n = cfg.frame_length;
  const size_t length = grad_output.size();
  if (x.rows() != cfg.num_bins() || x.cols() != cfg.NumFrames(length))
    throw InvalidArgument("IstftGainAdjoint: spectrum shape mismatch");
  const std::vector<double> wsum = SquaredWindowSum(cfg, length);
  std::vector<double> g(length);
  for (size_t i = 0; i < length; ++i)
    g[i] = wsum[i] > kMinWindowSum ? grad_output[i] / wsum[i] : 0.0;

  const std::vector<double> window = HannWindow(n);
  RealFft fft(n);
  Eigen::MatrixXd grad(x.rows(), x.cols());
  std::vector<double> seg(n);
  std::vector<std::complex<double>> gspec(fft.num_bins());
  for (Eigen::Index m = 0; m < x.cols(); ++m) {
    const size_t start = static_cast<size_t>(m) * cfg.hop;
    for (int t = 0; t < n; ++t) seg[t] = window[t] * g[start + t];
    fft.Forward(seg, gspec);
    // y(t) = (1/n) [Y_0 + Y_{n/2} (-1)^t + 2 Re sum_{0<k<n/2} Y_k e^{i2pi kt/n}]
    for (int k = 0; k < fft.num_bins(); ++k) {
      const double c = (k == 0 || k == n / 2) ? 1.0 : 2.0;
      grad(k, m) = c / n * (x(k, m) * std::conj(gspec[k])).real();
    }
  }
  return grad;
}

std::vector<double> StftAdjoint(const ComplexMatrix &grad_spec,
                                const StftConfig &cfg, size_t length) {
  cfg.Validate();
  const int n = cfg.frame_length;
  if (grad_spec.rows() != cfg.num_bins() ||
      grad_spec.cols() != cfg.NumFrames(length))
    throw InvalidArgument("StftAdjoint: spectrum shape mismatch");
  const std::vector<double> window = HannWindow(n);
  RealFft fft(n);
  std::vector<double> out(length, 0.0);
  std::vector<std::complex<double>> half(fft.num_bins());
  std::vector<double> frame(n);
  for (Eigen::Index m = 0; m < grad_spec.cols(); ++m) {
    // Re sum_{k=0}^{n/2} G_k e^{i2pi kt/n} via the Hermitian inverse, which
    // doubles the interior bins.
    for (int k = 0; k < fft.num_bins(); ++k) {
      const bool edge = (k == 0 || k == n / 2);
      half[k] = edge ? std::complex<double>(grad_spec(k, m).real(), 0.0)
                     : 0.5 * grad_spec(k, m);
    }
    fft.Inverse(half, frame);
    const size_t start = static_cast<size_t>(m) * cfg.hop;
    for (int t = 0; t < n; ++t) out[start + t] += window[t] * frame[t];
  }
  return out;
}

Eigen::MatrixXd LogMagnitude(const ComplexMatrix &spec) {
  // sqrt(re^2 + im^2) rather than std::abs, which goes through hypot.
  Eigen::MatrixXd out(spec.rows(), spec.cols());
  const std::complex<double> *in = spec.data();
  double *o = out.data();
  for (Eigen::Index i = 0; i < spec.size(); ++i)
    o[i] = std::sqrt(std::norm(in[i])) + kLogMagnitudeFloor;
  return out.array().log10().matrix();
}

ComplexMatrix LogMagnitudeBackward(const ComplexMatrix &spec,
                                   const Eigen::MatrixXd &grad_features) {
  if (grad_features.rows() != spec.rows() || grad_features.cols() != spec.cols())
    throw InvalidArgument("LogMagnitudeBackward: shape mismatch");
  ComplexMatrix out(spec.rows(), spec.cols());
  for (Eigen::Index m = 0; m < spec.cols(); ++m) {
    for (Eigen::Index k = 0; k < spec.rows(); ++k) {
      const double mag = std::sqrt(std::norm(spec(k, m)));
      if (mag == 0.0) {
        out(k, m) = 0.0;
        continue;
      }
      // d log10(r + eps) / dr = 1 / ((r + eps) ln 10); dr/dX = X / r.
      const double scale = grad_features(k, m) /
                           ((mag + kLogMagnitudeFloor) * std::numbers::ln10 * mag);
      out(k, m) = scale * spec(k, m);
    }
  }
  return out;
}

Padding CenterPadding(size_t length, const StftConfig &cfg) {
  cfg.Validate();
  Padding p;
  p.left = cfg.hop;
  size_t total = p.left + length + cfg.hop;
  if (total < static_cast<size_t>(cfg.frame_length)) total = cfg.frame_length;
  const size_t rem = (total - cfg.frame_length) % cfg.hop;
  if (rem != 0) total += cfg.hop - rem;
  p.right = total - p.left - length;
  return p;
}

}  // namespace plugin_se
