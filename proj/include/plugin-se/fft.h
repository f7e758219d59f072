// plugin-se/fft.h

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

#ifndef PLUGIN_SE_FFT_H_
#define PLUGIN_SE_FFT_H_

#include <complex>
#include <span>

namespace plugin_se {

/// Real <-> half-complex transforms of a fixed length, backed by FFTW.
/// Plans are created once per length and shared; Forward/Inverse are safe to
/// call concurrently from several threads.
class RealFft {
 public:
  explicit RealFft(int n);

  int size() const { return n_; }
  int num_bins() const { return n_ / 2 + 1; }

  /// out[k] = sum_t in[t] exp(-2 pi i k t / n), k = 0..n/2.
  void Forward(std::span<const double> in,
               std::span<std::complex<double>> out) const;

  /// Unnormalized Hermitian inverse:
  /// out[t] = sum_{k=0}^{n-1} X[k] exp(2 pi i k t / n) with X extended
  /// by conjugate symmetry. Imaginary parts of in[0] (and in[n/2] for even n)
  /// are ignored.
  void Inverse(std::span<const std::complex<double>> in,
               std::span<double> out) const;

 private:
  int n_;
  void *forward_plan_;
  void *inverse_plan_;
};

}  // namespace plugin_se

#endif  // PLUGIN_SE_FFT_H_
