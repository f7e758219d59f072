// src/fft.cc

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

#include "plugin-se/fft.h"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <utility>
#include <vector>

#include "plugin-se/errors.h"

namespace plugin_se {

namespace {

struct PlanPair {
  fftw_plan forward;
  fftw_plan inverse;
};

// The FFTW planner is not thread-safe; execution with the new-array interface
// is. Plans live for the whole process.
std::mutex &PlannerMutex() {
  static std::mutex m;
  return m;
}

PlanPair GetPlans(int n) {
  static std::map<int, PlanPair> cache;
  std::lock_guard<std::mutex> lock(PlannerMutex());
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<double> real(n);
  std::vector<fftw_complex> cplx(n / 2 + 1);
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  PlanPair p;
  p.forward = fftw_plan_dft_r2c_1d(n, real.data(), cplx.data(), flags);
  p.inverse = fftw_plan_dft_c2r_1d(n, cplx.data(), real.data(),
                                   flags | FFTW_DESTROY_INPUT);
  if (p.forward == nullptr || p.inverse == nullptr)
    throw std::runtime_error("FFTW failed to create a plan");
  cache.emplace(n, p);
  return p;
}

}  // namespace

RealFft::RealFft(int n) : n_(n) {
  if (n < 2) throw InvalidArgument("RealFft: length must be at least 2");
  PlanPair p = GetPlans(n);
  forward_plan_ = p.forward;
  inverse_plan_ = p.inverse;
}

void RealFft::Forward(std::span<const double> in,
                      std::span<std::complex<double>> out) const {
  if (static_cast<int>(in.size()) != n_ ||
      static_cast<int>(out.size()) != num_bins())
    throw InvalidArgument("RealFft::Forward: size mismatch");
  // r2c does not modify its input.
  fftw_execute_dft_r2c(static_cast<fftw_plan>(forward_plan_),
                       const_cast<double *>(in.data()),
                       reinterpret_cast<fftw_complex *>(out.data()));
}

void RealFft::Inverse(std::span<const std::complex<double>> in,
                      std::span<double> out) const {
  if (static_cast<int>(in.size()) != num_bins() ||
      static_cast<int>(out.size()) != n_)
    throw InvalidArgument("RealFft::Inverse: size mismatch");
  // c2r destroys its input, so work on a copy.
  std::vector<std::complex<double>> scratch(in.begin(), in.end());
  fftw_execute_dft_c2r(static_cast<fftw_plan>(inverse_plan_),
                       reinterpret_cast<fftw_complex *>(scratch.data()),
                       out.data());
}

}  // namespace plugin_se
