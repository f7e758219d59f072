// tests/stft-test.cc

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

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "plugin-se/errors.h"
#include "plugin-se/features.h"
#include "plugin-se/rng.h"
#include "plugin-se/stft.h"

namespace plugin_se {
namespace {

std::vector<double> RandomSignal(size_t n, uint64_t seed) {
  Rng rng(seed);
  std::vector<double> x(n);
  for (double &v : x) v = rng.Normal();
  return x;
}

std::vector<double> Padded(const std::vector<double> &x, const Padding &p) {
  std::vector<double> out(p.left, 0.0);
  out.insert(out.end(), x.begin(), x.end());
  out.resize(out.size() + p.right, 0.0);
  return out;
}

TEST(Stft, FrameArithmetic) {
  StftConfig cfg;
  EXPECT_EQ(cfg.num_bins(), 129);
  EXPECT_EQ(cfg.NumFrames(256), 1);
  EXPECT_EQ(cfg.NumFrames(8000), 1 + (8000 - 256) / 128);
  EXPECT_THROW(cfg.NumFrames(255), InvalidArgument);
  StftConfig odd{255, 128};
  EXPECT_THROW(odd.Validate(), InvalidArgument);
}

// Reference values from an independent rfft of the Hann-windowed frames of
// x[t] = sin(0.3 t) + 0.5 cos(1.7 t + 0.2).
TEST(Stft, MatchesReferenceDft) {
  std::vector<double> x(1024);
  for (size_t t = 0; t < x.size(); ++t)
    x[t] = std::sin(0.3 * t) + 0.5 * std::cos(1.7 * t + 0.2);
  const ComplexMatrix s = Stft(x, StftConfig{});
  ASSERT_EQ(s.cols(), 7);
  EXPECT_NEAR(s(12, 0).real(), 39.96480208241267, 1e-9);
  EXPECT_NEAR(s(12, 0).imag(), -47.363917174129256, 1e-9);
  EXPECT_NEAR(s(70, 3).real(), -20.696717321634708, 1e-9);
  EXPECT_NEAR(s(70, 3).imag(), -8.238510212182465, 1e-9);
  EXPECT_NEAR(s(0, 5).real(), 0.012681659825795083, 1e-9);
  EXPECT_NEAR(s(128, 2).real(), -5.889388940763518e-05, 1e-9);
  EXPECT_NEAR(s(128, 2).imag(), 0.0, 1e-12);
}

TEST(Stft, RoundTripWithCenterPadding) {
  const StftConfig cfg;
  const std::vector<double> x = RandomSignal(8000, 11);
  const Padding p = CenterPadding(x.size(), cfg);
  const std::vector<double> padded = Padded(x, p);
  const std::vector<double> y = Istft(Stft(padded, cfg), cfg, padded.size());
  double max_err = 0.0;
  for (size_t i = 0; i < x.size(); ++i)
    max_err = std::max(max_err, std::abs(y[p.left + i] - x[i]));
  EXPECT_LT(max_err, 1e-10);
}

TEST(Stft, RoundTripOtherGeometries) {
  for (StftConfig cfg : {StftConfig{64, 16}, StftConfig{128, 64}, StftConfig{32, 32}}) {
    const std::vector<double> x = RandomSignal(777, 5);
    const Padding p = CenterPadding(x.size(), cfg);
    const std::vector<double> padded = Padded(x, p);
    const std::vector<double> y = Istft(Stft(padded, cfg), cfg, padded.size());
    for (size_t i = 0; i < x.size(); ++i) {
      // hop == frame leaves the window zero at frame starts uncovered.
      if (cfg.hop == cfg.frame_length && (p.left + i) % cfg.hop == 0) continue;
      ASSERT_NEAR(y[p.left + i], x[i], 1e-9) << cfg.frame_length << "/" << cfg.hop;
    }
  }
}

TEST(Stft, ToneLandsInItsBin) {
  std::vector<double> x(8000);
  for (size_t t = 0; t < x.size(); ++t)
    x[t] = std::sin(2.0 * std::numbers::pi * 1000.0 * t / 8000.0);
  const ComplexMatrix s = Stft(x, StftConfig{});
  // 1000 Hz at 8 kHz with 256-point frames is bin 32.
  Eigen::VectorXd energy = s.cwiseAbs2().rowwise().sum();
  Eigen::Index peak;
  energy.maxCoeff(&peak);
  EXPECT_NEAR(static_cast<double>(peak), 32.0, 1.0);
  const double near = energy.segment(31, 3).sum();
  EXPECT_GT(near / energy.sum(), 0.99);
}

TEST(Stft, ZeroInZeroOut) {
  const ComplexMatrix s = Stft(std::vector<double>(1000, 0.0), StftConfig{});
  EXPECT_EQ(s.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Stft, AdjointIdentity) {
  const StftConfig cfg;
  const size_t n = 1000;
  const std::vector<double> x = RandomSignal(n, 1);
  const ComplexMatrix s = Stft(x, cfg);
  ComplexMatrix g(s.rows(), s.cols());
  Rng rng(2);
  for (Eigen::Index i = 0; i < g.size(); ++i) g(i) = {rng.Normal(), rng.Normal()};
  double lhs = 0.0;
  for (Eigen::Index i = 0; i < g.size(); ++i)
    lhs += g(i).real() * s(i).real() + g(i).imag() * s(i).imag();
  const std::vector<double> adj = StftAdjoint(g, cfg, n);
  double rhs = 0.0;
  for (size_t i = 0; i < n; ++i) rhs += adj[i] * x[i];
  EXPECT_NEAR(lhs, rhs, 1e-9 * std::abs(lhs));
}

TEST(Stft, GainAdjointIdentity) {
  const StftConfig cfg;
  const size_t n = 1200;
  const ComplexMatrix x = Stft(RandomSignal(n, 3), cfg);
  Rng rng(4);
  Eigen::MatrixXd gain(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < gain.size(); ++i) gain(i) = rng.Uniform();
  const std::vector<double> g = RandomSignal(n, 5);
  const ComplexMatrix masked = (x.array() * gain.cast<std::complex<double>>().array()).matrix();
  const std::vector<double> y = Istft(masked, cfg, n);
  double lhs = 0.0;
  for (size_t i = 0; i < n; ++i) lhs += g[i] * y[i];
  const double rhs = (IstftGainAdjoint(x, g, cfg).array() * gain.array()).sum();
  EXPECT_NEAR(lhs, rhs, 1e-9 * std::abs(lhs));
}

TEST(LogMagnitude, FloorAndScaling) {
  const StftConfig cfg;
  const Eigen::MatrixXd zero = Featurize(Waveform(std::vector<double>(600, 0.0)), cfg);
  EXPECT_EQ(zero.cols(), cfg.NumFrames(600));
  EXPECT_NEAR(zero.maxCoeff(), -8.0, 1e-12);
  EXPECT_NEAR(zero.minCoeff(), -8.0, 1e-12);

  std::vector<double> x = RandomSignal(600, 9);
  const Eigen::MatrixXd f1 = Featurize(Waveform(x), cfg);
  for (double &v : x) v *= 10.0;
  const Eigen::MatrixXd f10 = Featurize(Waveform(x), cfg);
  EXPECT_NEAR((f10 - f1).maxCoeff(), 1.0, 1e-6);
  EXPECT_NEAR((f10 - f1).minCoeff(), 1.0, 1e-6);
}

TEST(LogMagnitude, BackwardMatchesFiniteDifferences) {
  const ComplexMatrix s = Stft(RandomSignal(512, 6), StftConfig{});
  Rng rng(7);
  Eigen::MatrixXd g(s.rows(), s.cols());
  for (Eigen::Index i = 0; i < g.size(); ++i) g(i) = rng.Normal();
  const ComplexMatrix grad = LogMagnitudeBackward(s, g);
  const double h = 1e-6;
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index i = static_cast<Eigen::Index>(rng.UniformInt(s.size()));
    for (int part = 0; part < 2; ++part) {
      ComplexMatrix sp = s, sm = s;
      const std::complex<double> d = part == 0 ? std::complex<double>(h, 0)
                                               : std::complex<double>(0, h);
      sp(i) += d;
      sm(i) -= d;
      const double fd =
          ((LogMagnitude(sp) - LogMagnitude(sm)).array() * g.array()).sum() / (2 * h);
      const double an = part == 0 ? grad(i).real() : grad(i).imag();
      EXPECT_NEAR(an, fd, 1e-4 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST(FeatureNormalizer, StandardizesAndRoundTrips) {
  std::vector<Eigen::MatrixXd> feats;
  for (uint64_t s = 0; s < 3; ++s)
    feats.push_back(Featurize(Waveform(RandomSignal(2000, s)), StftConfig{}));
  const FeatureNormalizer n = FeatureNormalizer::Fit(feats);
  Eigen::MatrixXd all(feats[0].rows(), 0);
  for (const auto &f : feats) {
    Eigen::MatrixXd next(all.rows(), all.cols() + f.cols());
    next << all, n.Apply(f);
    all = next;
  }
  EXPECT_LT(all.rowwise().mean().cwiseAbs().maxCoeff(), 1e-9);
  const FeatureNormalizer r = FeatureNormalizer::FromJson(n.ToJson());
  EXPECT_EQ(r.mean(), n.mean());
  EXPECT_EQ(r.inv_std(), n.inv_std());
  EXPECT_TRUE(FeatureNormalizer().empty());
}

}  // namespace
}  // namespace plugin_se
