// tests/enhancer-test.cc

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

#include "plugin-se/downstream.h"
#include "plugin-se/enhancer.h"
#include "plugin-se/errors.h"
#include "plugin-se/rng.h"

namespace plugin_se {
namespace {

Waveform Noisy(uint64_t seed, double seconds = 0.25) {
  return MixAtSnr(SynthSpeech(seed, seconds), SynthNoise(NoiseKind::kWhite, seed, seconds), 5.0).mix;
}

MaskEnhancer SmallEnhancer(uint64_t seed, const Waveform &fit_on) {
  EnhancerConfig c;
  c.stft = {64, 32};
  c.hidden = {16};
  c.seed = seed;
  MaskEnhancer e = MaskEnhancer::Create(c);
  std::vector<Eigen::MatrixXd> f = {e.RawFeatures(fit_on)};
  e.set_normalizer(FeatureNormalizer::Fit(f));
  return e;
}

TEST(MaskEnhancer, OnesMaskIsPassthrough) {
  const Waveform x = Noisy(1);
  const Waveform y = MaskEnhancer::ConstantMask(1.0).Enhance(x);
  ASSERT_EQ(y.size(), x.size());
  for (size_t i = 0; i < x.size(); ++i) ASSERT_NEAR(y.samples[i], x.samples[i], 1e-9);
}

TEST(MaskEnhancer, ZerosMaskIsSilence) {
  const Waveform y = MaskEnhancer::ConstantMask(0.0).Enhance(Noisy(2));
  for (double v : y.samples) ASSERT_EQ(v, 0.0);
}

TEST(MaskEnhancer, MaskIsBounded) {
  const MaskEnhancer e = MaskEnhancer::Create(EnhancerConfig{});
  const Eigen::MatrixXd m = e.Mask(Noisy(3));
  EXPECT_GE(m.minCoeff(), 0.0);
  EXPECT_LE(m.maxCoeff(), 1.0);
  EXPECT_EQ(m.rows(), 129);
}

TEST(MaskEnhancer, ShortInputRejected) {
  EXPECT_THROW(MaskEnhancer::ConstantMask(1.0).Enhance(Waveform()), InvalidArgument);
}

TEST(MaskEnhancer, JsonRoundTrip) {
  const Waveform x = Noisy(4);
  const MaskEnhancer e = SmallEnhancer(3, x);
  const MaskEnhancer r = MaskEnhancer::FromJson(e.ToJson());
  EXPECT_EQ(r.Enhance(x).samples, e.Enhance(x).samples);
  nlohmann::json bad = e.ToJson();
  bad["format_version"] = 99;
  EXPECT_THROW(MaskEnhancer::FromJson(bad), SchemaError);
}

// d<g, s_hat>/d(params) against central differences, 20 instances.
TEST(MaskEnhancer, BackwardMatchesFiniteDifferences) {
  for (uint64_t seed = 0; seed < 20; ++seed) {
    const Waveform x = Noisy(100 + seed, 0.05);
    MaskEnhancer e = SmallEnhancer(seed, x);
    Rng rng(seed);
    std::vector<double> g(x.size());
    for (double &v : g) v = rng.Normal();
    EnhancerTrace trace;
    e.Forward(x, &trace);
    const Eigen::VectorXd analytic = e.Backward(trace, g);
    const std::vector<double> p0 = e.net().Parameters();
    const auto f = [&](std::span<const double> p) {
      MaskEnhancer probe = e;
      probe.mutable_net().SetParameters(p);
      const Waveform y = probe.Enhance(x);
      double acc = 0.0;
      for (size_t i = 0; i < g.size(); ++i) acc += g[i] * y.samples[i];
      return acc;
    };
    GradientCheckOptions opt;
    opt.max_coordinates = 60;
    opt.seed = seed;
    const GradientCheckResult r =
        CheckGradient(f, p0, std::vector<double>(analytic.data(), analytic.data() + analytic.size()),
                      1e-4, opt);
    EXPECT_TRUE(r.pass) << "seed " << seed << " err " << r.max_rel_error;
  }
}

TEST(TrainEnhancer, ZeroEpochsReturnsInit) {
  CorpusConfig c;
  c.items = 4;
  c.duration_s = 0.25;
  const MaskEnhancer init = MaskEnhancer::Create(EnhancerConfig{});
  EnhancerTrainOptions o;
  o.epochs = 0;
  const EnhancerTrainResult r = TrainEnhancer(init, MakeCorpus(c), o);
  EXPECT_EQ(r.enhancer.net().Parameters(), init.net().Parameters());
  EXPECT_TRUE(r.curve.empty());
}

TEST(TrainEnhancer, CmNeedsDistributionModel) {
  CorpusConfig c;
  c.items = 2;
  c.duration_s = 0.25;
  EnhancerTrainOptions o;
  o.loss = EnhancerLoss::kCm;
  o.epochs = 1;
  const MaskEnhancer init = MaskEnhancer::Create(EnhancerConfig{});
  EXPECT_THROW(TrainEnhancer(init, MakeCorpus(c), o), InvalidArgument);
  const DownstreamModel id = DownstreamModel::Identity();
  EXPECT_THROW(TrainEnhancer(init, MakeCorpus(c), o, &id), InvalidArgument);
}

TEST(TrainEnhancer, CtWithZeroWeightMatchesSiSdr) {
  CorpusConfig c;
  c.items = 8;
  c.duration_s = 0.25;
  const Batch b = MakeCorpus(c);
  EnhancerConfig ec;
  ec.hidden = {32};
  const MaskEnhancer init = MaskEnhancer::Create(ec);
  EnhancerTrainOptions o;
  o.epochs = 2;
  o.batch_size = 4;
  const EnhancerTrainResult sdr = TrainEnhancer(init, b, o);
  o.loss = EnhancerLoss::kCt;
  o.loss_config.lambda_ct = 0.0;
  const EnhancerTrainResult ct = TrainEnhancer(init, b, o);
  EXPECT_EQ(sdr.enhancer.net().Parameters(), ct.enhancer.net().Parameters());
}

// 200 items, 50 epochs, seed 3; held-out mixes at 5 dB must gain >= 2 dB.
TEST(TrainEnhancer, ImprovesHeldOutSiSdr) {
  CorpusConfig c;
  c.items = 200;
  c.seed = 3;
  c.snr_grid_db = {-5, 0, 5, 10, 15, 20};
  const Batch train = MakeCorpus(c);
  CorpusConfig h = c;
  h.items = 48;
  h.seed = 303;
  h.snr_grid_db = {5};
  const Batch held = MakeCorpus(h);

  EnhancerConfig ec;
  ec.seed = 3;
  EnhancerTrainOptions o;
  o.epochs = 50;
  o.batch_size = 8;
  o.adam.lr0 = 3e-3;
  o.seed = 3;
  const EnhancerTrainResult r = TrainEnhancer(MaskEnhancer::Create(ec), train, o);
  ASSERT_EQ(r.curve.size(), 50u);
  EXPECT_LT(r.curve.back().loss, r.curve.front().loss);
  const EnhancementMetrics m = EvaluateEnhancer(r.enhancer, held);
  EXPECT_GE(m.output_si_sdr_db, 5.0 + 2.0);
  EXPECT_GT(m.output_si_sdr_db, m.input_si_sdr_db);
}

}  // namespace
}  // namespace plugin_se
