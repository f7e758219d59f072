// tests/signal-core-test.cc

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
#include <complex>
#include <numbers>
#include <sstream>

#include "plugin-se/errors.h"
#include "plugin-se/signal-core.h"
#include "plugin-se/wave-io.h"

namespace plugin_se {
namespace {

// Naive DFT power summed over integer-Hz bins [lo, hi); bin spacing is
// rate / n, so with n = rate every bin is 1 Hz wide.
double BandPower(const Waveform &w, int lo_hz, int hi_hz) {
  const size_t n = w.size();
  double total = 0.0;
  for (int k = lo_hz; k < hi_hz; ++k) {
    std::complex<double> acc = 0.0;
    for (size_t t = 0; t < n; ++t)
      acc += w.samples[t] * std::polar(1.0, -2.0 * std::numbers::pi * k * t / n);
    total += std::norm(acc);
  }
  return total;
}

TEST(SynthSpeech, PeakIsHalf) {
  const Waveform w = SynthSpeech(7, 1.0);
  EXPECT_EQ(w.size(), 8000u);
  EXPECT_NEAR(w.PeakAbs(), 0.5, 1e-6);
}

TEST(SynthSpeech, Deterministic) {
  EXPECT_EQ(SynthSpeech(7, 1.0).samples, SynthSpeech(7, 1.0).samples);
}

TEST(SynthSpeech, SeedsDifferInPitch) {
  const SpeechProfile p;
  const SpeechParams a = DrawSpeechParams(7, p);
  const SpeechParams b = DrawSpeechParams(8, p);
  EXPECT_NE(a.f0_hz, b.f0_hz);
  EXPECT_NE(SynthSpeech(7, 1.0).samples, SynthSpeech(8, 1.0).samples);
}

TEST(SynthNoise, WhiteHasUnitRms) {
  EXPECT_NEAR(SynthNoise(NoiseKind::kWhite, 1, 1.0).Rms(), 1.0, 1e-6);
}

TEST(SynthNoise, PinkTiltsLow) {
  const Waveform w = SynthNoise(NoiseKind::kPink, 1, 1.0);
  EXPECT_NEAR(w.Rms(), 1.0, 1e-6);
  EXPECT_GT(BandPower(w, 100, 200), BandPower(w, 1600, 3200));
}

TEST(SynthNoise, Deterministic) {
  for (NoiseKind k : {NoiseKind::kWhite, NoiseKind::kPink, NoiseKind::kBabble})
    EXPECT_EQ(SynthNoise(k, 5, 0.5).samples, SynthNoise(k, 5, 0.5).samples);
}

TEST(SynthNoise, UnknownKindRejected) {
  EXPECT_THROW(ParseNoiseKind("brown"), InvalidArgument);
}

TEST(MixAtSnr, PowerArithmetic) {
  Waveform speech(std::vector<double>(100, 1.0));
  Waveform noise = SynthNoise(NoiseKind::kWhite, 3, 100.0 / kDefaultSampleRate);
  EXPECT_NEAR(MixAtSnr(speech, noise, 0.0).scaled_noise.Power(), 1.0, 1e-9);
  EXPECT_NEAR(MixAtSnr(speech, noise, 10.0).scaled_noise.Power(), 0.1, 1e-9);
}

TEST(MixAtSnr, RoundTrip) {
  const Waveform s = SynthSpeech(2, 1.0);
  const Waveform n = SynthNoise(NoiseKind::kPink, 2, 1.0);
  for (double snr : {-5.0, 0.0, 5.0, 15.0, 30.0}) {
    const MixResult m = MixAtSnr(s, n, snr);
    EXPECT_NEAR(MeasureSnrDb(s, m.scaled_noise), snr, 1e-6);
    for (size_t i = 0; i < s.size(); ++i)
      ASSERT_NEAR(m.mix.samples[i], s.samples[i] + m.scaled_noise.samples[i], 1e-12);
  }
}

TEST(MixAtSnr, RejectsSilentNoise) {
  const Waveform s = SynthSpeech(2, 0.1);
  EXPECT_THROW(MixAtSnr(s, Waveform(std::vector<double>(s.size(), 0.0)), 0.0),
               InvalidArgument);
}

TEST(MakeCorpus, GridAndInvariants) {
  CorpusConfig c;
  c.items = 100;
  c.duration_s = 0.25;
  const Batch b = MakeCorpus(c);
  ASSERT_EQ(b.size(), 100u);
  for (const BatchItem &it : b.items) {
    EXPECT_NE(std::find(c.snr_grid_db.begin(), c.snr_grid_db.end(), it.snr_db),
              c.snr_grid_db.end());
    for (size_t i = 0; i < it.mix.size(); ++i)
      ASSERT_NEAR(it.mix.samples[i], it.clean.samples[i] + it.noise.samples[i], 1e-9);
  }
}

TEST(MakeCorpus, Deterministic) {
  CorpusConfig c;
  c.items = 8;
  c.task = TaskKind::kSv;
  const Batch a = MakeCorpus(c), b = MakeCorpus(c);
  for (size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.items[i].mix.samples, b.items[i].mix.samples);
    EXPECT_EQ(a.items[i].label, b.items[i].label);
  }
}

TEST(MakeCorpus, SpeakerLabelsFollowPitchBand) {
  CorpusConfig c;
  c.items = 40;
  c.task = TaskKind::kSv;
  c.class_count = 4;
  const Batch b = MakeCorpus(c);
  SpeechProfile p;
  for (const BatchItem &it : b.items) {
    ASSERT_GE(it.label, 0);
    ASSERT_LT(it.label, 4);
    const auto [lo, hi] = SpeakerBand(it.label, 4);
    p.f0_min_hz = lo;
    p.f0_max_hz = hi;
    const double f0 = DrawSpeechParams(it.speech_seed, p).f0_hz;
    EXPECT_GE(f0, lo);
    EXPECT_LE(f0, hi);
  }
}

TEST(RemixAtSnr, ReusesComponents) {
  CorpusConfig c;
  c.items = 4;
  const Batch b = RemixAtSnr(MakeCorpus(c), -5.0);
  for (const BatchItem &it : b.items) {
    EXPECT_EQ(it.snr_db, -5.0);
    EXPECT_NEAR(MeasureSnrDb(it.clean, it.noise), -5.0, 1e-6);
  }
}

TEST(Oir, IdentityAndScaling) {
  std::vector<Waveform> in = {SynthSpeech(1, 0.1), SynthSpeech(2, 0.1)};
  const OirMeasurement same = OutputToInputRatio(in, in);
  EXPECT_DOUBLE_EQ(same.ratio, 1.0);
  EXPECT_DOUBLE_EQ(same.ratio_db, 0.0);
  std::vector<Waveform> half = in;
  for (Waveform &w : half)
    for (double &s : w.samples) s *= 0.5;
  const OirMeasurement h = OutputToInputRatio(half, in);
  EXPECT_NEAR(h.ratio, 0.25, 1e-12);
  EXPECT_NEAR(h.ratio_db, -6.0206, 1e-4);
}

TEST(WaveIo, RoundTripWithinQuantization) {
  const Waveform w = SynthSpeech(4, 0.2);
  std::stringstream ss;
  WriteWave(ss, w);
  const Waveform r = ReadWave(ss);
  ASSERT_EQ(r.size(), w.size());
  EXPECT_EQ(r.sample_rate, w.sample_rate);
  for (size_t i = 0; i < w.size(); ++i)
    ASSERT_NEAR(r.samples[i], w.samples[i], 1.0 / 32768);
}

TEST(WaveIo, RejectsGarbage) {
  std::stringstream ss("not a wave file at all, definitely");
  EXPECT_THROW(ReadWave(ss), std::exception);
}

}  // namespace
}  // namespace plugin_se
