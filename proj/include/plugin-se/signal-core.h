// plugin-se/signal-core.h

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

#ifndef PLUGIN_SE_SIGNAL_CORE_H_
#define PLUGIN_SE_SIGNAL_CORE_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace plugin_se {

constexpr int kDefaultSampleRate = 8000;

/// Mono signal at a fixed sample rate. Amplitudes are dimensionless,
/// nominally within [-1, 1].
struct Waveform {
  std::vector<double> samples;
  int sample_rate = kDefaultSampleRate;

  Waveform() = default;
  explicit Waveform(std::vector<double> s, int rate = kDefaultSampleRate)
      : samples(std::move(s)), sample_rate(rate) {}

  size_t size() const { return samples.size(); }
  std::span<const double> view() const { return samples; }
  double Energy() const;
  double Power() const { return samples.empty() ? 0.0 : Energy() / size(); }
  double Rms() const;
  double PeakAbs() const;
};

/// Throws InvalidArgument unless the waveform is non-empty, finite and has a
/// positive sample rate.
void ValidateWaveform(const Waveform &w, const char *what);

/// Throws InvalidArgument if the two signals cannot be mixed or compared.
void CheckCompatible(const Waveform &a, const Waveform &b, const char *what);

double Dot(std::span<const double> a, std::span<const double> b);
double SquaredNorm(std::span<const double> a);

// ---------------------------------------------------------------------------
// Synthetic speech.

/// Spectral-envelope templates play the role of "phones": each is a pair of
/// formant-like resonances applied to the harmonic amplitudes.
constexpr int kNumPhoneTemplates = 8;

struct SpeechProfile {
  double f0_min_hz = 80.0;
  double f0_max_hz = 300.0;
  int max_harmonics = 40;
  double am_rate_min_hz = 2.0;
  double am_rate_max_hz = 5.0;
  double am_depth = 0.35;
  double vibrato_depth = 0.02;
  double vibrato_rate_hz = 5.0;
  // One template id per equal-length segment. Empty means a random sequence
  // of `num_segments` templates drawn from the seed.
  std::vector<int> phone_sequence;
  int num_segments = 4;
  int sample_rate = kDefaultSampleRate;
};

/// Parameters drawn from the seed; exposed so tests can inspect f0.
struct SpeechParams {
  double f0_hz = 0.0;
  double am_rate_hz = 0.0;
  double am_phase = 0.0;
  double vibrato_phase = 0.0;
  std::vector<int> phone_sequence;
  std::vector<double> harmonic_phases;
};

SpeechParams DrawSpeechParams(uint64_t seed, const SpeechProfile &profile);

/// Harmonic tone complex with slow amplitude modulation, peak-normalized to
/// 0.5. Deterministic in (seed, duration, profile).
Waveform SynthSpeech(uint64_t seed, double duration_s,
                     const SpeechProfile &profile = {});

/// Same, but with fully specified parameters.
Waveform SynthSpeech(const SpeechParams &params, double duration_s,
                     const SpeechProfile &profile);

// ---------------------------------------------------------------------------
// Noise.

enum class NoiseKind { kWhite, kPink, kBabble };

NoiseKind ParseNoiseKind(const std::string &name);
std::string NoiseKindName(NoiseKind kind);

/// Unit-RMS noise. Pink noise is synthesized in the frequency domain with a
/// 1/f power envelope and random phases; babble is the RMS-normalized sum of
/// six independent synthetic talkers.
Waveform SynthNoise(NoiseKind kind, uint64_t seed, double duration_s,
                    int sample_rate = kDefaultSampleRate);

struct MixResult {
  Waveform mix;
  Waveform scaled_noise;
};

/// Scales `noise` so that 10*log10(P_speech / P_noise) == snr_db on
/// full-utterance power, and adds it to `speech`.
MixResult MixAtSnr(const Waveform &speech, const Waveform &noise,
                   double snr_db);

/// 10*log10(P_speech / P_noise).
double MeasureSnrDb(const Waveform &speech, const Waveform &noise);

// ---------------------------------------------------------------------------
// Corpora.

enum class TaskKind { kSe = 0, kSv = 1, kAsr = 2, kRepresentation = 3 };

constexpr int kNumTasks = 4;

std::string TaskName(TaskKind t);
TaskKind ParseTaskName(const std::string &name);

/// A "phone" segment of an utterance, in samples.
struct Segment {
  size_t begin = 0;
  size_t end = 0;
  int label = 0;
};

struct BatchItem {
  Waveform clean;
  Waveform noise;  // already scaled to snr_db
  Waveform mix;
  double snr_db = 0.0;
  NoiseKind noise_kind = NoiseKind::kWhite;
  int label = 0;                  // speaker class (SV); 0 otherwise
  std::vector<Segment> segments;  // phone segments of the clean speech
  uint64_t speech_seed = 0;
  uint64_t noise_seed = 0;
  // Unscaled unit-RMS noise, kept so noise injection can remix at new SNRs.
  Waveform raw_noise;
};

struct Batch {
  std::vector<BatchItem> items;
  TaskKind task = TaskKind::kSe;
  int class_count = 1;
  size_t size() const { return items.size(); }
};

struct CorpusConfig {
  int items = 100;
  double duration_s = 1.0;
  int sample_rate = kDefaultSampleRate;
  std::vector<double> snr_grid_db = {0, 5, 10, 15, 20};
  std::vector<NoiseKind> noise_kinds = {NoiseKind::kWhite, NoiseKind::kPink};
  uint64_t seed = 1;
  TaskKind task = TaskKind::kSe;
  int class_count = 4;
  int segments_per_item = 4;
};

/// f0 band of synthetic speaker `label` out of `class_count`; bands are
/// disjoint and spread over 80-300 Hz.
std::pair<double, double> SpeakerBand(int label, int class_count);

Batch MakeCorpus(const CorpusConfig &config);

/// Returns a copy of `corpus` whose mixes are rebuilt at `snr_db` from the
/// stored clean speech and raw noise.
Batch RemixAtSnr(const Batch &corpus, double snr_db);

// ---------------------------------------------------------------------------
// Output-to-input ratio.

struct OirMeasurement {
  double ratio = 1.0;
  double ratio_db = 0.0;
};

/// Mean over pairs of ||out||^2 / ||in||^2.
OirMeasurement OutputToInputRatio(std::span<const Waveform> outputs,
                                  std::span<const Waveform> inputs);

}  // namespace plugin_se

#endif  // PLUGIN_SE_SIGNAL_CORE_H_
