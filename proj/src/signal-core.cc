// src/signal-core.cc

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

#include "plugin-se/signal-core.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

#include "plugin-se/errors.h"
#include "plugin-se/fft.h"
#include "plugin-se/rng.h"

namespace plugin_se {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Formants {
  double f1, f2;
};

// Resonance pairs for the phone templates; picked to be spread out in the
// (F1, F2) plane.
constexpr Formants kTemplates[kNumPhoneTemplates] = {
    {300, 2300}, {700, 1200}, {500, 1700}, {350, 800},
    {600, 2700}, {450, 2000}, {800, 1500}, {250, 3100},
};

double TemplateGain(int phone, double freq_hz) {
  const Formants &f = kTemplates[phone];
  auto bump = [freq_hz](double center, double bw) {
    const double d = (freq_hz - center) / bw;
    return std::exp(-0.5 * d * d);
  };
  const double tilt = 1.0 / std::sqrt(1.0 + freq_hz / 500.0);
  return tilt * (0.12 + bump(f.f1, 130.0) + 0.8 * bump(f.f2, 200.0));
}

size_t NumSamples(double duration_s, int sample_rate) {
  if (!(duration_s > 0.0) || !std::isfinite(duration_s))
    throw InvalidArgument("duration must be positive");
  if (sample_rate <= 0) throw InvalidArgument("sample rate must be positive");
  const size_t n = static_cast<size_t>(std::llround(duration_s * sample_rate));
  if (n == 0) throw InvalidArgument("duration shorter than one sample");
  return n;
}

void ScaleTo(std::vector<double> &x, double factor) {
  for (double &v : x) v *= factor;
}

}  // namespace

double Waveform::Energy() const { return SquaredNorm(samples); }

double Waveform::Rms() const { return std::sqrt(Power()); }

double Waveform::PeakAbs() const {
  double peak = 0.0;
  for (double v : samples) peak = std::max(peak, std::abs(v));
  return peak;
}

void ValidateWaveform(const Waveform &w, const char *what) {
  if (w.samples.empty())
    throw InvalidArgument(std::string(what) + ": empty waveform");
  if (w.sample_rate <= 0)
    throw InvalidArgument(std::string(what) + ": non-positive sample rate");
  for (double v : w.samples)
    if (!std::isfinite(v))
      throw InvalidArgument(std::string(what) + ": non-finite sample");
}

void CheckCompatible(const Waveform &a, const Waveform &b, const char *what) {
  if (a.size() != b.size()) {
    std::ostringstream os;
    os << what << ": length mismatch (" << a.size() << " vs " << b.size()
       << ")";
    throw InvalidArgument(os.str());
  }
  if (a.sample_rate != b.sample_rate)
    throw InvalidArgument(std::string(what) + ": sample rate mismatch");
}

double Dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidArgument("Dot: length mismatch");
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double SquaredNorm(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return s;
}

// ---------------------------------------------------------------------------

SpeechParams DrawSpeechParams(uint64_t seed, const SpeechProfile &profile) {
  if (!(profile.f0_min_hz > 0.0) || profile.f0_max_hz < profile.f0_min_hz)
    throw InvalidArgument("SpeechProfile: bad f0 range");
  if (profile.max_harmonics < 5)
    throw InvalidArgument("SpeechProfile: need at least 5 harmonics");
  Rng rng(seed);
  SpeechParams p;
  p.f0_hz = rng.Uniform(profile.f0_min_hz, profile.f0_max_hz);
  p.am_rate_hz = rng.Uniform(profile.am_rate_min_hz, profile.am_rate_max_hz);
  p.am_phase = rng.Uniform(0.0, kTwoPi);
  p.vibrato_phase = rng.Uniform(0.0, kTwoPi);
  if (!profile.phone_sequence.empty()) {
    for (int ph : profile.phone_sequence)
      if (ph < 0 || ph >= kNumPhoneTemplates)
        throw InvalidArgument("SpeechProfile: phone template out of range");
    p.phone_sequence = profile.phone_sequence;
  } else {
    const int segs = std::max(1, profile.num_segments);
    for (int i = 0; i < segs; ++i)
      p.phone_sequence.push_back(
          static_cast<int>(rng.UniformInt(kNumPhoneTemplates)));
  }
  p.harmonic_phases.resize(profile.max_harmonics);
  for (double &ph : p.harmonic_phases) ph = rng.Uniform(0.0, kTwoPi);
  return p;
}

Waveform SynthSpeech(uint64_t seed, double duration_s,
                     const SpeechProfile &profile) {
  return SynthSpeech(DrawSpeechParams(seed, profile), duration_s, profile);
}

Waveform SynthSpeech(const SpeechParams &params, double duration_s,
                     const SpeechProfile &profile) {
  const int rate = profile.sample_rate;
  const size_t n = NumSamples(duration_s, rate);
  const double nyquist = 0.5 * rate;
  const double f0 = params.f0_hz;
  const int num_harmonics = std::min<int>(
      profile.max_harmonics,
      static_cast<int>(0.95 * nyquist / (f0 * (1.0 + profile.vibrato_depth))));
  if (num_harmonics < 5)
    throw InvalidArgument("SynthSpeech: f0 too high for 5 harmonics");
  if (static_cast<int>(params.harmonic_phases.size()) < num_harmonics)
    throw InvalidArgument("SynthSpeech: missing harmonic phases");

  const int num_segments = static_cast<int>(params.phone_sequence.size());
  // gains[s][h]: envelope of harmonic h+1 under segment s's template.
  std::vector<std::vector<double>> gains(num_segments,
                                         std::vector<double>(num_harmonics));
  for (int s = 0; s < num_segments; ++s)
    for (int h = 0; h < num_harmonics; ++h)
      gains[s][h] = TemplateGain(params.phone_sequence[s], f0 * (h + 1));

  const double seg_len = static_cast<double>(n) / num_segments;
  const double xfade = 0.01 * rate;  // 10 ms crossfade between templates
  std::vector<double> out(n, 0.0);
  std::vector<double> phase(params.harmonic_phases.begin(),
                            params.harmonic_phases.begin() + num_harmonics);
  std::vector<double> amp(num_harmonics);
  for (size_t t = 0; t < n; ++t) {
    const double time = static_cast<double>(t) / rate;
    const double pos = static_cast<double>(t) / seg_len;
    const int seg = std::min(num_segments - 1, static_cast<int>(pos));
    // Blend toward the next template over the last `xfade` samples.
    const double into_next =
        (seg + 1 < num_segments)
            ? std::clamp((t - ((seg + 1) * seg_len - xfade)) / xfade, 0.0, 1.0)
            : 0.0;
    const double f_inst =
        f0 * (1.0 + profile.vibrato_depth *
                        std::sin(kTwoPi * profile.vibrato_rate_hz * time +
                                 params.vibrato_phase));
    const double env =
        1.0 - profile.am_depth * 0.5 *
                  (1.0 + std::sin(kTwoPi * params.am_rate_hz * time +
                                  params.am_phase));
    double v = 0.0;
    for (int h = 0; h < num_harmonics; ++h) {
      double g = gains[seg][h];
      if (into_next > 0.0) g = (1.0 - into_next) * g + into_next * gains[seg + 1][h];
      v += g * std::sin(phase[h]);
      phase[h] += kTwoPi * f_inst * (h + 1) / rate;
      if (phase[h] > kTwoPi) phase[h] -= kTwoPi;
    }
    out[t] = env * v;
  }
  Waveform w(std::move(out), rate);
  const double peak = w.PeakAbs();
  if (!(peak > 0.0)) throw NumericError("SynthSpeech: silent output");
  ScaleTo(w.samples, 0.5 / peak);
  return w;
}

// ---------------------------------------------------------------------------

NoiseKind ParseNoiseKind(const std::string &name) {
  if (name == "white") return NoiseKind::kWhite;
  if (name == "pink") return NoiseKind::kPink;
  if (name == "babble") return NoiseKind::kBabble;
  throw InvalidArgument("unknown noise kind '" + name + "'");
}

std::string NoiseKindName(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::kWhite: return "white";
    case NoiseKind::kPink: return "pink";
    case NoiseKind::kBabble: return "babble";
  }
  throw InvalidArgument("unknown noise kind");
}

Waveform SynthNoise(NoiseKind kind, uint64_t seed, double duration_s,
                    int sample_rate) {
  const size_t n = NumSamples(duration_s, sample_rate);
  std::vector<double> x(n, 0.0);
  switch (kind) {
    case NoiseKind::kWhite: {
      Rng rng(seed);
      for (double &v : x) v = rng.Normal();
      break;
    }
    case NoiseKind::kPink: {
      // |X_k|^2 proportional to 1/f, random phase, DC removed.
      Rng rng(seed);
      const int len = static_cast<int>(n);
      if (len < 2) throw InvalidArgument("SynthNoise: too short for pink");
      RealFft fft(len);
      std::vector<std::complex<double>> spec(fft.num_bins());
      for (int k = 1; k < fft.num_bins(); ++k) {
        const double mag = 1.0 / std::sqrt(static_cast<double>(k));
        spec[k] = std::polar(mag, rng.Uniform(0.0, kTwoPi));
      }
      if (len % 2 == 0) spec.back() = spec.back().real();
      fft.Inverse(spec, x);
      break;
    }
    case NoiseKind::kBabble: {
      SpeechProfile profile;
      profile.sample_rate = sample_rate;
      for (int talker = 0; talker < 6; ++talker) {
        Waveform s = SynthSpeech(DeriveSeed(seed, talker), duration_s, profile);
        for (size_t i = 0; i < n; ++i) x[i] += s.samples[i];
      }
      break;
    }
  }
  Waveform w(std::move(x), sample_rate);
  const double rms = w.Rms();
  if (!(rms > 0.0)) throw NumericError("SynthNoise: silent output");
  ScaleTo(w.samples, 1.0 / rms);
  return w;
}

double MeasureSnrDb(const Waveform &speech, const Waveform &noise) {
  return 10.0 * std::log10(speech.Power() / noise.Power());
}

MixResult MixAtSnr(const Waveform &speech, const Waveform &noise,
                   double snr_db) {
  ValidateWaveform(speech, "MixAtSnr speech");
  ValidateWaveform(noise, "MixAtSnr noise");
  CheckCompatible(speech, noise, "MixAtSnr");
  if (!std::isfinite(snr_db)) throw InvalidArgument("MixAtSnr: SNR not finite");
  const double ps = speech.Power();
  const double pn = noise.Power();
  if (!(ps > 0.0)) throw InvalidArgument("MixAtSnr: zero-power speech");
  if (!(pn > 0.0)) throw InvalidArgument("MixAtSnr: zero-power noise");
  const double alpha = std::sqrt(ps / (pn * std::pow(10.0, snr_db / 10.0)));
  MixResult r;
  r.scaled_noise = noise;
  ScaleTo(r.scaled_noise.samples, alpha);
  r.mix = speech;
  for (size_t i = 0; i < r.mix.size(); ++i)
    r.mix.samples[i] += r.scaled_noise.samples[i];
  return r;
}

// ---------------------------------------------------------------------------

std::string TaskName(TaskKind t) {
  switch (t) {
    case TaskKind::kSe: return "SE";
    case TaskKind::kSv: return "SV";
    case TaskKind::kAsr: return "ASR";
    case TaskKind::kRepresentation: return "Representation";
  }
  throw InvalidArgument("unknown task");
}

TaskKind ParseTaskName(const std::string &name) {
  std::string lower;
  for (char c : name) lower += static_cast<char>(std::tolower(c));
  if (lower == "se") return TaskKind::kSe;
  if (lower == "sv") return TaskKind::kSv;
  if (lower == "asr") return TaskKind::kAsr;
  if (lower == "representation" || lower == "rep") return TaskKind::kRepresentation;
  throw InvalidArgument("unknown task '" + name + "'");
}

std::pair<double, double> SpeakerBand(int label, int class_count) {
  if (class_count < 1 || label < 0 || label >= class_count)
    throw InvalidArgument("SpeakerBand: label out of range");
  // Log-spaced bands over 80-300 Hz with a guard gap of 20% of the band.
  const double lo = std::log(80.0), hi = std::log(300.0);
  const double width = (hi - lo) / class_count;
  const double a = lo + width * label + 0.1 * width;
  const double b = lo + width * (label + 1) - 0.1 * width;
  return {std::exp(a), std::exp(b)};
}

Batch MakeCorpus(const CorpusConfig &config) {
  if (config.items <= 0) throw InvalidArgument("MakeCorpus: zero item count");
  if (config.snr_grid_db.empty())
    throw InvalidArgument("MakeCorpus: empty SNR grid");
  if (config.noise_kinds.empty())
    throw InvalidArgument("MakeCorpus: no noise kinds");
  if (config.class_count < 1)
    throw InvalidArgument("MakeCorpus: class_count must be positive");
  if (config.task == TaskKind::kAsr && config.class_count > kNumPhoneTemplates)
    throw InvalidArgument("MakeCorpus: too many phone classes");

  Batch batch;
  batch.task = config.task;
  batch.class_count = config.task == TaskKind::kSe ? 1 : config.class_count;
  batch.items.reserve(config.items);
  for (int i = 0; i < config.items; ++i) {
    const uint64_t item_seed = DeriveSeed(config.seed, static_cast<uint64_t>(i));
    Rng rng(item_seed);
    BatchItem item;
    item.speech_seed = DeriveSeed(item_seed, 1);
    item.noise_seed = DeriveSeed(item_seed, 2);
    item.snr_db = config.snr_grid_db[rng.UniformInt(config.snr_grid_db.size())];
    item.noise_kind = config.noise_kinds[rng.UniformInt(config.noise_kinds.size())];

    SpeechProfile profile;
    profile.sample_rate = config.sample_rate;
    profile.num_segments = std::max(1, config.segments_per_item);
    if (config.task == TaskKind::kSv) {
      item.label = i % config.class_count;
      auto [lo, hi] = SpeakerBand(item.label, config.class_count);
      profile.f0_min_hz = lo;
      profile.f0_max_hz = hi;
    } else if (config.task == TaskKind::kAsr) {
      for (int s = 0; s < profile.num_segments; ++s)
        profile.phone_sequence.push_back(
            static_cast<int>(rng.UniformInt(config.class_count)));
    }
    SpeechParams params = DrawSpeechParams(item.speech_seed, profile);
    item.clean = SynthSpeech(params, config.duration_s, profile);
    const size_t n = item.clean.size();
    const int segs = static_cast<int>(params.phone_sequence.size());
    for (int s = 0; s < segs; ++s) {
      Segment seg;
      seg.begin = static_cast<size_t>(static_cast<double>(n) * s / segs);
      seg.end = static_cast<size_t>(static_cast<double>(n) * (s + 1) / segs);
      seg.label = params.phone_sequence[s];
      item.segments.push_back(seg);
    }
    item.raw_noise = SynthNoise(item.noise_kind, item.noise_seed,
                                config.duration_s, config.sample_rate);
    MixResult mixed = MixAtSnr(item.clean, item.raw_noise, item.snr_db);
    item.noise = std::move(mixed.scaled_noise);
    item.mix = std::move(mixed.mix);
    batch.items.push_back(std::move(item));
  }
  return batch;
}

Batch RemixAtSnr(const Batch &corpus, double snr_db) {
  Batch out = corpus;
  for (BatchItem &item : out.items) {
    MixResult mixed = MixAtSnr(item.clean, item.raw_noise, snr_db);
    item.snr_db = snr_db;
    item.noise = std::move(mixed.scaled_noise);
    item.mix = std::move(mixed.mix);
  }
  return out;
}

// ---------------------------------------------------------------------------

OirMeasurement OutputToInputRatio(std::span<const Waveform> outputs,
                                  std::span<const Waveform> inputs) {
  if (outputs.size() != inputs.size())
    throw InvalidArgument("OutputToInputRatio: list length mismatch");
  if (outputs.empty()) throw InvalidArgument("OutputToInputRatio: empty lists");
  double total = 0.0;
  for (size_t i = 0; i < outputs.size(); ++i) {
    CheckCompatible(outputs[i], inputs[i], "OutputToInputRatio");
    const double e_in = inputs[i].Energy();
    if (!(e_in > 0.0))
      throw InvalidArgument("OutputToInputRatio: zero-energy input");
    total += outputs[i].Energy() / e_in;
  }
  OirMeasurement m;
  m.ratio = total / outputs.size();
  m.ratio_db = 10.0 * std::log10(m.ratio);
  return m;
}

}  // namespace plugin_se
