// src/gate.cc

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

#include "plugin-se/gate.h"

#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "plugin-se/nn-core.h"

namespace plugin_se {

GateWeight::GateWeight(double value) : value_(value) {
  if (!std::isfinite(value) || value < 0.0 || value > 1.0) {
    std::ostringstream os;
    os << "gate weight " << value << " outside [0, 1]";
    throw InvalidArgument(os.str());
  }
}

GateWeight GateWeight::Clamped(double value) {
  if (std::isnan(value)) throw InvalidArgument("gate weight is NaN");
  return GateWeight(std::min(1.0, std::max(0.0, value)));
}

Waveform MixGate(const Waveform &s_hat, const Waveform &x, GateWeight w) {
  CheckCompatible(s_hat, x, "MixGate");
  if (w.value() == 0.0) return s_hat;
  if (w.value() == 1.0) return x;
  const double a = 1.0 - w.value();
  const double b = w.value();
  Waveform out(std::vector<double>(x.size()), x.sample_rate);
  for (size_t i = 0; i < x.size(); ++i)
    out.samples[i] = a * s_hat.samples[i] + b * x.samples[i];
  return out;
}

// ---------------------------------------------------------------------------

GateObjective::GateObjective(const MaskEnhancer &enhancer,
                             const DownstreamModel &downstream,
                             const Batch &corpus, Execution exec,
                             const LossConfig &loss_config)
    : GateObjective(
          [&] {
            std::vector<Waveform> mixes;
            mixes.reserve(corpus.size());
            for (const auto &item : corpus.items) mixes.push_back(item.mix);
            return EnhanceBatch(enhancer, mixes, exec);
          }(),
          downstream, corpus, exec, loss_config) {}

GateObjective::GateObjective(std::vector<Waveform> enhanced,
                             const DownstreamModel &downstream,
                             const Batch &corpus, Execution exec,
                             const LossConfig &loss_config)
    : downstream_(&downstream),
      exec_(exec),
      loss_config_(loss_config),
      enhanced_(std::move(enhanced)) {
  loss_config_.Validate();
  const size_t n = corpus.size();
  if (n == 0) throw InvalidArgument("gate objective: empty corpus");
  if (enhanced_.size() != n)
    throw InvalidArgument("gate objective: one enhanced signal per item needed");
  mixes_.resize(n);
  cleans_.resize(n);
  for (size_t i = 0; i < n; ++i) {
    CheckCompatible(enhanced_[i], corpus.items[i].mix, "gate objective");
    mixes_[i] = corpus.items[i].mix;
    cleans_[i] = corpus.items[i].clean;
  }
  if (downstream.is_identity()) return;
  enhanced_spec_.resize(n);
  diff_spec_.resize(n);
  clean_dist_.resize(n);
  targets_.resize(n);
  ForEachIndex(n, exec_, [&](size_t i) {
    enhanced_spec_[i] = Stft(enhanced_[i], downstream.stft());
    diff_spec_[i] = Stft(mixes_[i], downstream.stft()) - enhanced_spec_[i];
    clean_dist_[i] = downstream.Infer(cleans_[i]);
    targets_[i] = downstream.FrameTargets(corpus.items[i]);
  });
}

double GateObjective::Evaluate(double w, double *grad) const {
  const size_t n = mixes_.size();
  std::vector<double> value(n, 0.0), slope(n, 0.0);
  if (downstream_->is_identity()) {
    const GateWeight gw = GateWeight(w);
    ForEachIndex(n, exec_, [&](size_t i) {
      const Waveform mix = MixGate(enhanced_[i], mixes_[i], gw);
      std::vector<double> g(grad ? mix.size() : 0);
      const ItemTerm t =
          SiSdrTerm(mix.view(), cleans_[i].view(), loss_config_.db_clamp, g);
      value[i] = -t.db;
      if (grad) {
        double d = 0.0;
        for (size_t k = 0; k < g.size(); ++k)
          d -= g[k] * (mixes_[i].samples[k] - enhanced_[i].samples[k]);
        slope[i] = d;
      }
    });
  } else {
    ForEachIndex(n, exec_, [&](size_t i) {
      const ComplexMatrix &diff = diff_spec_[i];
      const ComplexMatrix spec = enhanced_spec_[i] + w * diff;
      ForwardCache cache;
      const FeatureDistribution v =
          downstream_->InferSpectrum(spec, grad ? &cache : nullptr);
      const LossValue kl =
          KlDivergence(std::span<const FeatureDistribution>(&v, 1),
                       std::span<const FeatureDistribution>(&clean_dist_[i], 1),
                       loss_config_);
      value[i] = kl.value;
      if (grad) {
        const ComplexMatrix g =
            downstream_->SpectrumGradient(spec, cache, kl.grad_distribution[0]);
        slope[i] = (g.conjugate().array() * diff.array()).real().sum();
      }
    });
  }
  double total = 0.0, total_slope = 0.0;
  for (size_t i = 0; i < n; ++i) {
    total += value[i] / n;
    total_slope += slope[i] / n;
  }
  if (grad) *grad = total_slope;
  return total;
}

double GateObjective::Value(double w) const { return Evaluate(w, nullptr); }

double GateObjective::ValueAndGradient(double w, double *grad) const {
  return Evaluate(w, grad);
}

SweepPoint GateObjective::Measure(double w) const {
  const GateWeight gw(w);
  const size_t n = mixes_.size();
  std::vector<Waveform> out(n);
  struct Slot {
    double loss = 0.0, score = 0.0;
    int hits = 0, frames = 0;
    bool clamped = false;
  };
  std::vector<Slot> slots(n);
  ForEachIndex(n, exec_, [&](size_t i) {
    out[i] = MixGate(enhanced_[i], mixes_[i], gw);
    Slot &s = slots[i];
    if (downstream_->is_identity()) {
      const ItemTerm t =
          SiSdrTerm(out[i].view(), cleans_[i].view(), loss_config_.db_clamp, {});
      s.loss = -t.db;
      s.score = t.db;
      s.clamped = t.clamped;
      return;
    }
    const FeatureDistribution v = downstream_->Infer(out[i]);
    s.loss = KlDivergence(std::span<const FeatureDistribution>(&v, 1),
                          std::span<const FeatureDistribution>(&clean_dist_[i], 1),
                          loss_config_)
                 .value;
    s.frames = static_cast<int>(targets_[i].size());
    s.hits = static_cast<int>(
        std::lround(FrameAccuracy(v, targets_[i]) * targets_[i].size()));
  });
  SweepPoint p;
  p.w = gw;
  p.oir = OutputToInputRatio(out, mixes_);
  long hits = 0, frames = 0;
  for (const Slot &s : slots) {
    p.downstream_loss += s.loss / n;
    p.accuracy += s.score / n;
    hits += s.hits;
    frames += s.frames;
    p.clamped_items += s.clamped ? 1 : 0;
  }
  if (!downstream_->is_identity())
    p.accuracy = frames ? static_cast<double>(hits) / frames : 0.0;
  return p;
}

// ---------------------------------------------------------------------------

namespace {

// Keeps the best (w, loss) seen; ties within `tol` go to the smaller w.
struct BestTracker {
  double tol;
  double w = std::numeric_limits<double>::quiet_NaN();
  double loss = std::numeric_limits<double>::infinity();

  void Offer(double cw, double closs) {
    if (std::isnan(w) || closs < loss - tol ||
        (std::abs(closs - loss) <= tol && cw < w)) {
      w = cw;
      loss = closs;
    }
  }
};

}  // namespace

GateResult OptimizeGate(const GateObjective &objective,
                        const GateOptions &options) {
  if (options.iterations < 0) throw InvalidArgument("OptimizeGate: iterations < 0");
  if (!(options.lr > 0.0)) throw InvalidArgument("OptimizeGate: lr must be > 0");
  GateResult r;
  BestTracker best{options.tie_tolerance};
  AdamConfig cfg;
  cfg.lr0 = options.lr;
  cfg.decay_gamma = 1.0;
  AdamState adam(1, cfg);
  double u = options.u0;

  auto fail = [&](const std::string &what) {
    throw GateNumericError("OptimizeGate: " + what, r.trace);
  };

  for (int it = 0; it <= options.iterations; ++it) {
    const double w = Sigmoid(u);
    double dldw = 0.0;
    const double loss = objective.ValueAndGradient(w, &dldw);
    r.trace.push_back({it, w, loss});
    if (!std::isfinite(loss)) fail("non-finite loss");
    if (!std::isfinite(dldw)) fail("non-finite gradient");
    best.Offer(w, loss);
    if (it == options.iterations) break;
    const double dldu = dldw * w * (1.0 - w);
    adam.Step(std::span<double>(&u, 1), std::span<const double>(&dldu, 1));
  }
  if (options.probe_endpoints) {
    for (double w : {0.0, 1.0}) {
      const double loss = objective.Value(w);
      r.trace.push_back({options.iterations + 1, w, loss});
      if (!std::isfinite(loss)) fail("non-finite loss at an endpoint");
      best.Offer(w, loss);
    }
  }
  r.w_star = GateWeight::Clamped(best.w);
  r.loss = best.loss;
  return r;
}

GateResult GridSearchGate(const GateObjective &objective, double step,
                          double tie_tolerance) {
  if (!(step > 0.0) || step > 1.0)
    throw InvalidArgument("GridSearchGate: step must be in (0, 1]");
  const int points = static_cast<int>(std::llround(1.0 / step)) + 1;
  GateResult r;
  BestTracker best{tie_tolerance};
  for (int k = 0; k < points; ++k) {
    const double w = std::min(1.0, k * step);
    const double loss = objective.Value(w);
    r.trace.push_back({k, w, loss});
    if (!std::isfinite(loss))
      throw GateNumericError("GridSearchGate: non-finite loss", r.trace);
    best.Offer(w, loss);
  }
  r.w_star = GateWeight::Clamped(best.w);
  r.loss = best.loss;
  return r;
}

std::vector<double> UniformGrid(int points) {
  if (points < 2) throw InvalidArgument("UniformGrid: need at least two points");
  std::vector<double> g(points);
  for (int k = 0; k < points; ++k)
    g[k] = static_cast<double>(k) / (points - 1);
  return g;
}

GateSweepCurve SweepGate(const GateObjective &objective,
                         std::span<const double> grid) {
  if (grid.empty()) throw InvalidArgument("SweepGate: empty grid");
  for (size_t k = 0; k < grid.size(); ++k) {
    GateWeight check(grid[k]);
    (void)check;
    if (k > 0 && !(grid[k] > grid[k - 1]))
      throw InvalidArgument("SweepGate: grid must be strictly increasing");
  }
  GateSweepCurve curve;
  curve.points.resize(grid.size());
  ForEachIndex(grid.size(), objective.exec(),
               [&](size_t k) { curve.points[k] = objective.Measure(grid[k]); });
  return curve;
}

void WriteSweepCsv(const GateSweepCurve &curve, std::ostream &os) {
  os << "w,oir_ratio,oir_db,downstream_loss,accuracy,clamped_items\n";
  os << std::setprecision(10);
  for (const SweepPoint &p : curve.points)
    os << p.w.value() << ',' << p.oir.ratio << ',' << p.oir.ratio_db << ','
       << p.downstream_loss << ',' << p.accuracy << ',' << p.clamped_items
       << '\n';
}

}  // namespace plugin_se
