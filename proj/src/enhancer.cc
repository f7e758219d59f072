// src/enhancer.cc

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

#include "plugin-se/enhancer.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "plugin-se/downstream.h"
#include "plugin-se/errors.h"
#include "plugin-se/rng.h"

namespace plugin_se {

namespace {

constexpr int kEnhancerFormatVersion = 1;

// A saturating logit: Sigmoid(+-kSaturated) is exactly 1 or 0 in double.
constexpr double kSaturated = 1000.0;

}  // namespace

MaskEnhancer::MaskEnhancer(DenseNetwork net, StftConfig stft,
                           FeatureNormalizer normalizer)
    : net_(std::move(net)), stft_(stft), normalizer_(std::move(normalizer)) {
  stft_.Validate();
  if (net_.input_dim() != stft_.num_bins() ||
      net_.output_dim() != stft_.num_bins())
    throw InvalidArgument("MaskEnhancer: network must map bins to bins");
  if (net_.layer(net_.num_layers() - 1).activation != Activation::kSigmoid)
    throw InvalidArgument("MaskEnhancer: mask layer must be sigmoid");
  if (!normalizer_.empty() && normalizer_.mean().size() != stft_.num_bins())
    throw InvalidArgument("MaskEnhancer: normalizer size mismatch");
}

MaskEnhancer MaskEnhancer::Create(const EnhancerConfig &config) {
  config.stft.Validate();
  const int bins = config.stft.num_bins();
  std::vector<int> dims = {bins};
  std::vector<Activation> acts;
  for (int h : config.hidden) {
    if (h < 1) throw InvalidArgument("MaskEnhancer: hidden sizes must be >= 1");
    dims.push_back(h);
    acts.push_back(Activation::kRelu);
  }
  dims.push_back(bins);
  acts.push_back(Activation::kSigmoid);
  return MaskEnhancer(DenseNetwork::Glorot(dims, acts, config.seed),
                      config.stft);
}

MaskEnhancer MaskEnhancer::ConstantMask(double value, const StftConfig &stft) {
  if (!(value >= 0.0 && value <= 1.0))
    throw InvalidArgument("ConstantMask: value must be in [0, 1]");
  const int bins = stft.num_bins();
  DenseNetwork net = DenseNetwork::Zeros({bins, bins}, {Activation::kSigmoid});
  double logit;
  if (value == 0.0)
    logit = -kSaturated;
  else if (value == 1.0)
    logit = kSaturated;
  else
    logit = std::log(value / (1.0 - value));
  net.mutable_layer(0).biases.setConstant(logit);
  return MaskEnhancer(std::move(net), stft);
}

std::vector<double> MaskEnhancer::Pad(const Waveform &x, Padding *pad) const {
  ValidateWaveform(x, "Enhance");
  if (x.size() < static_cast<size_t>(stft_.frame_length))
    throw InvalidArgument("Enhance: input shorter than one analysis frame");
  *pad = CenterPadding(x.size(), stft_);
  std::vector<double> padded(pad->left + x.size() + pad->right, 0.0);
  std::copy(x.samples.begin(), x.samples.end(), padded.begin() + pad->left);
  return padded;
}

Eigen::MatrixXd MaskEnhancer::RawFeatures(const Waveform &x) const {
  Padding pad;
  return LogMagnitude(Stft(Pad(x, &pad), stft_));
}

Waveform MaskEnhancer::Forward(const Waveform &x, EnhancerTrace *trace) const {
  EnhancerTrace local;
  EnhancerTrace &t = trace ? *trace : local;
  const std::vector<double> padded = Pad(x, &t.pad);
  t.length = x.size();
  t.spec = Stft(padded, stft_);
  t.mask = net_.Forward(normalizer_.Apply(LogMagnitude(t.spec)),
                        trace ? &t.cache : nullptr);
  const ComplexMatrix masked = t.spec.array() * t.mask.array().cast<std::complex<double>>();
  const std::vector<double> y = Istft(masked, stft_, padded.size());
  return Waveform(std::vector<double>(y.begin() + t.pad.left,
                                      y.begin() + t.pad.left + x.size()),
                  x.sample_rate);
}

Waveform MaskEnhancer::Enhance(const Waveform &x) const {
  return Forward(x, nullptr);
}

Eigen::MatrixXd MaskEnhancer::Mask(const Waveform &x) const {
  EnhancerTrace t;
  Forward(x, &t);
  return t.mask;
}

Waveform MaskEnhancer::ApplyMask(const Waveform &x,
                                 const Eigen::MatrixXd &mask) const {
  Padding pad;
  const std::vector<double> padded = Pad(x, &pad);
  const ComplexMatrix spec = Stft(padded, stft_);
  if (mask.rows() != spec.rows() || mask.cols() != spec.cols())
    throw InvalidArgument("ApplyMask: mask shape mismatch");
  const ComplexMatrix masked = spec.array() * mask.array().cast<std::complex<double>>();
  const std::vector<double> y = Istft(masked, stft_, padded.size());
  return Waveform(std::vector<double>(y.begin() + pad.left,
                                      y.begin() + pad.left + x.size()),
                  x.sample_rate);
}

Eigen::VectorXd MaskEnhancer::Backward(const EnhancerTrace &trace,
                                       std::span<const double> grad_output) const {
  if (grad_output.size() != trace.length)
    throw InvalidArgument("MaskEnhancer::Backward: gradient length mismatch");
  std::vector<double> g(trace.pad.left + trace.length + trace.pad.right, 0.0);
  std::copy(grad_output.begin(), grad_output.end(), g.begin() + trace.pad.left);
  const Eigen::MatrixXd grad_mask = IstftGainAdjoint(trace.spec, g, stft_);
  return net_.Backward(trace.cache, grad_mask).parameter_gradient;
}

nlohmann::json MaskEnhancer::ToJson() const {
  return {{"format_version", kEnhancerFormatVersion},
          {"kind", "mask_enhancer"},
          {"stft", StftConfigToJson(stft_)},
          {"normalizer", normalizer_.ToJson()},
          {"net", net_.ToJson()}};
}

MaskEnhancer MaskEnhancer::FromJson(const nlohmann::json &j) {
  if (j.at("format_version").get<int>() != kEnhancerFormatVersion)
    throw SchemaError("enhancer checkpoint: unsupported format_version");
  if (j.at("kind").get<std::string>() != "mask_enhancer")
    throw SchemaError("enhancer checkpoint: wrong kind");
  return MaskEnhancer(DenseNetwork::FromJson(j.at("net")),
                      StftConfigFromJson(j.at("stft")),
                      FeatureNormalizer::FromJson(j.at("normalizer")));
}

std::vector<Waveform> EnhanceBatch(const MaskEnhancer &e,
                                   std::span<const Waveform> inputs,
                                   Execution exec) {
  std::vector<Waveform> out(inputs.size());
  ForEachIndex(inputs.size(), exec,
               [&](size_t i) { out[i] = e.Enhance(inputs[i]); });
  return out;
}

// ---------------------------------------------------------------------------

std::string EnhancerLossName(EnhancerLoss l) {
  switch (l) {
    case EnhancerLoss::kSiSdr: return "si_sdr";
    case EnhancerLoss::kCt: return "ct";
    case EnhancerLoss::kCm: return "cm";
  }
  return "?";
}

EnhancerLoss ParseEnhancerLoss(const std::string &name) {
  if (name == "si_sdr") return EnhancerLoss::kSiSdr;
  if (name == "ct") return EnhancerLoss::kCt;
  if (name == "cm") return EnhancerLoss::kCm;
  throw InvalidArgument("unknown enhancer loss '" + name + "'");
}

EnhancerTrainResult TrainEnhancer(const MaskEnhancer &init,
                                  const Batch &corpus,
                                  const EnhancerTrainOptions &opt,
                                  const DownstreamModel *downstream) {
  opt.loss_config.Validate();
  if (opt.epochs < 0) throw InvalidArgument("TrainEnhancer: epochs < 0");
  if (opt.batch_size < 1) throw InvalidArgument("TrainEnhancer: batch_size < 1");
  if (opt.loss == EnhancerLoss::kCm) {
    if (downstream == nullptr)
      throw InvalidArgument("TrainEnhancer: the cm loss needs a downstream model");
    if (downstream->is_identity())
      throw InvalidArgument(
          "TrainEnhancer: the cm loss needs a downstream model with "
          "distributions, not the SE identity");
  }
  EnhancerTrainResult result{init, {}};
  if (opt.epochs == 0) return result;
  if (corpus.size() == 0) throw InvalidArgument("TrainEnhancer: empty corpus");

  MaskEnhancer &enh = result.enhancer;
  const size_t n = corpus.size();
  if (opt.fit_normalizer) {
    std::vector<Eigen::MatrixXd> feats(n);
    ForEachIndex(n, opt.exec, [&](size_t i) {
      feats[i] = enh.RawFeatures(corpus.items[i].mix);
    });
    enh.set_normalizer(FeatureNormalizer::Fit(feats));
  }

  std::vector<FeatureDistribution> clean_dist;
  if (opt.loss == EnhancerLoss::kCm) {
    clean_dist.resize(n);
    ForEachIndex(n, opt.exec, [&](size_t i) {
      clean_dist[i] = downstream->Infer(corpus.items[i].clean);
    });
  }

  std::vector<double> params = enh.net().Parameters();
  AdamState adam(static_cast<int>(params.size()), opt.adam);
  Rng rng(DeriveSeed(opt.seed, 0x656e68));
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    adam.set_epoch(epoch);
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    int batches = 0;
    for (size_t start = 0; start < n; start += opt.batch_size) {
      const size_t end = std::min(n, start + static_cast<size_t>(opt.batch_size));
      const size_t b = end - start;
      std::vector<EnhancerTrace> traces(b);
      std::vector<Waveform> est(b), tgt(b), noise(b);
      ForEachIndex(b, opt.exec, [&](size_t k) {
        const BatchItem &item = corpus.items[order[start + k]];
        est[k] = enh.Forward(item.mix, &traces[k]);
        tgt[k] = item.clean;
        noise[k] = item.noise;
      });

      LossValue lv;
      switch (opt.loss) {
        case EnhancerLoss::kSiSdr:
          lv = SiSdrLoss(est, tgt, opt.loss_config);
          break;
        case EnhancerLoss::kCt:
          lv = CtLoss(est, tgt, noise, opt.loss_config);
          break;
        case EnhancerLoss::kCm: {
          std::vector<FeatureDistribution> vx(b), vs(b);
          ForEachIndex(b, opt.exec, [&](size_t k) {
            vx[k] = downstream->Infer(est[k]);
            vs[k] = clean_dist[order[start + k]];
          });
          lv = CmLoss(est, tgt, vx, vs, opt.loss_config);
          ForEachIndex(b, opt.exec, [&](size_t k) {
            const std::vector<double> g =
                downstream->InputGradient(est[k], lv.grad_distribution[k]);
            for (size_t t = 0; t < g.size(); ++t) lv.grad_estimate[k][t] += g[t];
          });
          break;
        }
      }
      if (!std::isfinite(lv.value))
        throw NumericError("TrainEnhancer: non-finite loss");

      std::vector<Eigen::VectorXd> slots(b);
      ForEachIndex(b, opt.exec, [&](size_t k) {
        slots[k] = enh.Backward(traces[k], lv.grad_estimate[k]);
      });
      Eigen::VectorXd grad = Eigen::VectorXd::Zero(params.size());
      for (const auto &s : slots) grad += s;
      adam.Step(params, std::span<const double>(grad.data(), grad.size()));
      enh.mutable_net().SetParameters(params);
      loss_sum += lv.value;
      ++batches;
    }
    result.curve.push_back({epoch, loss_sum / batches});
  }
  return result;
}

EnhancementMetrics EvaluateEnhancer(const MaskEnhancer &e, const Batch &corpus,
                                    Execution exec) {
  const size_t n = corpus.size();
  if (n == 0) throw InvalidArgument("EvaluateEnhancer: empty corpus");
  struct Slot {
    double in_db, out_db, sar_db, art, rel_art;
  };
  std::vector<Slot> slots(n);
  ForEachIndex(n, exec, [&](size_t i) {
    const BatchItem &item = corpus.items[i];
    const Waveform est = e.Enhance(item.mix);
    const double cap = std::numeric_limits<double>::infinity();
    const ItemTerm in = SiSdrTerm(item.mix.view(), item.clean.view(), cap, {});
    const ItemTerm out = SiSdrTerm(est.view(), item.clean.view(), cap, {});
    const ItemTerm sar = SiSarTerm(est.view(), item.clean.view(),
                                   item.noise.view(), cap,
                                   SarProjection::kApproximate, {});
    const double energy = est.Energy();
    slots[i] = {in.raw_db, out.raw_db, sar.raw_db, sar.artifact_energy,
                energy > 0.0 ? sar.artifact_energy / energy : 0.0};
  });
  EnhancementMetrics m;
  for (const Slot &s : slots) {
    m.input_si_sdr_db += s.in_db / n;
    m.output_si_sdr_db += s.out_db / n;
    m.output_si_sar_db += s.sar_db / n;
    m.artifact_energy += s.art / n;
    m.relative_artifact_energy += s.rel_art / n;
  }
  return m;
}

}  // namespace plugin_se
