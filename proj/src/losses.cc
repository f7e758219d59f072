// src/losses.cc

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

#include "plugin-se/losses.h"

#include <cmath>
#include <limits>
#include <numbers>

#include "plugin-se/errors.h"

namespace plugin_se {

namespace {

constexpr double kDbPerNeper = 10.0 / std::numbers::ln10;

// Clamps `raw` to +-cap. Returns true if clamping happened. NaN (0/0) counts
// as the degenerate low end.
bool ClampDb(double raw, double cap, double *out) {
  if (std::isnan(raw) || raw < -cap) {
    *out = -cap;
    return true;
  }
  if (raw > cap) {
    *out = cap;
    return true;
  }
  *out = raw;
  return false;
}

// 10 log10(num/den), with the conventions num=0 -> -inf and den=0 -> +inf.
double RatioDb(double num, double den) {
  if (num <= 0.0) return -std::numeric_limits<double>::infinity();
  if (den <= 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(num / den);
}

void CheckBatchSizes(size_t a, size_t b, const char *what) {
  if (a != b) throw InvalidArgument(std::string(what) + ": batch size mismatch");
  if (a == 0) throw InvalidArgument(std::string(what) + ": empty batch");
}

}  // namespace

void LossConfig::Validate() const {
  if (!std::isfinite(lambda_cm) || lambda_cm < 0.0 || !std::isfinite(lambda_ct) ||
      lambda_ct < 0.0)
    throw InvalidArgument("LossConfig: lambdas must be finite and non-negative");
  if (!(db_clamp > 0.0)) throw InvalidArgument("LossConfig: db_clamp must be positive");
  if (!(prob_floor > 0.0) || prob_floor >= 1.0)
    throw InvalidArgument("LossConfig: prob_floor must be in (0, 1)");
}

ItemTerm SiSdrTerm(std::span<const double> estimate,
                   std::span<const double> target, double db_clamp,
                   std::span<double> grad) {
  const size_t n = target.size();
  if (estimate.size() != n) throw InvalidArgument("SI-SDR: length mismatch");
  if (!grad.empty() && grad.size() != n)
    throw InvalidArgument("SI-SDR: gradient buffer size mismatch");
  const double ss = SquaredNorm(target);
  if (!(ss > 0.0)) throw InvalidArgument("SI-SDR: zero-energy target");

  const double alpha = Dot(estimate, target) / ss;
  double a = alpha * alpha * ss;  // ||s_t||^2
  double b = 0.0;                 // ||e_d||^2
  for (size_t i = 0; i < n; ++i) {
    const double e = estimate[i] - alpha * target[i];
    b += e * e;
  }
  ItemTerm t;
  t.raw_db = RatioDb(a, b);
  t.degenerate = !(a > 0.0);
  t.artifact_energy = b;
  t.clamped = ClampDb(t.raw_db, db_clamp, &t.db);
  if (!grad.empty()) {
    if (t.clamped) {
      std::fill(grad.begin(), grad.end(), 0.0);
    } else {
      // d/dŝ 10 log10(A/B) = (10/ln10) (2 s_t / A - 2 e_d / B)
      for (size_t i = 0; i < n; ++i) {
        const double st = alpha * target[i];
        const double ed = estimate[i] - st;
        grad[i] = kDbPerNeper * (2.0 * st / a - 2.0 * ed / b);
      }
    }
  }
  return t;
}

ItemTerm SiSarTerm(std::span<const double> estimate,
                   std::span<const double> target,
                   std::span<const double> noise, double db_clamp,
                   SarProjection projection, std::span<double> grad) {
  const size_t n = target.size();
  if (estimate.size() != n || noise.size() != n)
    throw InvalidArgument("SI-SAR: length mismatch");
  if (!grad.empty() && grad.size() != n)
    throw InvalidArgument("SI-SAR: gradient buffer size mismatch");
  const double ss = SquaredNorm(target);
  const double nn = SquaredNorm(noise);
  if (!(ss > 0.0)) throw InvalidArgument("SI-SAR: zero-energy target");
  if (!(nn > 0.0)) throw InvalidArgument("SI-SAR: zero-energy noise");
  const double es = Dot(estimate, target);
  const double en = Dot(estimate, noise);

  double cs = 0.0, cn = 0.0;
  if (projection == SarProjection::kApproximate) {
    cs = es / ss;
    cn = en / nn;
  } else {
    const double sn = Dot(target, noise);
    const double det = ss * nn - sn * sn;
    if (!(det > 1e-12 * ss * nn))
      throw InvalidArgument("SI-SAR: target and noise are collinear");
    cs = (nn * es - sn * en) / det;
    cn = (ss * en - sn * es) / det;
  }

  std::vector<double> xt(n), e(n);
  double a = 0.0, b = 0.0;
  for (size_t i = 0; i < n; ++i) {
    xt[i] = cs * target[i] + cn * noise[i];
    e[i] = estimate[i] - xt[i];
    a += xt[i] * xt[i];
    b += e[i] * e[i];
  }
  ItemTerm t;
  t.raw_db = RatioDb(a, b);
  t.degenerate = !(a > 0.0);
  t.artifact_energy = b;
  t.clamped = ClampDb(t.raw_db, db_clamp, &t.db);
  if (!grad.empty()) {
    if (t.clamped) {
      std::fill(grad.begin(), grad.end(), 0.0);
    } else if (projection == SarProjection::kExact) {
      for (size_t i = 0; i < n; ++i)
        grad[i] = kDbPerNeper * (2.0 * xt[i] / a - 2.0 * e[i] / b);
    } else {
      // x_t = P ŝ with P = s s^T/ss + n n^T/nn (symmetric, not a projector
      // unless s is orthogonal to n): dA = 2 P x_t, dB = 2 (e - P e).
      const double sx = Dot(target, xt) / ss, nx = Dot(noise, xt) / nn;
      const double se = Dot(target, e) / ss, ne = Dot(noise, e) / nn;
      for (size_t i = 0; i < n; ++i) {
        const double da = 2.0 * (sx * target[i] + nx * noise[i]);
        const double db = 2.0 * (e[i] - se * target[i] - ne * noise[i]);
        grad[i] = kDbPerNeper * (da / a - db / b);
      }
    }
  }
  return t;
}

// ---------------------------------------------------------------------------

LossValue SiSdrLoss(std::span<const Waveform> estimates,
                    std::span<const Waveform> targets,
                    const LossConfig &config) {
  config.Validate();
  CheckBatchSizes(estimates.size(), targets.size(), "SI-SDR");
  const double n_items = static_cast<double>(estimates.size());
  LossValue lv;
  lv.grad_estimate.resize(estimates.size());
  for (size_t i = 0; i < estimates.size(); ++i) {
    CheckCompatible(estimates[i], targets[i], "SI-SDR");
    auto &g = lv.grad_estimate[i];
    g.resize(estimates[i].size());
    const ItemTerm t = SiSdrTerm(estimates[i].samples, targets[i].samples,
                                 config.db_clamp, g);
    for (double &v : g) v *= -1.0 / n_items;
    lv.value -= t.db / n_items;
    lv.clamped.push_back(t.clamped);
    lv.degenerate.push_back(t.degenerate);
    lv.item_terms.push_back(t.raw_db);
  }
  return lv;
}

LossValue SiSarLoss(std::span<const Waveform> estimates,
                    std::span<const Waveform> targets,
                    std::span<const Waveform> noises,
                    const LossConfig &config) {
  config.Validate();
  CheckBatchSizes(estimates.size(), targets.size(), "SI-SAR");
  CheckBatchSizes(estimates.size(), noises.size(), "SI-SAR");
  const double n_items = static_cast<double>(estimates.size());
  LossValue lv;
  lv.grad_estimate.resize(estimates.size());
  for (size_t i = 0; i < estimates.size(); ++i) {
    CheckCompatible(estimates[i], targets[i], "SI-SAR");
    CheckCompatible(estimates[i], noises[i], "SI-SAR");
    auto &g = lv.grad_estimate[i];
    g.resize(estimates[i].size());
    const ItemTerm t =
        SiSarTerm(estimates[i].samples, targets[i].samples, noises[i].samples,
                  config.db_clamp, config.sar_projection, g);
    for (double &v : g) v *= -1.0 / n_items;
    lv.value -= t.db / n_items;
    lv.clamped.push_back(t.clamped);
    lv.degenerate.push_back(t.degenerate);
    lv.item_terms.push_back(t.raw_db);
  }
  return lv;
}

LossValue KlDivergence(std::span<const FeatureDistribution> vx,
                       std::span<const FeatureDistribution> vs,
                       const LossConfig &config) {
  config.Validate();
  CheckBatchSizes(vx.size(), vs.size(), "KL");
  const double n_items = static_cast<double>(vx.size());
  const double floor = config.prob_floor;
  LossValue lv;
  lv.grad_distribution.resize(vx.size());
  for (size_t i = 0; i < vx.size(); ++i) {
    const FeatureDistribution &x = vx[i];
    const FeatureDistribution &s = vs[i];
    if (x.rows() != s.rows() || x.cols() != s.cols() || x.size() == 0)
      throw InvalidArgument("KL: distribution shape mismatch");
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      if (std::abs(x.col(c).sum() - 1.0) > 1e-6 ||
          std::abs(s.col(c).sum() - 1.0) > 1e-6 || x.col(c).minCoeff() < 0.0 ||
          s.col(c).minCoeff() < 0.0)
        throw InvalidArgument("KL: inputs must be probability distributions");
    }
    FeatureDistribution &g = lv.grad_distribution[i];
    g.setZero(x.rows(), x.cols());
    double d = 0.0;
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      for (Eigen::Index k = 0; k < x.rows(); ++k) {
        const double p = s(k, c);
        if (p == 0.0) continue;
        const double q = std::max(x(k, c), floor);
        d += p * std::log(std::max(p, floor) / q);
        if (x(k, c) > floor) g(k, c) = -p / x(k, c) / n_items;
      }
    }
    lv.value += d / n_items;
    lv.item_terms.push_back(d);
  }
  return lv;
}

LossValue CmLoss(std::span<const Waveform> estimates,
                 std::span<const Waveform> targets,
                 std::span<const FeatureDistribution> vx,
                 std::span<const FeatureDistribution> vs,
                 const LossConfig &config) {
  LossValue sdr = SiSdrLoss(estimates, targets, config);
  LossValue kl = KlDivergence(vx, vs, config);
  sdr.value += config.lambda_cm * kl.value;
  sdr.grad_distribution = std::move(kl.grad_distribution);
  for (auto &g : sdr.grad_distribution) g *= config.lambda_cm;
  return sdr;
}

LossValue CtLoss(std::span<const Waveform> estimates,
                 std::span<const Waveform> targets,
                 std::span<const Waveform> noises,
                 const LossConfig &config) {
  LossValue sdr = SiSdrLoss(estimates, targets, config);
  const LossValue sar = SiSarLoss(estimates, targets, noises, config);
  sdr.value += config.lambda_ct * sar.value;
  for (size_t i = 0; i < sdr.grad_estimate.size(); ++i)
    for (size_t j = 0; j < sdr.grad_estimate[i].size(); ++j)
      sdr.grad_estimate[i][j] += config.lambda_ct * sar.grad_estimate[i][j];
  return sdr;
}

LossValue Mse(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidArgument("MSE: length mismatch");
  if (a.empty()) throw InvalidArgument("MSE: empty input");
  const double n = static_cast<double>(a.size());
  LossValue lv;
  lv.grad_estimate.assign(1, std::vector<double>(a.size()));
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    lv.value += d * d / n;
    lv.grad_estimate[0][i] = 2.0 * d / n;
  }
  return lv;
}

}  // namespace plugin_se
