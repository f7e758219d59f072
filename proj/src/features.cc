// src/features.cc

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

#include "plugin-se/features.h"

#include <cmath>

#include "plugin-se/errors.h"

namespace plugin_se {

Eigen::MatrixXd Featurize(const Waveform &w, const StftConfig &cfg) {
  ValidateWaveform(w, "Featurize");
  return LogMagnitude(Stft(w, cfg));
}

FeatureNormalizer::FeatureNormalizer(Eigen::VectorXd mean,
                                     Eigen::VectorXd inv_std)
    : mean_(std::move(mean)), inv_std_(std::move(inv_std)) {
  if (mean_.size() != inv_std_.size())
    throw InvalidArgument("FeatureNormalizer: mean/std size mismatch");
  if (!mean_.allFinite() || !inv_std_.allFinite() ||
      (inv_std_.array() <= 0.0).any())
    throw InvalidArgument("FeatureNormalizer: statistics must be finite, std > 0");
}

FeatureNormalizer FeatureNormalizer::Fit(
    std::span<const Eigen::MatrixXd> features, double min_std) {
  if (features.empty()) throw InvalidArgument("FeatureNormalizer: no data");
  const Eigen::Index dim = features[0].rows();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd sum_sq = Eigen::VectorXd::Zero(dim);
  double count = 0.0;
  for (const auto &f : features) {
    if (f.rows() != dim)
      throw InvalidArgument("FeatureNormalizer: inconsistent feature dims");
    sum += f.rowwise().sum();
    sum_sq += f.array().square().matrix().rowwise().sum();
    count += static_cast<double>(f.cols());
  }
  if (count == 0.0) throw InvalidArgument("FeatureNormalizer: no frames");
  Eigen::VectorXd mean = sum / count;
  Eigen::VectorXd var =
      (sum_sq / count - mean.array().square().matrix()).cwiseMax(0.0);
  Eigen::VectorXd inv_std =
      var.array().sqrt().max(min_std).inverse().matrix();
  return FeatureNormalizer(std::move(mean), std::move(inv_std));
}

Eigen::MatrixXd FeatureNormalizer::Apply(const Eigen::MatrixXd &f) const {
  if (empty()) return f;
  if (f.rows() != mean_.size())
    throw InvalidArgument("FeatureNormalizer: feature dim mismatch");
  return ((f.colwise() - mean_).array().colwise() * inv_std_.array()).matrix();
}

Eigen::MatrixXd FeatureNormalizer::Backward(const Eigen::MatrixXd &g) const {
  if (empty()) return g;
  return (g.array().colwise() * inv_std_.array()).matrix();
}

nlohmann::json FeatureNormalizer::ToJson() const {
  return {{"mean", std::vector<double>(mean_.data(), mean_.data() + mean_.size())},
          {"inv_std",
           std::vector<double>(inv_std_.data(), inv_std_.data() + inv_std_.size())}};
}

FeatureNormalizer FeatureNormalizer::FromJson(const nlohmann::json &j) {
  const auto mean = j.at("mean").get<std::vector<double>>();
  const auto inv = j.at("inv_std").get<std::vector<double>>();
  if (mean.empty() && inv.empty()) return FeatureNormalizer();
  return FeatureNormalizer(
      Eigen::Map<const Eigen::VectorXd>(mean.data(), mean.size()),
      Eigen::Map<const Eigen::VectorXd>(inv.data(), inv.size()));
}

nlohmann::json StftConfigToJson(const StftConfig &cfg) {
  return {{"frame_length", cfg.frame_length}, {"hop", cfg.hop}};
}

StftConfig StftConfigFromJson(const nlohmann::json &j) {
  StftConfig cfg;
  cfg.frame_length = j.at("frame_length").get<int>();
  cfg.hop = j.at("hop").get<int>();
  cfg.Validate();
  return cfg;
}

}  // namespace plugin_se
