// plugin-se/features.h

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

#ifndef PLUGIN_SE_FEATURES_H_
#define PLUGIN_SE_FEATURES_H_

#include <Eigen/Dense>

#include <span>

#include "json.hpp"
#include "plugin-se/signal-core.h"
#include "plugin-se/stft.h"

namespace plugin_se {

/// log10(|STFT(w)| + 1e-8), bins x frames, no padding.
Eigen::MatrixXd Featurize(const Waveform &w, const StftConfig &cfg);

/// Per-bin standardization (x - mean) / std. A default-constructed
/// normalizer is the identity.
class FeatureNormalizer {
 public:
  FeatureNormalizer() = default;
  FeatureNormalizer(Eigen::VectorXd mean, Eigen::VectorXd inv_std);

  /// Statistics pooled over all frames of all matrices. Standard deviations
  /// below `min_std` are raised to it.
  static FeatureNormalizer Fit(std::span<const Eigen::MatrixXd> features,
                               double min_std = 1e-3);

  bool empty() const { return mean_.size() == 0; }
  const Eigen::VectorXd &mean() const { return mean_; }
  const Eigen::VectorXd &inv_std() const { return inv_std_; }

  Eigen::MatrixXd Apply(const Eigen::MatrixXd &features) const;
  /// Chain rule through Apply.
  Eigen::MatrixXd Backward(const Eigen::MatrixXd &grad) const;

  nlohmann::json ToJson() const;
  static FeatureNormalizer FromJson(const nlohmann::json &j);

 private:
  Eigen::VectorXd mean_;
  Eigen::VectorXd inv_std_;
};

nlohmann::json StftConfigToJson(const StftConfig &cfg);
StftConfig StftConfigFromJson(const nlohmann::json &j);

}  // namespace plugin_se

#endif  // PLUGIN_SE_FEATURES_H_
