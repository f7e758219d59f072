// plugin-se/nn-core.h

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

#ifndef PLUGIN_SE_NN_CORE_H_
#define PLUGIN_SE_NN_CORE_H_

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace plugin_se {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Activation { kIdentity, kRelu, kSigmoid, kSoftmax };

std::string ActivationName(Activation a);
Activation ParseActivation(const std::string &name);

/// Numerically stable logistic function.
double Sigmoid(double z);

struct DenseLayer {
  RowMatrix weights;  // out x in
  Eigen::VectorXd biases;
  Activation activation = Activation::kIdentity;

  int in_dim() const { return static_cast<int>(weights.cols()); }
  int out_dim() const { return static_cast<int>(weights.rows()); }
};

/// Activation trace of one forward pass. Columns are independent examples
/// (frames); `inputs[k]` feeds layer k, `outputs[k]` is its post-activation.
struct ForwardCache {
  uint64_t state_tag = 0;
  std::vector<Eigen::MatrixXd> inputs;
  std::vector<Eigen::MatrixXd> outputs;
};

struct BackwardResult {
  Eigen::VectorXd parameter_gradient;  // flat, same layout as Parameters()
  Eigen::MatrixXd input_gradient;      // in_dim x columns
};

/// Feed-forward stack of affine layers. The flat parameter layout is, layer
/// by layer, the row-major weights followed by the biases.
///
/// Every parameter change assigns a fresh state tag; a ForwardCache records
/// the tag it was produced under, and Backward refuses a cache whose tag does
/// not match.
class DenseNetwork {
 public:
  DenseNetwork() = default;
  explicit DenseNetwork(std::vector<DenseLayer> layers);

  /// Glorot-uniform weights, zero biases. `dims` has one more entry than
  /// `activations`.
  static DenseNetwork Glorot(const std::vector<int> &dims,
                             const std::vector<Activation> &activations,
                             uint64_t seed);
  static DenseNetwork Zeros(const std::vector<int> &dims,
                            const std::vector<Activation> &activations);

  int num_layers() const { return static_cast<int>(layers_.size()); }
  int input_dim() const;
  int output_dim() const;
  int parameter_count() const;
  const DenseLayer &layer(int i) const { return layers_.at(i); }
  uint64_t state_tag() const { return state_tag_; }

  /// Mutable access invalidates outstanding caches.
  DenseLayer &mutable_layer(int i);

  std::vector<double> Parameters() const;
  void SetParameters(std::span<const double> params);
  void AddToParameters(std::span<const double> delta);

  /// input: in_dim x columns.
  Eigen::MatrixXd Forward(const Eigen::MatrixXd &input,
                          ForwardCache *cache = nullptr) const;
  Eigen::VectorXd Forward(const Eigen::VectorXd &input) const;

  /// Gradient of a scalar loss given dLoss/dOutput, summed over columns.
  BackwardResult Backward(const ForwardCache &cache,
                          const Eigen::MatrixXd &output_gradient) const;

  nlohmann::json ToJson() const;
  static DenseNetwork FromJson(const nlohmann::json &j);

 private:
  void Validate() const;
  void Retag();

  std::vector<DenseLayer> layers_;
  uint64_t state_tag_ = 0;
};

// ---------------------------------------------------------------------------

struct AdamConfig {
  double lr0 = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double decay_gamma = 0.9;
  // The learning rate is multiplied by decay_gamma once every
  // `decay_period` epochs; 1 gives lr = lr0 * gamma^epoch.
  int decay_period = 1;
};

/// Adam with bias correction and an exponentially decaying learning rate.
class AdamState {
 public:
  AdamState() = default;
  AdamState(int parameter_count, const AdamConfig &config);

  const AdamConfig &config() const { return config_; }
  int64_t step() const { return step_; }
  int epoch() const { return epoch_; }
  void set_epoch(int e) { epoch_ = e; }
  const Eigen::VectorXd &first_moment() const { return m_; }
  const Eigen::VectorXd &second_moment() const { return v_; }

  double LearningRate() const;

  /// In-place update. Throws NumericError on non-finite gradients (params
  /// untouched) and InvalidArgument on size mismatch.
  void Step(std::span<double> params, std::span<const double> grads);

  nlohmann::json ToJson() const;
  static AdamState FromJson(const nlohmann::json &j);

 private:
  AdamConfig config_;
  int64_t step_ = 0;
  int epoch_ = 0;
  Eigen::VectorXd m_;
  Eigen::VectorXd v_;
};

// ---------------------------------------------------------------------------

struct GradientCheckOptions {
  double step = 1e-5;
  // Relative error is |a - n| / max(|a|, |n|, abs_floor).
  double abs_floor = 1e-6;
  // Check at most this many coordinates (chosen with `seed`); <= 0 checks
  // all of them.
  int max_coordinates = 0;
  uint64_t seed = 0;
};

struct GradientCheckResult {
  double max_rel_error = 0.0;
  bool pass = false;
  int checked = 0;
};

/// Compares `analytic` with central differences of `f` around `x`.
GradientCheckResult CheckGradient(
    const std::function<double(std::span<const double>)> &f,
    std::span<const double> x, std::span<const double> analytic,
    double tolerance, const GradientCheckOptions &options = {});

/// Loss on the network output: returns the value and writes dLoss/dOutput.
using OutputLoss =
    std::function<double(const Eigen::MatrixXd &output, Eigen::MatrixXd *grad)>;

/// Checks DenseNetwork::Backward against central differences over the
/// network parameters.
GradientCheckResult FiniteDiffCheck(const DenseNetwork &net,
                                    const OutputLoss &loss,
                                    const Eigen::MatrixXd &input,
                                    double tolerance,
                                    const GradientCheckOptions &options = {});

}  // namespace plugin_se

#endif  // PLUGIN_SE_NN_CORE_H_
