// src/nn-core.cc

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

#include "plugin-se/nn-core.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "plugin-se/errors.h"
#include "plugin-se/rng.h"

namespace plugin_se {

namespace {

uint64_t NextStateTag() {
  static std::atomic<uint64_t> counter{0};
  return ++counter;
}

void ApplyActivation(Activation a, Eigen::MatrixXd &z) {
  switch (a) {
    case Activation::kIdentity:
      break;
    case Activation::kRelu:
      z = z.cwiseMax(0.0);
      break;
    case Activation::kSigmoid:
      z = z.unaryExpr([](double v) { return Sigmoid(v); });
      break;
    case Activation::kSoftmax:
      for (Eigen::Index c = 0; c < z.cols(); ++c) {
        auto col = z.col(c);
        const double m = col.maxCoeff();
        col = (col.array() - m).exp();
        col /= col.sum();
      }
      break;
  }
}

// dL/dz given dL/da and a = act(z), column-wise.
Eigen::MatrixXd ActivationBackward(Activation a, const Eigen::MatrixXd &out,
                                   const Eigen::MatrixXd &grad_out) {
  switch (a) {
    case Activation::kIdentity:
      return grad_out;
    case Activation::kRelu:
      return (out.array() > 0.0).select(grad_out, 0.0);
    case Activation::kSigmoid:
      return grad_out.array() * out.array() * (1.0 - out.array());
    case Activation::kSoftmax: {
      Eigen::MatrixXd dz(out.rows(), out.cols());
      for (Eigen::Index c = 0; c < out.cols(); ++c) {
        const double inner = out.col(c).dot(grad_out.col(c));
        dz.col(c) = out.col(c).array() * (grad_out.col(c).array() - inner);
      }
      return dz;
    }
  }
  throw InvalidArgument("unknown activation");
}

}  // namespace

std::string ActivationName(Activation a) {
  switch (a) {
    case Activation::kIdentity: return "identity";
    case Activation::kRelu: return "relu";
    case Activation::kSigmoid: return "sigmoid";
    case Activation::kSoftmax: return "softmax";
  }
  throw InvalidArgument("unknown activation");
}

Activation ParseActivation(const std::string &name) {
  if (name == "identity") return Activation::kIdentity;
  if (name == "relu") return Activation::kRelu;
  if (name == "sigmoid") return Activation::kSigmoid;
  if (name == "softmax") return Activation::kSoftmax;
  throw InvalidArgument("unknown activation '" + name + "'");
}

double Sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// ---------------------------------------------------------------------------

DenseNetwork::DenseNetwork(std::vector<DenseLayer> layers)
    : layers_(std::move(layers)) {
  Validate();
  Retag();
}

void DenseNetwork::Validate() const {
  if (layers_.empty()) throw InvalidArgument("DenseNetwork: no layers");
  for (size_t k = 0; k < layers_.size(); ++k) {
    const DenseLayer &l = layers_[k];
    if (l.weights.rows() == 0 || l.weights.cols() == 0)
      throw InvalidArgument("DenseNetwork: empty layer");
    if (l.biases.size() != l.weights.rows())
      throw InvalidArgument("DenseNetwork: bias size mismatch");
    if (k > 0 && l.in_dim() != layers_[k - 1].out_dim()) {
      std::ostringstream os;
      os << "DenseNetwork: layer " << k << " expects " << l.in_dim()
         << " inputs but layer " << k - 1 << " produces "
         << layers_[k - 1].out_dim();
      throw InvalidArgument(os.str());
    }
    if (l.activation == Activation::kSoftmax && k + 1 != layers_.size())
      throw InvalidArgument("DenseNetwork: softmax only allowed as the last activation");
  }
}

void DenseNetwork::Retag() { state_tag_ = NextStateTag(); }

DenseNetwork DenseNetwork::Glorot(const std::vector<int> &dims,
                                  const std::vector<Activation> &activations,
                                  uint64_t seed) {
  DenseNetwork net = Zeros(dims, activations);
  Rng rng(seed);
  for (DenseLayer &l : net.layers_) {
    const double bound = std::sqrt(6.0 / (l.in_dim() + l.out_dim()));
    for (Eigen::Index i = 0; i < l.weights.size(); ++i)
      l.weights.data()[i] = rng.Uniform(-bound, bound);
  }
  net.Retag();
  return net;
}

DenseNetwork DenseNetwork::Zeros(const std::vector<int> &dims,
                                 const std::vector<Activation> &activations) {
  if (dims.size() != activations.size() + 1 || activations.empty())
    throw InvalidArgument("DenseNetwork: need one activation per layer");
  std::vector<DenseLayer> layers;
  for (size_t k = 0; k < activations.size(); ++k) {
    if (dims[k] <= 0 || dims[k + 1] <= 0)
      throw InvalidArgument("DenseNetwork: non-positive layer size");
    DenseLayer l;
    l.weights = RowMatrix::Zero(dims[k + 1], dims[k]);
    l.biases = Eigen::VectorXd::Zero(dims[k + 1]);
    l.activation = activations[k];
    layers.push_back(std::move(l));
  }
  return DenseNetwork(std::move(layers));
}

int DenseNetwork::input_dim() const {
  return layers_.empty() ? 0 : layers_.front().in_dim();
}

int DenseNetwork::output_dim() const {
  return layers_.empty() ? 0 : layers_.back().out_dim();
}

int DenseNetwork::parameter_count() const {
  int n = 0;
  for (const DenseLayer &l : layers_)
    n += static_cast<int>(l.weights.size() + l.biases.size());
  return n;
}

DenseLayer &DenseNetwork::mutable_layer(int i) {
  Retag();
  return layers_.at(i);
}

std::vector<double> DenseNetwork::Parameters() const {
  std::vector<double> p;
  p.reserve(parameter_count());
  for (const DenseLayer &l : layers_) {
    p.insert(p.end(), l.weights.data(), l.weights.data() + l.weights.size());
    p.insert(p.end(), l.biases.data(), l.biases.data() + l.biases.size());
  }
  return p;
}

void DenseNetwork::SetParameters(std::span<const double> params) {
  if (static_cast<int>(params.size()) != parameter_count())
    throw InvalidArgument("SetParameters: size mismatch");
  size_t off = 0;
  for (DenseLayer &l : layers_) {
    std::copy_n(params.begin() + off, l.weights.size(), l.weights.data());
    off += l.weights.size();
    std::copy_n(params.begin() + off, l.biases.size(), l.biases.data());
    off += l.biases.size();
  }
  Retag();
}

void DenseNetwork::AddToParameters(std::span<const double> delta) {
  if (static_cast<int>(delta.size()) != parameter_count())
    throw InvalidArgument("AddToParameters: size mismatch");
  size_t off = 0;
  for (DenseLayer &l : layers_) {
    for (Eigen::Index i = 0; i < l.weights.size(); ++i)
      l.weights.data()[i] += delta[off++];
    for (Eigen::Index i = 0; i < l.biases.size(); ++i)
      l.biases[i] += delta[off++];
  }
  Retag();
}

Eigen::MatrixXd DenseNetwork::Forward(const Eigen::MatrixXd &input,
                                      ForwardCache *cache) const {
  if (layers_.empty()) throw InvalidArgument("Forward: empty network");
  if (input.rows() != input_dim()) {
    std::ostringstream os;
    os << "Forward: input has " << input.rows() << " rows, network expects "
       << input_dim();
    throw InvalidArgument(os.str());
  }
  if (cache != nullptr) {
    cache->state_tag = state_tag_;
    cache->inputs.clear();
    cache->outputs.clear();
  }
  Eigen::MatrixXd a = input;
  for (const DenseLayer &l : layers_) {
    Eigen::MatrixXd z = l.weights * a;
    z.colwise() += l.biases;
    ApplyActivation(l.activation, z);
    if (cache != nullptr) cache->inputs.push_back(std::move(a));
    a = std::move(z);
    if (cache != nullptr) cache->outputs.push_back(a);
  }
  return a;
}

Eigen::VectorXd DenseNetwork::Forward(const Eigen::VectorXd &input) const {
  Eigen::MatrixXd m = input;
  return Forward(m, nullptr).col(0);
}

BackwardResult DenseNetwork::Backward(
    const ForwardCache &cache, const Eigen::MatrixXd &output_gradient) const {
  if (cache.state_tag != state_tag_ ||
      cache.inputs.size() != layers_.size() ||
      cache.outputs.size() != layers_.size())
    throw InvalidArgument("Backward: cache does not belong to this network state");
  const Eigen::MatrixXd &last = cache.outputs.back();
  if (output_gradient.rows() != last.rows() ||
      output_gradient.cols() != last.cols())
    throw InvalidArgument("Backward: output gradient shape mismatch");

  BackwardResult r;
  r.parameter_gradient.resize(parameter_count());
  // Offsets of each layer's block in the flat layout.
  std::vector<Eigen::Index> offset(layers_.size());
  Eigen::Index off = 0;
  for (size_t k = 0; k < layers_.size(); ++k) {
    offset[k] = off;
    off += layers_[k].weights.size() + layers_[k].biases.size();
  }

  Eigen::MatrixXd grad = output_gradient;
  for (int k = static_cast<int>(layers_.size()) - 1; k >= 0; --k) {
    const DenseLayer &l = layers_[k];
    Eigen::MatrixXd dz = ActivationBackward(l.activation, cache.outputs[k], grad);
    Eigen::Map<RowMatrix> dw(r.parameter_gradient.data() + offset[k],
                             l.out_dim(), l.in_dim());
    dw.noalias() = dz * cache.inputs[k].transpose();
    r.parameter_gradient.segment(offset[k] + l.weights.size(), l.out_dim()) =
        dz.rowwise().sum();
    grad.noalias() = l.weights.transpose() * dz;
  }
  r.input_gradient = std::move(grad);
  return r;
}

nlohmann::json DenseNetwork::ToJson() const {
  nlohmann::json j;
  j["format_version"] = 1;
  j["layers"] = nlohmann::json::array();
  for (const DenseLayer &l : layers_) {
    nlohmann::json lj;
    lj["in"] = l.in_dim();
    lj["out"] = l.out_dim();
    lj["activation"] = ActivationName(l.activation);
    lj["weights"] = std::vector<double>(l.weights.data(),
                                        l.weights.data() + l.weights.size());
    lj["biases"] =
        std::vector<double>(l.biases.data(), l.biases.data() + l.biases.size());
    j["layers"].push_back(std::move(lj));
  }
  return j;
}

DenseNetwork DenseNetwork::FromJson(const nlohmann::json &j) {
  if (!j.contains("layers") || !j["layers"].is_array())
    throw InvalidArgument("network JSON: missing 'layers'");
  std::vector<DenseLayer> layers;
  for (const auto &lj : j["layers"]) {
    const int in = lj.at("in").get<int>();
    const int out = lj.at("out").get<int>();
    const auto w = lj.at("weights").get<std::vector<double>>();
    const auto b = lj.at("biases").get<std::vector<double>>();
    if (in <= 0 || out <= 0 || static_cast<int>(w.size()) != in * out ||
        static_cast<int>(b.size()) != out)
      throw InvalidArgument("network JSON: inconsistent layer shapes");
    DenseLayer l;
    l.weights = Eigen::Map<const RowMatrix>(w.data(), out, in);
    l.biases = Eigen::Map<const Eigen::VectorXd>(b.data(), out);
    l.activation = ParseActivation(lj.at("activation").get<std::string>());
    layers.push_back(std::move(l));
  }
  return DenseNetwork(std::move(layers));
}

// ---------------------------------------------------------------------------

AdamState::AdamState(int parameter_count, const AdamConfig &config)
    : config_(config),
      m_(Eigen::VectorXd::Zero(parameter_count)),
      v_(Eigen::VectorXd::Zero(parameter_count)) {
  if (config.decay_period < 1)
    throw InvalidArgument("AdamConfig: decay_period must be >= 1");
  if (!(config.lr0 >= 0.0) || !(config.decay_gamma > 0.0))
    throw InvalidArgument("AdamConfig: bad learning rate schedule");
}

double AdamState::LearningRate() const {
  return config_.lr0 *
         std::pow(config_.decay_gamma, epoch_ / config_.decay_period);
}

void AdamState::Step(std::span<double> params, std::span<const double> grads) {
  const auto n = static_cast<size_t>(m_.size());
  if (params.size() != n || grads.size() != n)
    throw InvalidArgument("AdamState::Step: size mismatch");
  for (double g : grads)
    if (!std::isfinite(g)) throw NumericError("Adam: non-finite gradient");
  ++step_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  const double lr = LearningRate();
  for (size_t i = 0; i < n; ++i) {
    m_[i] = b1 * m_[i] + (1.0 - b1) * grads[i];
    v_[i] = b2 * v_[i] + (1.0 - b2) * grads[i] * grads[i];
    const double mhat = m_[i] / c1;
    const double vhat = v_[i] / c2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + config_.eps);
  }
}

nlohmann::json AdamState::ToJson() const {
  nlohmann::json j;
  j["lr0"] = config_.lr0;
  j["beta1"] = config_.beta1;
  j["beta2"] = config_.beta2;
  j["eps"] = config_.eps;
  j["decay_gamma"] = config_.decay_gamma;
  j["decay_period"] = config_.decay_period;
  j["step"] = step_;
  j["epoch"] = epoch_;
  j["first_moment"] = std::vector<double>(m_.data(), m_.data() + m_.size());
  j["second_moment"] = std::vector<double>(v_.data(), v_.data() + v_.size());
  return j;
}

AdamState AdamState::FromJson(const nlohmann::json &j) {
  AdamConfig c;
  c.lr0 = j.at("lr0").get<double>();
  c.beta1 = j.at("beta1").get<double>();
  c.beta2 = j.at("beta2").get<double>();
  c.eps = j.at("eps").get<double>();
  c.decay_gamma = j.at("decay_gamma").get<double>();
  c.decay_period = j.at("decay_period").get<int>();
  const auto m = j.at("first_moment").get<std::vector<double>>();
  const auto v = j.at("second_moment").get<std::vector<double>>();
  if (m.size() != v.size())
    throw InvalidArgument("optimizer JSON: moment size mismatch");
  AdamState s(static_cast<int>(m.size()), c);
  s.step_ = j.at("step").get<int64_t>();
  s.epoch_ = j.at("epoch").get<int>();
  s.m_ = Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
  s.v_ = Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
  return s;
}

// ---------------------------------------------------------------------------

GradientCheckResult CheckGradient(
    const std::function<double(std::span<const double>)> &f,
    std::span<const double> x, std::span<const double> analytic,
    double tolerance, const GradientCheckOptions &options) {
  if (x.size() != analytic.size())
    throw InvalidArgument("CheckGradient: size mismatch");
  std::vector<size_t> coords(x.size());
  std::iota(coords.begin(), coords.end(), 0);
  if (options.max_coordinates > 0 &&
      coords.size() > static_cast<size_t>(options.max_coordinates)) {
    Rng rng(options.seed);
    // Partial Fisher-Yates: the first max_coordinates entries are a sample.
    for (int i = 0; i < options.max_coordinates; ++i) {
      const size_t j = i + rng.UniformInt(coords.size() - i);
      std::swap(coords[i], coords[j]);
    }
    coords.resize(options.max_coordinates);
  }
  std::vector<double> probe(x.begin(), x.end());
  GradientCheckResult r;
  for (size_t c : coords) {
    const double orig = probe[c];
    probe[c] = orig + options.step;
    const double fp = f(probe);
    probe[c] = orig - options.step;
    const double fm = f(probe);
    probe[c] = orig;
    const double numeric = (fp - fm) / (2.0 * options.step);
    const double denom =
        std::max({std::abs(numeric), std::abs(analytic[c]), options.abs_floor});
    const double rel = std::abs(numeric - analytic[c]) / denom;
    if (!std::isfinite(rel)) {
      r.max_rel_error = std::numeric_limits<double>::infinity();
    } else {
      r.max_rel_error = std::max(r.max_rel_error, rel);
    }
    ++r.checked;
  }
  r.pass = r.max_rel_error < tolerance;
  return r;
}

GradientCheckResult FiniteDiffCheck(const DenseNetwork &net,
                                    const OutputLoss &loss,
                                    const Eigen::MatrixXd &input,
                                    double tolerance,
                                    const GradientCheckOptions &options) {
  ForwardCache cache;
  Eigen::MatrixXd out = net.Forward(input, &cache);
  Eigen::MatrixXd g;
  loss(out, &g);
  const BackwardResult br = net.Backward(cache, g);

  DenseNetwork probe = net;
  auto f = [&](std::span<const double> p) {
    probe.SetParameters(p);
    Eigen::MatrixXd o = probe.Forward(input);
    Eigen::MatrixXd unused;
    return loss(o, &unused);
  };
  const std::vector<double> params = net.Parameters();
  return CheckGradient(
      f, params,
      std::span<const double>(br.parameter_gradient.data(),
                              br.parameter_gradient.size()),
      tolerance, options);
}

}  // namespace plugin_se
