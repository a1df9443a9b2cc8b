// Copyright 2026 The photonvae Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "photonvae/errors.hpp"
#include "photonvae/sampling.hpp"

namespace photonvae {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

enum class Activation { Selu, LeakyRelu };

/// Layer widths and regularization of the encoder / decoder / classifier.
/// Hidden layers are affine -> batch norm -> activation -> dropout.
struct NetworkSpec {
  int input_dim = 5;
  int latent_dim = 3;
  std::vector<int> encoder_widths{16, 32, 64, 32, 16};
  std::vector<int> decoder_widths{8, 16, 32, 16};  // followed by input_dim
  std::vector<int> classifier_widths{16, 8};
  int num_classes = 2;
  double dropout_rate = 0.2;
  double leaky_slope = 0.01;
  double bn_momentum = 0.9;
  double bn_epsilon = 1e-5;
  bool classify_from_mean = true;  // classifier reads mu; false feeds it the sampled z

  /// One sigmoid unit for two classes, a softmax over num_classes otherwise.
  [[nodiscard]] int classifier_outputs() const {
    return num_classes == 2 ? 1 : num_classes;
  }
  [[nodiscard]] bool binary() const { return num_classes == 2; }

  void validate() const {
    if (input_dim < 1) throw ConfigError("input_dim must be >= 1");
    if (latent_dim < 1) throw ConfigError("latent_dim must be >= 1");
    if (num_classes < 2) throw ConfigError("num_classes must be >= 2");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
      throw ConfigError("dropout_rate must lie in [0, 1)");
    if (!(bn_momentum >= 0.0 && bn_momentum < 1.0))
      throw ConfigError("bn_momentum must lie in [0, 1)");
    for (const auto* widths : {&encoder_widths, &decoder_widths, &classifier_widths})
      for (int w : *widths)
        if (w < 1) throw ConfigError("layer widths must be >= 1");
  }

  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

/// Which stochastic and normalization behavior a forward pass uses.
struct ForwardOptions {
  bool dropout = false;
  bool batch_statistics = false;  // normalize with batch moments, else running
  bool sample_latent = false;     // z = mu + sigma * eps, else z = mu

  static ForwardOptions training() { return {true, true, true}; }
  static ForwardOptions inference() { return {}; }
};

struct LossWeights {
  double recon = 1.0;
  double kl = 1.0;
  double classification = 1.0;
};

struct LossBreakdown {
  double recon = 0.0;
  double kl = 0.0;
  double classification = 0.0;
  double total = 0.0;
};

inline constexpr double kProbabilityClamp = 1e-7;
inline constexpr double kSeluScale = 1.0507009873554804934193349852946;
inline constexpr double kSeluAlpha = 1.6732632423543772848170429916717;

/// Labels below zero mark unlabeled rows, which only enter the VAE terms.
inline constexpr int kUnlabeled = -1;

/// Mean squared error over all N * d entries.
inline double loss_recon(const Matrix& x, const Matrix& x_hat) {
  if (x.rows() != x_hat.rows() || x.cols() != x_hat.cols())
    throw DimensionError("loss_recon: shape mismatch");
  if (x.size() == 0) return 0.0;
  return (x - x_hat).array().square().sum() / static_cast<double>(x.size());
}

/// KL(N(mu, exp(logvar)) || N(0, I)) averaged over the batch.
inline double loss_kl(const Matrix& mu, const Matrix& logvar) {
  if (mu.rows() != logvar.rows() || mu.cols() != logvar.cols())
    throw DimensionError("loss_kl: shape mismatch");
  if (mu.rows() == 0) return 0.0;
  const double sum =
      (1.0 + logvar.array() - mu.array().square() - logvar.array().exp()).sum();
  return -0.5 * sum / static_cast<double>(mu.rows());
}

/// Binary cross entropy over labeled rows; `y_hat` is the probability of class 1.
inline double loss_bce(std::span<const int> labels, std::span<const double> y_hat) {
  if (labels.size() != y_hat.size()) throw DimensionError("loss_bce: size mismatch");
  double sum = 0.0;
  std::size_t labeled = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) continue;
    const double p = std::clamp(y_hat[i], kProbabilityClamp, 1.0 - kProbabilityClamp);
    sum += labels[i] == 1 ? std::log(p) : std::log(1.0 - p);
    ++labeled;
  }
  return labeled == 0 ? 0.0 : -sum / static_cast<double>(labeled);
}

/// Categorical cross entropy over labeled rows of a probability matrix.
inline double loss_cross_entropy(std::span<const int> labels, const Matrix& probs) {
  if (static_cast<Eigen::Index>(labels.size()) != probs.rows())
    throw DimensionError("loss_cross_entropy: size mismatch");
  double sum = 0.0;
  std::size_t labeled = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) continue;
    if (labels[i] >= probs.cols())
      throw DimensionError("loss_cross_entropy: label out of range");
    sum += std::log(std::max(probs(static_cast<Eigen::Index>(i), labels[i]),
                             kProbabilityClamp));
    ++labeled;
  }
  return labeled == 0 ? 0.0 : -sum / static_cast<double>(labeled);
}

/// z = mu + exp(logvar / 2) * eps.
inline Matrix reparameterize(const Matrix& mu, const Matrix& logvar,
                             const Matrix& eps) {
  if (mu.rows() != logvar.rows() || mu.cols() != logvar.cols() ||
      mu.rows() != eps.rows() || mu.cols() != eps.cols())
    throw DimensionError("reparameterize: shape mismatch");
  return mu.array() + (0.5 * logvar.array()).exp() * eps.array();
}

namespace detail {

struct DenseSlot {
  std::size_t weight = 0;  // row-major out x in
  std::size_t bias = 0;
  int in = 0;
  int out = 0;
};

struct NormSlot {
  std::size_t gamma = 0;
  std::size_t beta = 0;
  std::size_t running_mean = 0;  // offsets into the buffer block
  std::size_t running_var = 0;
  int width = 0;
};

struct StackLayout {
  std::string name;
  std::vector<DenseSlot> hidden;
  std::vector<NormSlot> norms;
  DenseSlot output;
  Activation activation = Activation::Selu;
};

struct LayerCache {
  Matrix input;
  Matrix xhat;
  Vector batch_mean;  // empty unless batch moments were used
  Vector batch_var;
  Vector inv_std;
  Matrix pre_activation;
  Matrix mask;  // scaled keep mask; empty when dropout is off
};

inline double activate(Activation act, double x, double slope) {
  if (act == Activation::Selu)
    return x > 0.0 ? kSeluScale * x : kSeluScale * kSeluAlpha * std::expm1(x);
  return x > 0.0 ? x : slope * x;
}

inline double activate_grad(Activation act, double x, double slope) {
  if (act == Activation::Selu)
    return x > 0.0 ? kSeluScale : kSeluScale * kSeluAlpha * std::exp(x);
  return x > 0.0 ? 1.0 : slope;
}

}  // namespace detail

/// Activations and intermediates of one stack, kept for backpropagation.
struct StackCache {
  std::vector<detail::LayerCache> layers;
  Matrix last_hidden;
};

/// Everything a forward pass produces over a batch (rows are samples).
struct ForwardPass {
  ForwardOptions options;
  Matrix mu;
  Matrix logvar;
  Matrix eps;
  Matrix z;
  Matrix x_hat;
  Matrix logits;
  Matrix probs;  // N x 1 (probability of class 1) or N x num_classes
  StackCache encoder;
  StackCache decoder;
  StackCache classifier;
};

/// Named contiguous range of the flat parameter vector.
struct ParameterBlock {
  std::string name;
  std::size_t offset = 0;
  std::size_t size = 0;
};

/// Encoder -> latent Gaussian -> (decoder, classifier) with every trainable
/// value in one flat parameter vector and the normalization running moments in
/// a separate buffer vector.
///
/// Parameter order, per stack (encoder, decoder, classifier): for each hidden
/// layer its weight (row-major out x in), bias, norm scale and norm shift;
/// then the output weight and bias. Buffers hold running mean then running
/// variance for each hidden layer in the same order.
class VaeModel {
 public:
  VaeModel(NetworkSpec spec, std::uint64_t seed) : spec_(std::move(spec)) {
    spec_.validate();
    build_layout();
    initialize(seed);
  }

  /// Rebuilds a model from stored values.
  VaeModel(NetworkSpec spec, std::vector<double> params, std::vector<double> buffers)
      : spec_(std::move(spec)) {
    spec_.validate();
    build_layout();
    if (params.size() != params_.size() || buffers.size() != buffers_.size())
      throw CheckpointError("parameter block size does not match network spec");
    params_ = std::move(params);
    buffers_ = std::move(buffers);
  }

  [[nodiscard]] const NetworkSpec& spec() const { return spec_; }
  [[nodiscard]] std::span<double> parameters() { return params_; }
  [[nodiscard]] std::span<const double> parameters() const { return params_; }
  [[nodiscard]] std::span<double> buffers() { return buffers_; }
  [[nodiscard]] std::span<const double> buffers() const { return buffers_; }
  [[nodiscard]] const std::vector<ParameterBlock>& parameter_blocks() const {
    return blocks_;
  }

  /// Parameter index range [begin, end) owned by the classifier stack.
  [[nodiscard]] std::pair<std::size_t, std::size_t> classifier_range() const {
    return stack_ranges_[2];
  }
  [[nodiscard]] std::pair<std::size_t, std::size_t> decoder_range() const {
    return stack_ranges_[1];
  }
  [[nodiscard]] std::pair<std::size_t, std::size_t> encoder_range() const {
    return stack_ranges_[0];
  }

  /// Sets the output layer of every stack to zero weights and biases.
  void zero_output_layers() {
    for (const auto* stack : {&encoder_, &decoder_, &classifier_}) {
      const auto& out = stack->output;
      std::fill_n(params_.begin() + static_cast<std::ptrdiff_t>(out.weight),
                  static_cast<std::ptrdiff_t>(out.in) * out.out, 0.0);
      std::fill_n(params_.begin() + static_cast<std::ptrdiff_t>(out.bias), out.out, 0.0);
    }
  }

  /// Returns (mu, logvar) for a batch of inputs.
  std::pair<Matrix, Matrix> encode(const Matrix& x, const ForwardOptions& opts,
                                   Rng& rng) const {
    check_input(x);
    StackCache cache;
    const Matrix out = forward_stack(encoder_, x, opts, rng, cache);
    return {out.leftCols(spec_.latent_dim), out.rightCols(spec_.latent_dim)};
  }

  Matrix decode(const Matrix& z, const ForwardOptions& opts, Rng& rng) const {
    check_latent(z);
    StackCache cache;
    return forward_stack(decoder_, z, opts, rng, cache);
  }

  /// Class probabilities: one column (class 1) for binary heads, otherwise a
  /// row-stochastic matrix.
  Matrix classify(const Matrix& z, const ForwardOptions& opts, Rng& rng) const {
    check_latent(z);
    StackCache cache;
    return to_probabilities(forward_stack(classifier_, z, opts, rng, cache));
  }

  /// Full pass. `fixed_eps`, when given, replaces the standard-normal draw.
  ForwardPass forward(const Matrix& x, const ForwardOptions& opts, Rng& rng,
                      const Matrix* fixed_eps = nullptr) const {
    check_input(x);
    ForwardPass fp;
    fp.options = opts;
    const Matrix enc = forward_stack(encoder_, x, opts, rng, fp.encoder);
    fp.mu = enc.leftCols(spec_.latent_dim);
    fp.logvar = enc.rightCols(spec_.latent_dim);
    if (opts.sample_latent) {
      if (fixed_eps != nullptr) {
        fp.eps = *fixed_eps;
      } else {
        fp.eps.resize(fp.mu.rows(), fp.mu.cols());
        std::normal_distribution<double> normal(0.0, 1.0);
        for (Eigen::Index i = 0; i < fp.eps.size(); ++i) fp.eps.data()[i] = normal(rng);
      }
      fp.z = reparameterize(fp.mu, fp.logvar, fp.eps);
    } else {
      fp.eps = Matrix::Zero(fp.mu.rows(), fp.mu.cols());
      fp.z = fp.mu;
    }
    fp.x_hat = forward_stack(decoder_, fp.z, opts, rng, fp.decoder);
    fp.logits = forward_stack(classifier_, spec_.classify_from_mean ? fp.mu : fp.z, opts,
                              rng, fp.classifier);
    fp.probs = to_probabilities(fp.logits);
    return fp;
  }

  /// Inference-mode pass (running statistics, no dropout, z = mu).
  [[nodiscard]] ForwardPass infer(const Matrix& x) const {
    Rng unused(0);
    return forward(x, ForwardOptions::inference(), unused);
  }

  /// Folds the batch moments recorded in `fp` into the running statistics
  /// (exponential average with factor bn_momentum).
  void update_running_statistics(const ForwardPass& fp) {
    const double m = spec_.bn_momentum;
    auto fold = [&](const detail::StackLayout& stack, const StackCache& cache) {
      for (std::size_t l = 0; l < stack.norms.size(); ++l) {
        const auto& norm = stack.norms[l];
        const auto& lc = cache.layers[l];
        if (lc.batch_mean.size() == 0) continue;
        Eigen::Map<Vector> running_mean(buffers_.data() + norm.running_mean, norm.width);
        Eigen::Map<Vector> running_var(buffers_.data() + norm.running_var, norm.width);
        running_mean = m * running_mean + (1.0 - m) * lc.batch_mean;
        running_var = m * running_var + (1.0 - m) * lc.batch_var;
      }
    };
    fold(encoder_, fp.encoder);
    fold(decoder_, fp.decoder);
    fold(classifier_, fp.classifier);
  }

  LossBreakdown loss(const ForwardPass& fp, const Matrix& x,
                     std::span<const int> labels,
                     const LossWeights& weights = {}) const {
    LossBreakdown out;
    out.recon = loss_recon(x, fp.x_hat);
    out.kl = loss_kl(fp.mu, fp.logvar);
    if (spec_.binary()) {
      std::vector<double> p(fp.probs.data(), fp.probs.data() + fp.probs.rows());
      out.classification = loss_bce(labels, p);
    } else {
      out.classification = loss_cross_entropy(labels, fp.probs);
    }
    out.total = weights.recon * out.recon + weights.kl * out.kl +
                weights.classification * out.classification;
    return out;
  }

  /// Exact gradient of the weighted total loss with respect to every
  /// parameter, using the dropout masks, normalization moments and eps
  /// recorded in `fp`. The reparameterization path carries gradient into mu
  /// and logvar; eps is treated as a constant.
  std::vector<double> backward(const ForwardPass& fp, const Matrix& x,
                               std::span<const int> labels,
                               const LossWeights& weights = {}) const {
    const auto n = static_cast<double>(x.rows());
    std::vector<double> grads(params_.size(), 0.0);

    // classification head
    Matrix d_logits = Matrix::Zero(fp.logits.rows(), fp.logits.cols());
    std::size_t labeled = 0;
    for (int y : labels) labeled += y >= 0 ? 1 : 0;
    if (labeled > 0 && weights.classification != 0.0) {
      const double scale = weights.classification / static_cast<double>(labeled);
      for (Eigen::Index i = 0; i < fp.probs.rows(); ++i) {
        const int y = labels[static_cast<std::size_t>(i)];
        if (y < 0) continue;
        if (spec_.binary()) {
          const double p = fp.probs(i, 0);
          if (p > kProbabilityClamp && p < 1.0 - kProbabilityClamp)
            d_logits(i, 0) = scale * (p - y);
        } else if (fp.probs(i, y) > kProbabilityClamp) {
          d_logits.row(i) = scale * fp.probs.row(i);
          d_logits(i, y) -= scale;
        }
      }
    }
    const Matrix d_class = backward_stack(classifier_, fp.classifier, d_logits,
                                          fp.options.batch_statistics, grads);

    // reconstruction head
    const Matrix d_xhat =
        (2.0 * weights.recon / static_cast<double>(x.size())) * (fp.x_hat - x);
    Matrix dz = backward_stack(decoder_, fp.decoder, d_xhat, fp.options.batch_statistics,
                               grads);
    if (!spec_.classify_from_mean) dz += d_class;

    // latent sample and KL term
    const int latent = spec_.latent_dim;
    Matrix d_enc(x.rows(), 2 * latent);
    auto d_mu = d_enc.leftCols(latent);
    auto d_logvar = d_enc.rightCols(latent);
    d_mu = dz + (weights.kl / n) * fp.mu;
    if (spec_.classify_from_mean) d_mu += d_class;
    d_logvar = (weights.kl / (2.0 * n)) * (fp.logvar.array().exp() - 1.0).matrix();
    if (fp.options.sample_latent)
      d_logvar.array() +=
          dz.array() * fp.eps.array() * 0.5 * (0.5 * fp.logvar.array()).exp();
    backward_stack(encoder_, fp.encoder, d_enc, fp.options.batch_statistics, grads);

    for (const auto& block : blocks_) {
      for (std::size_t i = block.offset; i < block.offset + block.size; ++i) {
        if (!std::isfinite(grads[i]))
          throw NumericalError("non-finite gradient in " + block.name + " at element " +
                               std::to_string(i - block.offset));
      }
    }
    return grads;
  }

  /// Hard class decisions in inference mode.
  [[nodiscard]] std::vector<int> predict(const Matrix& x) const {
    return decide(infer(x).probs);
  }

  [[nodiscard]] std::vector<int> decide(const Matrix& probs) const {
    std::vector<int> out(static_cast<std::size_t>(probs.rows()));
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
      if (spec_.binary()) {
        out[static_cast<std::size_t>(i)] = probs(i, 0) >= 0.5 ? 1 : 0;
      } else {
        Eigen::Index arg = 0;
        probs.row(i).maxCoeff(&arg);
        out[static_cast<std::size_t>(i)] = static_cast<int>(arg);
      }
    }
    return out;
  }

 private:
  void check_input(const Matrix& x) const {
    if (x.cols() != spec_.input_dim)
      throw DimensionError("expected " + std::to_string(spec_.input_dim) +
                           " input features, got " + std::to_string(x.cols()));
  }

  void check_latent(const Matrix& z) const {
    if (z.cols() != spec_.latent_dim)
      throw DimensionError("expected latent width " + std::to_string(spec_.latent_dim));
  }

  Matrix to_probabilities(const Matrix& logits) const {
    Matrix probs(logits.rows(), logits.cols());
    if (spec_.binary()) {
      for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        const double t = logits(i, 0);
        probs(i, 0) = t >= 0.0 ? 1.0 / (1.0 + std::exp(-t))
                               : std::exp(t) / (1.0 + std::exp(t));
      }
      return probs;
    }
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
      const double top = logits.row(i).maxCoeff();
      probs.row(i) = (logits.row(i).array() - top).exp().matrix();
      probs.row(i) /= probs.row(i).sum();
    }
    return probs;
  }

  detail::DenseSlot add_dense(const std::string& name, int in, int out) {
    detail::DenseSlot slot{params_.size(), 0, in, out};
    blocks_.push_back({name + ".weight", slot.weight,
                       static_cast<std::size_t>(in) * static_cast<std::size_t>(out)});
    params_.resize(params_.size() + blocks_.back().size, 0.0);
    slot.bias = params_.size();
    blocks_.push_back({name + ".bias", slot.bias, static_cast<std::size_t>(out)});
    params_.resize(params_.size() + static_cast<std::size_t>(out), 0.0);
    return slot;
  }

  detail::NormSlot add_norm(const std::string& name, int width) {
    const auto w = static_cast<std::size_t>(width);
    detail::NormSlot slot;
    slot.width = width;
    slot.gamma = params_.size();
    blocks_.push_back({name + ".scale", slot.gamma, w});
    params_.resize(params_.size() + w, 1.0);
    slot.beta = params_.size();
    blocks_.push_back({name + ".shift", slot.beta, w});
    params_.resize(params_.size() + w, 0.0);
    slot.running_mean = buffers_.size();
    buffers_.resize(buffers_.size() + w, 0.0);
    slot.running_var = buffers_.size();
    buffers_.resize(buffers_.size() + w, 1.0);
    return slot;
  }

  detail::StackLayout add_stack(const std::string& name, int in,
                                const std::vector<int>& widths, int out,
                                Activation act) {
    detail::StackLayout stack;
    stack.name = name;
    stack.activation = act;
    int prev = in;
    for (std::size_t l = 0; l < widths.size(); ++l) {
      const std::string layer = name + ".hidden" + std::to_string(l);
      stack.hidden.push_back(add_dense(layer, prev, widths[l]));
      stack.norms.push_back(add_norm(layer + ".norm", widths[l]));
      prev = widths[l];
    }
    stack.output = add_dense(name + ".output", prev, out);
    return stack;
  }

  void build_layout() {
    params_.clear();
    buffers_.clear();
    blocks_.clear();
    std::size_t begin = 0;
    encoder_ = add_stack("encoder", spec_.input_dim, spec_.encoder_widths,
                         2 * spec_.latent_dim, Activation::Selu);
    stack_ranges_[0] = {begin, params_.size()};
    begin = params_.size();
    decoder_ = add_stack("decoder", spec_.latent_dim, spec_.decoder_widths,
                         spec_.input_dim, Activation::Selu);
    stack_ranges_[1] = {begin, params_.size()};
    begin = params_.size();
    classifier_ = add_stack("classifier", spec_.latent_dim, spec_.classifier_widths,
                            spec_.classifier_outputs(), Activation::LeakyRelu);
    stack_ranges_[2] = {begin, params_.size()};
  }

  // Fan-in scaled uniform weights (variance 1 / fan_in), zero biases.
  void initialize(std::uint64_t seed) {
    Rng rng = make_rng(seed, 0x1417ULL, 0);
    auto init_dense = [&](const detail::DenseSlot& slot) {
      const double bound = std::sqrt(3.0 / slot.in);
      std::uniform_real_distribution<double> uniform(-bound, bound);
      const auto count = static_cast<std::size_t>(slot.in) * static_cast<std::size_t>(slot.out);
      for (std::size_t i = 0; i < count; ++i) params_[slot.weight + i] = uniform(rng);
    };
    for (const auto* stack : {&encoder_, &decoder_, &classifier_}) {
      for (const auto& slot : stack->hidden) init_dense(slot);
      init_dense(stack->output);
    }
  }

  using ConstMap = Eigen::Map<const Matrix>;
  using ConstVecMap = Eigen::Map<const Vector>;

  ConstMap weight(const detail::DenseSlot& s) const {
    return ConstMap(params_.data() + s.weight, s.out, s.in);
  }
  ConstVecMap vec(std::size_t offset, int size) const {
    return ConstVecMap(params_.data() + offset, size);
  }

  Matrix forward_stack(const detail::StackLayout& stack, const Matrix& input,
                       const ForwardOptions& opts, Rng& rng, StackCache& cache) const {
    const double keep = 1.0 - spec_.dropout_rate;
    const bool drop = opts.dropout && spec_.dropout_rate > 0.0;
    const auto n = static_cast<double>(input.rows());
    cache.layers.resize(stack.hidden.size());
    Matrix h = input;
    for (std::size_t l = 0; l < stack.hidden.size(); ++l) {
      const auto& dense = stack.hidden[l];
      const auto& norm = stack.norms[l];
      auto& lc = cache.layers[l];
      lc.input = h;
      Matrix a = h * weight(dense).transpose();
      a.rowwise() += vec(dense.bias, dense.out).transpose();

      Vector mean;
      Vector var;
      if (opts.batch_statistics) {
        mean = a.colwise().mean().transpose();
        var = (a.rowwise() - mean.transpose()).array().square().colwise().sum().transpose() / n;
        lc.batch_mean = mean;
        lc.batch_var = var;
      } else {
        mean = Eigen::Map<const Vector>(buffers_.data() + norm.running_mean, norm.width);
        var = Eigen::Map<const Vector>(buffers_.data() + norm.running_var, norm.width);
        lc.batch_mean.resize(0);
        lc.batch_var.resize(0);
      }
      lc.inv_std = (var.array() + spec_.bn_epsilon).rsqrt().matrix();
      lc.xhat = ((a.rowwise() - mean.transpose()).array().rowwise() *
                 lc.inv_std.transpose().array()).matrix();
      lc.pre_activation = (lc.xhat.array().rowwise() * vec(norm.gamma, norm.width).transpose().array()).matrix();
      lc.pre_activation.rowwise() += vec(norm.beta, norm.width).transpose();

      h = lc.pre_activation.unaryExpr([&](double v) {
        return detail::activate(stack.activation, v, spec_.leaky_slope);
      });
      if (drop) {
        std::bernoulli_distribution keep_unit(keep);
        lc.mask.resize(h.rows(), h.cols());
        for (Eigen::Index i = 0; i < lc.mask.size(); ++i)
          lc.mask.data()[i] = keep_unit(rng) ? 1.0 / keep : 0.0;
        h.array() *= lc.mask.array();
      } else {
        lc.mask.resize(0, 0);
      }
    }
    cache.last_hidden = h;
    Matrix out = h * weight(stack.output).transpose();
    out.rowwise() += vec(stack.output.bias, stack.output.out).transpose();
    return out;
  }

  // Accumulates parameter gradients of `stack` into `grads`; returns dL/dinput.
  Matrix backward_stack(const detail::StackLayout& stack, const StackCache& cache,
                        const Matrix& d_out, bool batch_statistics,
                        std::vector<double>& grads) const {
    using GradMap = Eigen::Map<Matrix>;
    using GradVecMap = Eigen::Map<Vector>;
    const auto n = static_cast<double>(d_out.rows());

    auto accumulate_dense = [&](const detail::DenseSlot& s, const Matrix& input,
                                const Matrix& d) {
      GradMap(grads.data() + s.weight, s.out, s.in) += d.transpose() * input;
      GradVecMap(grads.data() + s.bias, s.out) += d.colwise().sum().transpose();
    };

    accumulate_dense(stack.output, cache.last_hidden, d_out);
    Matrix d_h = d_out * weight(stack.output);
    for (std::size_t l = stack.hidden.size(); l-- > 0;) {
      const auto& dense = stack.hidden[l];
      const auto& norm = stack.norms[l];
      const auto& lc = cache.layers[l];
      if (lc.mask.size() > 0) d_h.array() *= lc.mask.array();
      Matrix d_pre = d_h.array() * lc.pre_activation.unaryExpr([&](double v) {
        return detail::activate_grad(stack.activation, v, spec_.leaky_slope);
      }).array();

      GradVecMap(grads.data() + norm.gamma, norm.width) +=
          (d_pre.array() * lc.xhat.array()).colwise().sum().transpose().matrix();
      GradVecMap(grads.data() + norm.beta, norm.width) += d_pre.colwise().sum().transpose();

      const Matrix d_xhat = (d_pre.array().rowwise() *
                             vec(norm.gamma, norm.width).transpose().array()).matrix();
      Matrix d_a;
      if (batch_statistics) {
        const Eigen::RowVectorXd sum_d = d_xhat.colwise().sum();
        const Eigen::RowVectorXd sum_dx = (d_xhat.array() * lc.xhat.array()).colwise().sum();
        d_a = ((n * d_xhat.array()).rowwise() - sum_d.array() -
               lc.xhat.array().rowwise() * sum_dx.array()).matrix();
        d_a.array().rowwise() *= (lc.inv_std.transpose().array() / n);
      } else {
        d_a = (d_xhat.array().rowwise() * lc.inv_std.transpose().array()).matrix();
      }
      accumulate_dense(dense, lc.input, d_a);
      d_h = d_a * weight(dense);
    }
    return d_h;
  }

  NetworkSpec spec_;
  std::vector<double> params_;
  std::vector<double> buffers_;
  std::vector<ParameterBlock> blocks_;
  detail::StackLayout encoder_;
  detail::StackLayout decoder_;
  detail::StackLayout classifier_;
  std::pair<std::size_t, std::size_t> stack_ranges_[3];
};

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adaptive-moment optimizer over a flat parameter vector.
class Adam {
 public:
  Adam(std::size_t size, AdamConfig config = {})
      : config_(config), m_(size, 0.0), v_(size, 0.0) {}

  void step(std::span<double> params, std::span<const double> grads) {
    if (params.size() != m_.size() || grads.size() != m_.size())
      throw DimensionError("Adam::step: size mismatch");
    ++t_;
    const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * grads[i];
      v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * grads[i] * grads[i];
      const double m_hat = m_[i] / c1;
      const double v_hat = v_[i] / c2;
      params[i] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
  }

  [[nodiscard]] long steps() const { return t_; }
  [[nodiscard]] const AdamConfig& config() const { return config_; }

 private:
  AdamConfig config_;
  std::vector<double> m_;
  std::vector<double> v_;
  long t_ = 0;
};

}  // namespace photonvae
