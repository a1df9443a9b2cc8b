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
#include <limits>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "photonvae/dataset_io.hpp"
#include "photonvae/errors.hpp"
#include "photonvae/sampling.hpp"
#include "photonvae/vae.hpp"

namespace photonvae {

/// Network inputs and labels extracted from a dataset.
struct LabeledData {
  Matrix x;
  std::vector<int> labels;

  [[nodiscard]] std::size_t size() const { return labels.size(); }
  [[nodiscard]] bool empty() const { return labels.empty(); }
};

/// Width 5 feeds P(0)..P(4); width 6 appends the observed mean click number.
inline LabeledData make_features(const Dataset& ds, int input_dim) {
  if (input_dim != 5 && input_dim != 6)
    throw DimensionError("input_dim must be 5 (P0..P4) or 6 (P0..P4, nbar_obs), got " +
                         std::to_string(input_dim));
  LabeledData out;
  out.x.resize(static_cast<Eigen::Index>(ds.size()), input_dim);
  out.labels.reserve(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& obs = ds.rows[i].obs;
    const auto row = static_cast<Eigen::Index>(i);
    for (int j = 0; j < 5; ++j) out.x(row, j) = obs.p_obs[static_cast<std::size_t>(j)];
    if (input_dim == 6) out.x(row, 5) = obs.n_bar_obs;
    out.labels.push_back(obs.label);
  }
  return out;
}

inline LabeledData concat(const LabeledData& a, const LabeledData& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  if (a.x.cols() != b.x.cols()) throw DimensionError("concat: feature widths differ");
  LabeledData out;
  out.x.resize(a.x.rows() + b.x.rows(), a.x.cols());
  out.x << a.x, b.x;
  out.labels = a.labels;
  out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
  return out;
}

struct TrainConfig {
  int epochs = 200;
  int batch_size = 512;
  int patience = 20;  // epochs without validation improvement; <= 0 disables
  AdamConfig adam;
  LossWeights weights;

  void validate() const {
    if (epochs < 0) throw ConfigError("epochs must be >= 0");
    if (batch_size < 2) throw ConfigError("batch_size must be >= 2");
    if (!(adam.learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  }
};

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"epochs", c.epochs},
       {"batch_size", c.batch_size},
       {"patience", c.patience},
       {"learning_rate", c.adam.learning_rate},
       {"beta1", c.adam.beta1},
       {"beta2", c.adam.beta2},
       {"adam_epsilon", c.adam.epsilon},
       {"weight_recon", c.weights.recon},
       {"weight_kl", c.weights.kl},
       {"weight_classification", c.weights.classification}};
}

inline void from_json(const nlohmann::json& j, TrainConfig& c) {
  const TrainConfig d;
  c.epochs = j.value("epochs", d.epochs);
  c.batch_size = j.value("batch_size", d.batch_size);
  c.patience = j.value("patience", d.patience);
  c.adam.learning_rate = j.value("learning_rate", d.adam.learning_rate);
  c.adam.beta1 = j.value("beta1", d.adam.beta1);
  c.adam.beta2 = j.value("beta2", d.adam.beta2);
  c.adam.epsilon = j.value("adam_epsilon", d.adam.epsilon);
  c.weights.recon = j.value("weight_recon", d.weights.recon);
  c.weights.kl = j.value("weight_kl", d.weights.kl);
  c.weights.classification = j.value("weight_classification", d.weights.classification);
}

struct TrainResult {
  int epochs_run = 0;
  int best_epoch = 0;  // 1-based; 0 when no epoch ran
  double best_validation_loss = std::numeric_limits<double>::infinity();
  std::vector<double> train_loss;       // mean over batches, per epoch
  std::vector<double> validation_loss;  // inference mode, per epoch

  [[nodiscard]] double final_train_loss() const {
    return train_loss.empty() ? std::numeric_limits<double>::quiet_NaN()
                              : train_loss.back();
  }
};

inline void to_json(nlohmann::json& j, const TrainResult& r) {
  j = {{"epochs_run", r.epochs_run},
       {"best_epoch", r.best_epoch},
       {"final_train_loss", r.final_train_loss()}};
  if (std::isfinite(r.best_validation_loss))
    j["best_validation_loss"] = r.best_validation_loss;
}

/// Total loss in inference mode (running statistics, z = mu, no dropout).
inline double evaluation_loss(const VaeModel& model, const LabeledData& data,
                              const LossWeights& weights = {}) {
  const auto fp = model.infer(data.x);
  return model.loss(fp, data.x, data.labels, weights).total;
}

namespace detail {

inline constexpr std::uint64_t kEpochStream = 0x7a11;

inline void gather_rows(const LabeledData& data, std::span<const std::size_t> idx,
                        Matrix& x, std::vector<int>& labels) {
  x.resize(static_cast<Eigen::Index>(idx.size()), data.x.cols());
  labels.resize(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    x.row(static_cast<Eigen::Index>(i)) = data.x.row(static_cast<Eigen::Index>(idx[i]));
    labels[i] = data.labels[idx[i]];
  }
}

}  // namespace detail

/// Minibatch Adam training. Each epoch shuffles with its own stream of `seed`;
/// a trailing batch smaller than 2 rows is skipped because batch normalization
/// needs at least two. With a nonempty validation set the parameters of the
/// best validation epoch are restored at the end.
inline TrainResult train_model(VaeModel& model, const LabeledData& train,
                               const LabeledData& validation, const TrainConfig& cfg,
                               std::uint64_t seed) {
  cfg.validate();
  if (train.x.cols() != model.spec().input_dim)
    throw DimensionError("training data has " + std::to_string(train.x.cols()) +
                         " features, network expects " +
                         std::to_string(model.spec().input_dim));
  if (!validation.empty() && validation.x.cols() != train.x.cols())
    throw DimensionError("validation and training feature widths differ");

  TrainResult result;
  Adam adam(model.parameters().size(), cfg.adam);
  const bool watch = !validation.empty();
  std::vector<double> best_params(model.parameters().begin(), model.parameters().end());
  std::vector<double> best_buffers(model.buffers().begin(), model.buffers().end());
  int since_best = 0;

  std::vector<std::size_t> order(train.size());
  Matrix xb;
  std::vector<int> yb;
  const auto batch = static_cast<std::size_t>(cfg.batch_size);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng rng = make_rng(seed, detail::kEpochStream, static_cast<std::uint64_t>(epoch));
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);

    double loss_sum = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t stop = std::min(order.size(), start + batch);
      if (stop - start < 2) break;
      detail::gather_rows(train, std::span(order).subspan(start, stop - start), xb, yb);
      const auto fp = model.forward(xb, ForwardOptions::training(), rng);
      loss_sum += model.loss(fp, xb, yb, cfg.weights).total;
      const auto grads = model.backward(fp, xb, yb, cfg.weights);
      adam.step(model.parameters(), grads);
      model.update_running_statistics(fp);
      ++batches;
    }
    result.train_loss.push_back(batches > 0 ? loss_sum / batches : 0.0);
    result.epochs_run = epoch;

    if (!watch) {
      result.best_epoch = epoch;
      continue;
    }
    const double val = evaluation_loss(model, validation, cfg.weights);
    if (!std::isfinite(val)) throw NumericalError("validation loss is not finite");
    result.validation_loss.push_back(val);
    if (val < result.best_validation_loss) {
      result.best_validation_loss = val;
      result.best_epoch = epoch;
      std::copy(model.parameters().begin(), model.parameters().end(), best_params.begin());
      std::copy(model.buffers().begin(), model.buffers().end(), best_buffers.begin());
      since_best = 0;
    } else if (cfg.patience > 0 && ++since_best >= cfg.patience) {
      break;
    }
  }

  if (watch && result.best_epoch > 0) {
    std::copy(best_params.begin(), best_params.end(), model.parameters().begin());
    std::copy(best_buffers.begin(), best_buffers.end(), model.buffers().begin());
  }
  return result;
}

/// Counts indexed by (true, predicted) class.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int classes = 2)
      : classes_(classes), counts_(static_cast<std::size_t>(classes * classes), 0) {
    if (classes < 1) throw ConfigError("confusion matrix needs at least one class");
  }

  void add(int truth, int predicted) {
    if (truth < 0 || truth >= classes_ || predicted < 0 || predicted >= classes_)
      throw ConfigError("class index outside confusion matrix");
    ++counts_[index(truth, predicted)];
  }

  [[nodiscard]] int classes() const { return classes_; }
  [[nodiscard]] std::size_t operator()(int truth, int predicted) const {
    return counts_[index(truth, predicted)];
  }
  [[nodiscard]] std::size_t row_total(int truth) const {
    std::size_t sum = 0;
    for (int p = 0; p < classes_; ++p) sum += (*this)(truth, p);
    return sum;
  }
  [[nodiscard]] std::size_t total() const {
    return std::accumulate(counts_.begin(), counts_.end(), std::size_t{0});
  }
  [[nodiscard]] std::size_t trace() const {
    std::size_t sum = 0;
    for (int c = 0; c < classes_; ++c) sum += (*this)(c, c);
    return sum;
  }
  [[nodiscard]] double accuracy() const {
    const auto n = total();
    return n == 0 ? 0.0 : static_cast<double>(trace()) / static_cast<double>(n);
  }

  ConfusionMatrix& operator+=(const ConfusionMatrix& other) {
    if (other.classes_ != classes_) throw ConfigError("confusion matrix sizes differ");
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
    return *this;
  }

 private:
  [[nodiscard]] std::size_t index(int truth, int predicted) const {
    return static_cast<std::size_t>(truth * classes_ + predicted);
  }

  int classes_;
  std::vector<std::size_t> counts_;
};

struct Evaluation {
  double accuracy = 0.0;
  ConfusionMatrix confusion;
};

/// Inference-mode accuracy over labeled rows; unlabeled rows are ignored.
inline Evaluation evaluate(const VaeModel& model, const LabeledData& data) {
  const int classes = model.spec().binary() ? 2 : model.spec().num_classes;
  Evaluation ev{0.0, ConfusionMatrix(classes)};
  if (data.empty()) return ev;
  const auto predicted = model.predict(data.x);
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.labels[i] == kUnlabeled) continue;
    ev.confusion.add(data.labels[i], predicted[i]);
  }
  ev.accuracy = ev.confusion.accuracy();
  return ev;
}

/// Latent means of every row together with its label.
struct LatentTable {
  Matrix mu;
  std::vector<int> labels;
};

inline LatentTable export_latent(const VaeModel& model, const LabeledData& data) {
  LatentTable out;
  if (data.empty()) {
    out.mu.resize(0, model.spec().latent_dim);
    return out;
  }
  out.mu = model.infer(data.x).mu;
  out.labels = data.labels;
  return out;
}

inline LatentTable export_latent(const VaeModel& model, const Dataset& ds) {
  return export_latent(model, make_features(ds, model.spec().input_dim));
}

inline void write_latent_csv(std::ostream& out, const LatentTable& table) {
  for (Eigen::Index k = 0; k < table.mu.cols(); ++k) out << 'z' << (k + 1) << ',';
  out << "label\n";
  for (Eigen::Index i = 0; i < table.mu.rows(); ++i) {
    for (Eigen::Index k = 0; k < table.mu.cols(); ++k)
      out << format_real(table.mu(i, k)) << ',';
    out << table.labels[static_cast<std::size_t>(i)] << '\n';
  }
}

/// Mean silhouette coefficient with Euclidean distance. Points in singleton
/// clusters score 0; fewer than two clusters gives 0.
inline double silhouette(const Matrix& points, std::span<const int> labels) {
  const auto n = static_cast<std::size_t>(points.rows());
  if (labels.size() != n) throw DimensionError("silhouette: label count mismatch");
  std::vector<int> ids(labels.begin(), labels.end());
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  if (ids.size() < 2) return 0.0;

  std::vector<std::size_t> cluster(n), sizes(ids.size(), 0);
  for (std::size_t i = 0; i < n; ++i) {
    cluster[i] = static_cast<std::size_t>(
        std::lower_bound(ids.begin(), ids.end(), labels[i]) - ids.begin());
    ++sizes[cluster[i]];
  }

  double total = 0.0;
  std::vector<double> sums(ids.size());
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      sums[cluster[j]] += (points.row(static_cast<Eigen::Index>(i)) -
                           points.row(static_cast<Eigen::Index>(j)))
                              .norm();
    }
    const std::size_t own = cluster[i];
    if (sizes[own] < 2) continue;
    const double a = sums[own] / static_cast<double>(sizes[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < ids.size(); ++c)
      if (c != own) b = std::min(b, sums[c] / static_cast<double>(sizes[c]));
    const double denom = std::max(a, b);
    if (denom > 0.0) total += (b - a) / denom;
  }
  return total / static_cast<double>(n);
}

/// Numeric table written as CSV with a header row.
struct ReportTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void add_row(std::vector<double> row) {
    if (row.size() != columns.size())
      throw ConfigError("report row has " + std::to_string(row.size()) +
                        " values for " + std::to_string(columns.size()) + " columns");
    rows.push_back(std::move(row));
  }

  [[nodiscard]] std::size_t column(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw ConfigError("report has no column " + name);
    return static_cast<std::size_t>(it - columns.begin());
  }

  void write_csv(std::ostream& out) const {
    for (std::size_t c = 0; c < columns.size(); ++c)
      out << (c ? "," : "") << columns[c];
    out << '\n';
    for (const auto& row : rows) {
      for (std::size_t c = 0; c < row.size(); ++c)
        out << (c ? "," : "") << format_real(row[c]);
      out << '\n';
    }
  }
};

/// Appends one (coordinates..., true, predicted, count) row per matrix entry.
inline void append_confusion(ReportTable& table, const std::vector<double>& coords,
                             const ConfusionMatrix& cm) {
  for (int t = 0; t < cm.classes(); ++t) {
    for (int p = 0; p < cm.classes(); ++p) {
      auto row = coords;
      row.push_back(t);
      row.push_back(p);
      row.push_back(static_cast<double>(cm(t, p)));
      table.add_row(std::move(row));
    }
  }
}

inline ReportTable confusion_table(std::vector<std::string> coordinate_columns) {
  ReportTable t;
  t.columns = std::move(coordinate_columns);
  t.columns.insert(t.columns.end(), {"true", "predicted", "count"});
  return t;
}

}  // namespace photonvae
