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
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "photonvae/checkpoint.hpp"
#include "photonvae/dataset_io.hpp"
#include "photonvae/detector_model.hpp"
#include "photonvae/distributions.hpp"
#include "photonvae/errors.hpp"
#include "photonvae/sampling.hpp"
#include "photonvae/training.hpp"
#include "photonvae/vae.hpp"

namespace photonvae {

// Stream tags for seeds derived from a plan seed.
namespace streams {
inline constexpr std::uint64_t kTrainData = 0xda7a;
inline constexpr std::uint64_t kEvalData = 0xe7a1;
inline constexpr std::uint64_t kSplit = 0x5911;
inline constexpr std::uint64_t kInit = 0x1417;
inline constexpr std::uint64_t kTrain = 0x7a1;
}  // namespace streams

inline constexpr int kSpacsLabel = 0;
inline constexpr int kSpatsLabel = 1;

/// SPACS (label 0) against SPATS (label 1) at a common mean parameter.
inline DatasetMeta binary_meta(double mean_param, const DetectorConfig& detector,
                               int bin_size, int bins_per_class, std::uint64_t seed,
                               unsigned workers = 1) {
  DatasetMeta m;
  m.classes = {{SourceSpec::make(SourceKind::Spacs, mean_param), kSpacsLabel},
               {SourceSpec::make(SourceKind::Spats, mean_param), kSpatsLabel}};
  m.detector = detector;
  m.bin_size = bin_size;
  m.bins_per_class = bins_per_class;
  m.seed = seed;
  m.workers = workers;
  return m;
}

/// Observed mean averaged over the SPACS and SPATS classes.
inline double class_averaged_observed_mean(double mean_param, const DetectorConfig& cfg) {
  return 0.5 * (observed_mean(SourceSpec::make(SourceKind::Spacs, mean_param), cfg) +
                observed_mean(SourceSpec::make(SourceKind::Spats, mean_param), cfg));
}

/// Mean parameter whose class-averaged observed mean equals `target`, found by
/// bisection on [0, upper]. The curve is increasing, starting at eta for the
/// single added photon and saturating below n_detectors.
inline double invert_observed_mean(double target, const DetectorConfig& cfg,
                                   double upper = 40.0, double tolerance = 1e-9) {
  cfg.validate();
  const double lo_value = class_averaged_observed_mean(0.0, cfg);
  const double hi_value = class_averaged_observed_mean(upper, cfg);
  if (!(target >= lo_value && target <= hi_value))
    throw PhysicsError("observed mean " + std::to_string(target) +
                       " is unreachable at eta=" + std::to_string(cfg.efficiency) +
                       " (range " + std::to_string(lo_value) + " .. " +
                       std::to_string(hi_value) + ")");
  double lo = 0.0, hi = upper;
  while (hi - lo > tolerance) {
    const double mid = 0.5 * (lo + hi);
    (class_averaged_observed_mean(mid, cfg) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

inline NetworkSpec network_for(int input_dim, int num_classes) {
  NetworkSpec spec;
  spec.input_dim = input_dim;
  spec.num_classes = num_classes;
  return spec;
}

// ---------------------------------------------------------------------------
// Algorithm 1: lossless data, train at a base bin size, fine-tune smaller ones.

struct Algorithm1Plan {
  double mean_param = 1.3;
  DetectorConfig detector{6, 1.0};
  int bins_per_class = 2000;
  int base_bin_size = 100;
  std::vector<int> bin_sizes{50, 100, 200, 500};  // every one gets a report row
  TrainConfig initial{200};
  TrainConfig finetune{50};
  NetworkSpec network = network_for(5, 2);
  std::uint64_t seed = 0;
  unsigned workers = 1;

  void validate() const {
    if (network.input_dim != 5) throw DimensionError("algorithm 1 uses input_dim 5");
    if (!network.binary()) throw ConfigError("algorithm 1 uses a binary head");
    if (bin_sizes.empty()) throw ConfigError("algorithm 1 needs at least one bin size");
    if (base_bin_size < 1) throw ConfigError("base_bin_size must be >= 1");
    detector.validate();
    initial.validate();
    finetune.validate();
  }

  /// Bin sizes below the base get a fine-tuned model of their own.
  [[nodiscard]] std::vector<int> finetune_bins() const {
    std::vector<int> out;
    for (int b : bin_sizes)
      if (b < base_bin_size && std::find(out.begin(), out.end(), b) == out.end())
        out.push_back(b);
    return out;
  }
};

struct StageOutcome {
  int bin_size = 0;
  bool fine_tuned = false;
  VaeModel model;
  TrainResult training;
};

struct BinEvaluation {
  int bin_size = 0;
  bool fine_tuned = false;
  Evaluation evaluation;
  std::size_t test_rows = 0;
};

struct Algorithm1Result {
  std::vector<StageOutcome> stages;  // base first, then fine-tunes
  std::vector<BinEvaluation> evaluations;
  Dataset base_test;  // held-out rows at the base bin size
  ReportTable report;
  ReportTable confusion;

  [[nodiscard]] const VaeModel& base_model() const { return stages.front().model; }

  /// Model responsible for `bin_size`: its fine-tuned model if one exists,
  /// otherwise the base model.
  [[nodiscard]] const StageOutcome& stage_for(int bin_size) const {
    for (const auto& s : stages)
      if (s.fine_tuned && s.bin_size == bin_size) return s;
    return stages.front();
  }

  [[nodiscard]] double accuracy_at(int bin_size) const {
    for (const auto& e : evaluations)
      if (e.bin_size == bin_size) return e.evaluation.accuracy;
    throw ConfigError("no evaluation at bin size " + std::to_string(bin_size));
  }
};

namespace detail {

struct SplitFeatures {
  DatasetSplit split;
  LabeledData train, validation, test;
};

inline SplitFeatures split_features(Dataset ds, std::uint64_t split_seed, int input_dim) {
  SplitFeatures out;
  out.split = split_stratified(ds, split_seed);
  out.train = make_features(out.split.train, input_dim);
  out.validation = make_features(out.split.validation, input_dim);
  out.test = make_features(out.split.test, input_dim);
  return out;
}

inline SplitFeatures algorithm1_data(const Algorithm1Plan& plan, int bin_size) {
  const auto b = static_cast<std::uint64_t>(bin_size);
  return split_features(
      generate_dataset(binary_meta(plan.mean_param, plan.detector, bin_size,
                                   plan.bins_per_class,
                                   derive_seed(plan.seed, streams::kTrainData, b),
                                   plan.workers)),
      derive_seed(plan.seed, streams::kSplit, b), plan.network.input_dim);
}

}  // namespace detail

inline Algorithm1Result run_algorithm1(const Algorithm1Plan& plan) {
  plan.validate();
  Algorithm1Result result;

  auto base_data = detail::algorithm1_data(plan, plan.base_bin_size);
  VaeModel base(plan.network, derive_seed(plan.seed, streams::kInit, 0));
  auto base_history = train_model(base, base_data.train, base_data.validation,
                                  plan.initial, derive_seed(plan.seed, streams::kTrain, 0));
  result.base_test = base_data.split.test;
  result.stages.push_back({plan.base_bin_size, false, base, std::move(base_history)});

  std::uint64_t stage_index = 1;
  for (int bin : plan.finetune_bins()) {
    const auto data = detail::algorithm1_data(plan, bin);
    VaeModel tuned = result.stages.front().model;
    auto history = train_model(tuned, data.train, data.validation, plan.finetune,
                               derive_seed(plan.seed, streams::kTrain, stage_index++));
    result.stages.push_back({bin, true, std::move(tuned), std::move(history)});
  }

  result.report.columns = {"bin_size", "fine_tuned", "accuracy", "test_rows"};
  result.confusion = confusion_table({"bin_size"});
  for (int bin : plan.bin_sizes) {
    const auto data = bin == plan.base_bin_size ? base_data
                                                : detail::algorithm1_data(plan, bin);
    const auto& stage = result.stage_for(bin);
    BinEvaluation ev{bin, stage.fine_tuned, evaluate(stage.model, data.test),
                     data.test.size()};
    result.report.add_row({static_cast<double>(bin), ev.fine_tuned ? 1.0 : 0.0,
                           ev.evaluation.accuracy, static_cast<double>(ev.test_rows)});
    append_confusion(result.confusion, {static_cast<double>(bin)}, ev.evaluation.confusion);
    result.evaluations.push_back(std::move(ev));
  }
  return result;
}

/// Held-out accuracy at `small_bin` of a fine-tuned model against a model
/// trained from scratch on the small-bin data for the same total epochs.
struct TransferComparison {
  double fine_tuned_accuracy = 0.0;
  double scratch_accuracy = 0.0;
};

inline TransferComparison compare_transfer(const Algorithm1Plan& plan, int small_bin) {
  auto with_small = plan;
  with_small.bin_sizes = {small_bin};
  const auto tuned = run_algorithm1(with_small);

  const auto data = detail::algorithm1_data(plan, small_bin);
  VaeModel scratch(plan.network, derive_seed(plan.seed, streams::kInit, 0));
  auto cfg = plan.initial;
  cfg.epochs = plan.initial.epochs + plan.finetune.epochs;
  train_model(scratch, data.train, data.validation, cfg,
              derive_seed(plan.seed, streams::kTrain, 0));
  return {tuned.accuracy_at(small_bin), evaluate(scratch, data.test).accuracy};
}

// ---------------------------------------------------------------------------
// Algorithm 2: lossy data with the observed mean as an extra input.

struct Algorithm2Plan {
  double nbar_the = 1.9;
  int n_detectors = 4;
  std::vector<double> efficiencies{0.9, 0.8, 0.6};
  std::vector<double> train_nbar_obs{1.0, 1.3, 1.6, 1.9, 2.2};  // inverted pairs
  int bin_size = 200;
  int bins_per_class = 2000;
  int extra_bins_per_class = 2000;  // per inverted pair
  TrainConfig train{200};
  NetworkSpec network = network_for(6, 2);

  std::vector<double> sweep_efficiencies{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  std::vector<double> sweep_nbar_obs{0.8, 1.0, 1.3, 1.6, 1.9, 2.2};
  std::vector<int> sweep_bin_sizes{50, 100, 200, 500};
  int eval_bins_per_class = 500;

  std::uint64_t seed = 0;
  unsigned workers = 1;

  void validate() const {
    if (network.input_dim != 6) throw DimensionError("algorithm 2 uses input_dim 6");
    if (!network.binary()) throw ConfigError("algorithm 2 uses a binary head");
    if (efficiencies.empty()) throw ConfigError("algorithm 2 needs efficiencies");
    for (double eta : efficiencies) DetectorConfig{n_detectors, eta}.validate();
    if (eval_bins_per_class < 1) throw ConfigError("eval_bins_per_class must be >= 1");
    train.validate();
  }
};

struct EtaEvaluation {
  double efficiency = 0.0;
  double nbar_the = 0.0;
  double nbar_obs = 0.0;  // class-averaged, from the detector model
  int bin_size = 0;
  Evaluation evaluation;
};

struct Algorithm2Result {
  VaeModel model;
  TrainResult training;
  std::vector<EtaEvaluation> per_eta;     // held-out split of each training pair
  std::vector<EtaEvaluation> eta_sweep;   // fixed n̄_the, varying eta
  std::vector<EtaEvaluation> nbar_sweep;  // per training eta, varying n̄_obs
  std::vector<EtaEvaluation> bin_sweep;   // per training eta, varying bin size
  ReportTable report;
  ReportTable confusion;
};

namespace detail {

inline constexpr double kSweepPerEta = 0.0;
inline constexpr double kSweepEta = 1.0;
inline constexpr double kSweepNbarObs = 2.0;
inline constexpr double kSweepBinSize = 3.0;

inline std::uint64_t cell_key(double a, double b, int c) {
  return mix64(static_cast<std::uint64_t>(std::llround(a * 1e6)) ^
               mix64(static_cast<std::uint64_t>(std::llround(b * 1e6)) ^
                     static_cast<std::uint64_t>(c)));
}

}  // namespace detail

inline Algorithm2Result run_algorithm2(const Algorithm2Plan& plan) {
  plan.validate();
  struct Pair {
    double nbar_the, eta;
    int bins;
  };
  std::vector<Pair> pairs;
  for (double eta : plan.efficiencies) pairs.push_back({plan.nbar_the, eta, plan.bins_per_class});
  for (double eta : plan.efficiencies) {
    const DetectorConfig cfg{plan.n_detectors, eta};
    for (double target : plan.train_nbar_obs)
      if (target >= class_averaged_observed_mean(0.0, cfg))
        pairs.push_back({invert_observed_mean(target, cfg), eta, plan.extra_bins_per_class});
  }

  LabeledData train, validation;
  std::vector<LabeledData> pair_tests;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto& pr = pairs[p];
    const auto key = detail::cell_key(pr.nbar_the, pr.eta, plan.bin_size);
    auto data = detail::split_features(
        generate_dataset(binary_meta(pr.nbar_the, {plan.n_detectors, pr.eta}, plan.bin_size,
                                     pr.bins, derive_seed(plan.seed, streams::kTrainData, key),
                                     plan.workers)),
        derive_seed(plan.seed, streams::kSplit, key), plan.network.input_dim);
    train = concat(train, data.train);
    validation = concat(validation, data.validation);
    pair_tests.push_back(std::move(data.test));
  }

  Algorithm2Result result{VaeModel(plan.network, derive_seed(plan.seed, streams::kInit, 0)),
                          {}, {}, {}, {}, {}, {}, {}};
  result.training = train_model(result.model, train, validation, plan.train,
                                derive_seed(plan.seed, streams::kTrain, 0));

  auto eval_cell = [&](double nbar_the, double eta, int bin) {
    const DetectorConfig cfg{plan.n_detectors, eta};
    const auto key = detail::cell_key(nbar_the, eta, bin);
    const auto ds = generate_dataset(
        binary_meta(nbar_the, cfg, bin, plan.eval_bins_per_class,
                    derive_seed(plan.seed, streams::kEvalData, key), plan.workers));
    return EtaEvaluation{eta, nbar_the, class_averaged_observed_mean(nbar_the, cfg), bin,
                         evaluate(result.model, make_features(ds, plan.network.input_dim))};
  };

  for (std::size_t i = 0; i < plan.efficiencies.size(); ++i) {
    const double eta = plan.efficiencies[i];
    const DetectorConfig cfg{plan.n_detectors, eta};
    result.per_eta.push_back({eta, plan.nbar_the,
                              class_averaged_observed_mean(plan.nbar_the, cfg), plan.bin_size,
                              evaluate(result.model, pair_tests[i])});
  }
  for (double eta : plan.sweep_efficiencies)
    result.eta_sweep.push_back(eval_cell(plan.nbar_the, eta, plan.bin_size));
  for (double eta : plan.efficiencies) {
    const DetectorConfig cfg{plan.n_detectors, eta};
    for (double target : plan.sweep_nbar_obs) {
      if (target < class_averaged_observed_mean(0.0, cfg)) continue;  // below one photon
      result.nbar_sweep.push_back(
          eval_cell(invert_observed_mean(target, cfg), eta, plan.bin_size));
    }
    for (int bin : plan.sweep_bin_sizes)
      result.bin_sweep.push_back(eval_cell(plan.nbar_the, eta, bin));
  }

  result.report.columns = {"sweep", "efficiency", "nbar_the", "nbar_obs",
                           "bin_size", "accuracy", "test_rows"};
  result.confusion = confusion_table({"sweep", "efficiency", "nbar_the", "bin_size"});
  auto emit = [&](double sweep, const std::vector<EtaEvaluation>& cells) {
    for (const auto& c : cells) {
      result.report.add_row({sweep, c.efficiency, c.nbar_the, c.nbar_obs,
                             static_cast<double>(c.bin_size), c.evaluation.accuracy,
                             static_cast<double>(c.evaluation.confusion.total())});
      append_confusion(result.confusion,
                       {sweep, c.efficiency, c.nbar_the, static_cast<double>(c.bin_size)},
                       c.evaluation.confusion);
    }
  };
  emit(detail::kSweepPerEta, result.per_eta);
  emit(detail::kSweepEta, result.eta_sweep);
  emit(detail::kSweepNbarObs, result.nbar_sweep);
  emit(detail::kSweepBinSize, result.bin_sweep);
  return result;
}

// ---------------------------------------------------------------------------
// Four-class mixed-state grid.

inline constexpr int kCoherentLabel = 0;
inline constexpr int kThermalLabel = 1;
inline constexpr int kMixedCoherentLabel = 2;
inline constexpr int kMixedThermalLabel = 3;

struct MixedGridPlan {
  double mean_param = 1.3;
  DetectorConfig detector{4, 1.0};
  int bin_size = 200;
  int bins_per_class = 2000;
  std::vector<double> ratios{0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
  int eval_bins_per_class = 500;
  TrainConfig train{200};
  NetworkSpec network = network_for(5, 4);
  std::uint64_t seed = 0;
  unsigned workers = 1;

  void validate() const {
    if (network.input_dim != 5) throw DimensionError("mixed grid uses input_dim 5");
    if (network.num_classes != 4) throw ConfigError("mixed grid needs a 4-class head");
    if (ratios.empty()) throw ConfigError("mixed grid needs ratios");
    for (double r : ratios)
      if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("mix ratios must lie in [0, 1]");
    if (training_ratios().empty())
      throw ConfigError("mixed grid needs at least one ratio below 1 for training");
    detector.validate();
    train.validate();
  }

  /// Ratios of 1 make the mixed classes identical to the pure ones, so they
  /// are evaluated but never trained on.
  [[nodiscard]] std::vector<double> training_ratios() const {
    std::vector<double> out;
    for (double r : ratios)
      if (r < 1.0) out.push_back(r);
    return out;
  }
};

struct GridCell {
  double r1 = 0.0;  // coherent / SPACS mixture
  double r2 = 0.0;  // thermal / SPATS mixture
  Evaluation evaluation;
};

struct MixedGridResult {
  VaeModel model;
  TrainResult training;
  std::vector<GridCell> cells;
  ReportTable report;
  ReportTable confusion;

  [[nodiscard]] const GridCell& cell(double r1, double r2) const {
    for (const auto& c : cells)
      if (std::abs(c.r1 - r1) < 1e-12 && std::abs(c.r2 - r2) < 1e-12) return c;
    throw ConfigError("no grid cell at (" + std::to_string(r1) + ", " +
                      std::to_string(r2) + ")");
  }
};

inline MixedGridResult run_mixed_grid(const MixedGridPlan& plan) {
  plan.validate();
  const double m = plan.mean_param;
  const auto ratios = plan.training_ratios();
  const int per_ratio =
      std::max(1, plan.bins_per_class / static_cast<int>(ratios.size()));

  auto meta_for = [&](std::vector<ClassSource> classes, int bins, std::uint64_t seed) {
    DatasetMeta meta;
    meta.classes = std::move(classes);
    meta.detector = plan.detector;
    meta.bin_size = plan.bin_size;
    meta.bins_per_class = bins;
    meta.seed = seed;
    meta.workers = plan.workers;
    return meta;
  };

  Dataset ds = generate_dataset(meta_for(
      {{SourceSpec::make(SourceKind::Coherent, m), kCoherentLabel},
       {SourceSpec::make(SourceKind::Thermal, m), kThermalLabel}},
      plan.bins_per_class, derive_seed(plan.seed, streams::kTrainData, 0)));
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    ds.append(generate_dataset(meta_for(
        {{SourceSpec::make(SourceKind::MixedCoherentSpacs, m, ratios[i]), kMixedCoherentLabel},
         {SourceSpec::make(SourceKind::MixedThermalSpats, m, ratios[i]), kMixedThermalLabel}},
        per_ratio, derive_seed(plan.seed, streams::kTrainData, i + 1))));
  }
  const auto data = detail::split_features(std::move(ds), derive_seed(plan.seed, streams::kSplit, 0),
                                           plan.network.input_dim);

  MixedGridResult result{VaeModel(plan.network, derive_seed(plan.seed, streams::kInit, 0)),
                         {}, {}, {}, {}};
  result.training = train_model(result.model, data.train, data.validation, plan.train,
                                derive_seed(plan.seed, streams::kTrain, 0));

  const auto pure = make_features(
      generate_dataset(meta_for({{SourceSpec::make(SourceKind::Coherent, m), kCoherentLabel},
                                 {SourceSpec::make(SourceKind::Thermal, m), kThermalLabel}},
                                plan.eval_bins_per_class,
                                derive_seed(plan.seed, streams::kEvalData, 0))),
      plan.network.input_dim);
  const auto pure_eval = evaluate(result.model, pure);

  auto eval_source = [&](SourceKind kind, double r, int label) {
    const auto seed = derive_seed(plan.seed, streams::kEvalData,
                                  detail::cell_key(r, 0.0, label));
    const auto test = generate_dataset(meta_for(
        {{SourceSpec::make(kind, m, r), label}}, plan.eval_bins_per_class, seed));
    return evaluate(result.model, make_features(test, plan.network.input_dim)).confusion;
  };
  std::vector<ConfusionMatrix> mc_eval, mt_eval;
  for (double r : plan.ratios) {
    mc_eval.push_back(eval_source(SourceKind::MixedCoherentSpacs, r, kMixedCoherentLabel));
    mt_eval.push_back(eval_source(SourceKind::MixedThermalSpats, r, kMixedThermalLabel));
  }

  result.report.columns = {"r1", "r2", "accuracy", "test_rows"};
  result.confusion = confusion_table({"r1", "r2"});
  for (std::size_t i = 0; i < plan.ratios.size(); ++i) {
    for (std::size_t j = 0; j < plan.ratios.size(); ++j) {
      ConfusionMatrix cm = pure_eval.confusion;
      cm += mc_eval[i];
      cm += mt_eval[j];
      GridCell cell{plan.ratios[i], plan.ratios[j], {cm.accuracy(), cm}};
      result.report.add_row({cell.r1, cell.r2, cell.evaluation.accuracy,
                             static_cast<double>(cm.total())});
      append_confusion(result.confusion, {cell.r1, cell.r2}, cm);
      result.cells.push_back(std::move(cell));
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// JSON configuration.

inline void to_json(nlohmann::json& j, const Algorithm1Plan& p) {
  j = {{"mean_param", p.mean_param},        {"detector", p.detector},
       {"bins_per_class", p.bins_per_class}, {"base_bin_size", p.base_bin_size},
       {"bin_sizes", p.bin_sizes},           {"initial", p.initial},
       {"finetune", p.finetune},             {"network", p.network},
       {"seed", p.seed}};
}

inline void from_json(const nlohmann::json& j, Algorithm1Plan& p) {
  const Algorithm1Plan d;
  p.mean_param = j.value("mean_param", d.mean_param);
  p.detector = j.value("detector", d.detector);
  p.bins_per_class = j.value("bins_per_class", d.bins_per_class);
  p.base_bin_size = j.value("base_bin_size", d.base_bin_size);
  p.bin_sizes = j.value("bin_sizes", d.bin_sizes);
  p.initial = j.value("initial", d.initial);
  p.finetune = j.value("finetune", d.finetune);
  p.network = j.value("network", d.network);
  p.seed = j.value("seed", d.seed);
  p.workers = j.value("workers", d.workers);
}

inline void to_json(nlohmann::json& j, const Algorithm2Plan& p) {
  j = {{"nbar_the", p.nbar_the},
       {"n_detectors", p.n_detectors},
       {"efficiencies", p.efficiencies},
       {"train_nbar_obs", p.train_nbar_obs},
       {"bin_size", p.bin_size},
       {"bins_per_class", p.bins_per_class},
       {"extra_bins_per_class", p.extra_bins_per_class},
       {"train", p.train},
       {"network", p.network},
       {"sweep_efficiencies", p.sweep_efficiencies},
       {"sweep_nbar_obs", p.sweep_nbar_obs},
       {"sweep_bin_sizes", p.sweep_bin_sizes},
       {"eval_bins_per_class", p.eval_bins_per_class},
       {"seed", p.seed}};
}

inline void from_json(const nlohmann::json& j, Algorithm2Plan& p) {
  const Algorithm2Plan d;
  p.nbar_the = j.value("nbar_the", d.nbar_the);
  p.n_detectors = j.value("n_detectors", d.n_detectors);
  p.efficiencies = j.value("efficiencies", d.efficiencies);
  p.train_nbar_obs = j.value("train_nbar_obs", d.train_nbar_obs);
  p.bin_size = j.value("bin_size", d.bin_size);
  p.bins_per_class = j.value("bins_per_class", d.bins_per_class);
  p.extra_bins_per_class = j.value("extra_bins_per_class", d.extra_bins_per_class);
  p.train = j.value("train", d.train);
  p.network = j.value("network", d.network);
  p.sweep_efficiencies = j.value("sweep_efficiencies", d.sweep_efficiencies);
  p.sweep_nbar_obs = j.value("sweep_nbar_obs", d.sweep_nbar_obs);
  p.sweep_bin_sizes = j.value("sweep_bin_sizes", d.sweep_bin_sizes);
  p.eval_bins_per_class = j.value("eval_bins_per_class", d.eval_bins_per_class);
  p.seed = j.value("seed", d.seed);
  p.workers = j.value("workers", d.workers);
}

inline void to_json(nlohmann::json& j, const MixedGridPlan& p) {
  j = {{"mean_param", p.mean_param},
       {"detector", p.detector},
       {"bin_size", p.bin_size},
       {"bins_per_class", p.bins_per_class},
       {"ratios", p.ratios},
       {"eval_bins_per_class", p.eval_bins_per_class},
       {"train", p.train},
       {"network", p.network},
       {"seed", p.seed}};
}

inline void from_json(const nlohmann::json& j, MixedGridPlan& p) {
  const MixedGridPlan d;
  p.mean_param = j.value("mean_param", d.mean_param);
  p.detector = j.value("detector", d.detector);
  p.bin_size = j.value("bin_size", d.bin_size);
  p.bins_per_class = j.value("bins_per_class", d.bins_per_class);
  p.ratios = j.value("ratios", d.ratios);
  p.eval_bins_per_class = j.value("eval_bins_per_class", d.eval_bins_per_class);
  p.train = j.value("train", d.train);
  p.network = j.value("network", d.network);
  p.seed = j.value("seed", d.seed);
  p.workers = j.value("workers", d.workers);
}

}  // namespace photonvae
