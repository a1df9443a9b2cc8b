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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "photonvae/training.hpp"
#include "photonvae/workflows.hpp"

namespace {

using namespace photonvae;

// Silhouette by its definition, written independently of the library.
double silhouette_oracle(const std::vector<std::vector<double>>& pts,
                         const std::vector<int>& labels) {
  const std::size_t n = pts.size();
  auto dist = [&](std::size_t i, std::size_t j) {
    double s = 0.0;
    for (std::size_t k = 0; k < pts[i].size(); ++k)
      s += (pts[i][k] - pts[j][k]) * (pts[i][k] - pts[j][k]);
    return std::sqrt(s);
  };
  std::vector<int> ids(labels);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double a = 0.0;
    int own = 0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i && labels[j] == labels[i]) {
        a += dist(i, j);
        ++own;
      }
    if (own == 0) continue;
    a /= own;
    double b = 1e300;
    for (int c : ids) {
      if (c == labels[i]) continue;
      double sum = 0.0;
      int cnt = 0;
      for (std::size_t j = 0; j < n; ++j)
        if (labels[j] == c) {
          sum += dist(i, j);
          ++cnt;
        }
      b = std::min(b, sum / cnt);
    }
    total += (b - a) / std::max(a, b);
  }
  return total / static_cast<double>(n);
}

Dataset small_binary(double mean, int n_detectors, double eta, int bin, int bins,
                     std::uint64_t seed) {
  return generate_dataset(binary_meta(mean, {n_detectors, eta}, bin, bins, seed));
}

Algorithm1Plan tiny_algorithm1(std::uint64_t seed) {
  Algorithm1Plan plan;
  plan.bins_per_class = 300;
  plan.bin_sizes = {50, 100, 200};
  plan.initial.epochs = 30;
  plan.finetune.epochs = 10;
  plan.seed = seed;
  return plan;
}

TEST(Features, WidthFiveIsFirstFiveProbabilities) {
  const auto ds = small_binary(1.3, 4, 0.8, 20, 3, 1);
  const auto f = make_features(ds, 5);
  ASSERT_EQ(f.x.rows(), 6);
  ASSERT_EQ(f.x.cols(), 5);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (int j = 0; j < 5; ++j)
      EXPECT_EQ(f.x(static_cast<Eigen::Index>(i), j), ds.rows[i].obs.p_obs[static_cast<std::size_t>(j)]);
    EXPECT_EQ(f.labels[i], ds.rows[i].obs.label);
  }
}

TEST(Features, WidthSixAppendsObservedMean) {
  const auto ds = small_binary(1.3, 4, 0.8, 20, 3, 2);
  const auto f = make_features(ds, 6);
  for (std::size_t i = 0; i < ds.size(); ++i)
    EXPECT_EQ(f.x(static_cast<Eigen::Index>(i), 5), ds.rows[i].obs.n_bar_obs);
}

TEST(Features, OtherWidthsAreRejected) {
  const auto ds = small_binary(1.3, 4, 0.8, 20, 1, 3);
  EXPECT_THROW(make_features(ds, 7), DimensionError);
  EXPECT_THROW(make_features(ds, 4), DimensionError);
}

TEST(Confusion, AccuracyIsTraceOverTotal) {
  ConfusionMatrix cm(3);
  const std::vector<std::pair<int, int>> pairs{{0, 0}, {0, 1}, {1, 1}, {2, 2}, {2, 0}, {2, 2}};
  for (auto [t, p] : pairs) cm.add(t, p);
  EXPECT_EQ(cm.total(), 6u);
  EXPECT_EQ(cm.trace(), 4u);
  EXPECT_DOUBLE_EQ(cm.accuracy(), 4.0 / 6.0);
  EXPECT_EQ(cm.row_total(0), 2u);
  EXPECT_EQ(cm.row_total(1), 1u);
  EXPECT_EQ(cm.row_total(2), 3u);
  EXPECT_THROW(cm.add(3, 0), ConfigError);
}

TEST(Silhouette, HandComputedOneDimensionalExample) {
  Matrix pts(4, 1);
  pts << 0.0, 1.0, 10.0, 11.0;
  const std::vector<int> labels{0, 0, 1, 1};
  // (10.5 - 1) / 10.5 for the outer points, (9.5 - 1) / 9.5 for the inner.
  const double expected = 0.5 * (9.5 / 10.5 + 8.5 / 9.5);
  EXPECT_NEAR(silhouette(pts, labels), expected, 1e-12);
}

TEST(Silhouette, MatchesDirectFormulaOnRandomPoints) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    const int n = 40;
    Matrix pts(n, 3);
    std::vector<std::vector<double>> raw(n, std::vector<double>(3));
    std::vector<int> labels(n);
    for (int i = 0; i < n; ++i) {
      labels[static_cast<std::size_t>(i)] = i % 3;
      for (int k = 0; k < 3; ++k) {
        const double v = normal(rng) + (k == 0 ? 1.5 * (i % 3) : 0.0);
        pts(i, k) = v;
        raw[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] = v;
      }
    }
    EXPECT_NEAR(silhouette(pts, labels), silhouette_oracle(raw, labels), 1e-12);
  }
}

TEST(Silhouette, SingleClusterScoresZero) {
  Matrix pts(3, 2);
  pts << 0, 0, 1, 1, 2, 2;
  EXPECT_EQ(silhouette(pts, std::vector<int>{4, 4, 4}), 0.0);
}

TEST(ObservedMean, InversionRoundTrips) {
  for (double eta : {0.6, 0.8, 0.9}) {
    const DetectorConfig cfg{4, eta};
    for (double target : {1.0, 1.3, 1.9, 2.2}) {
      const double m = invert_observed_mean(target, cfg);
      EXPECT_NEAR(class_averaged_observed_mean(m, cfg), target, 1e-6);
    }
  }
}

TEST(ObservedMean, UnreachableTargetsAreRejected) {
  // One added photon is always present, so the curve starts at eta.
  EXPECT_THROW(invert_observed_mean(0.5, {4, 0.8}), PhysicsError);
  EXPECT_THROW(invert_observed_mean(4.0, {4, 0.8}), PhysicsError);
}

TEST(Training, IsDeterministicForFixedSeed) {
  const auto ds = small_binary(1.3, 6, 1.0, 50, 100, 9);
  const auto data = make_features(ds, 5);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 64;
  VaeModel a(network_for(5, 2), 1), b(network_for(5, 2), 1);
  train_model(a, data, data, cfg, 77);
  train_model(b, data, data, cfg, 77);
  EXPECT_TRUE(std::equal(a.parameters().begin(), a.parameters().end(),
                         b.parameters().begin()));
  EXPECT_TRUE(std::equal(a.buffers().begin(), a.buffers().end(), b.buffers().begin()));
}

TEST(Training, RestoresBestValidationEpoch) {
  const auto ds = small_binary(1.3, 6, 1.0, 50, 150, 10);
  const auto split = split_stratified(ds, 3);
  const auto train = make_features(split.train, 5);
  const auto val = make_features(split.validation, 5);
  TrainConfig cfg;
  cfg.epochs = 25;
  cfg.batch_size = 32;
  cfg.patience = 5;
  VaeModel model(network_for(5, 2), 2);
  const auto r = train_model(model, train, val, cfg, 4);
  ASSERT_GE(r.best_epoch, 1);
  EXPECT_LE(r.best_epoch, r.epochs_run);
  EXPECT_EQ(r.validation_loss.size(), static_cast<std::size_t>(r.epochs_run));
  EXPECT_DOUBLE_EQ(evaluation_loss(model, val), r.best_validation_loss);
  EXPECT_DOUBLE_EQ(*std::min_element(r.validation_loss.begin(), r.validation_loss.end()),
                   r.best_validation_loss);
}

TEST(Training, RejectsFeatureWidthMismatch) {
  const auto ds = small_binary(1.3, 4, 0.8, 20, 4, 11);
  VaeModel model(network_for(5, 2), 1);
  EXPECT_THROW(train_model(model, make_features(ds, 6), {}, TrainConfig{}, 1), DimensionError);
}

TEST(Evaluation, InvariantUnderRowPermutation) {
  const auto ds = small_binary(1.3, 6, 1.0, 50, 60, 12);
  const VaeModel model(network_for(5, 2), 3);
  const auto data = make_features(ds, 5);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(data.x.rows()));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(1);
  std::shuffle(order.begin(), order.end(), rng);
  LabeledData shuffled{Matrix(data.x.rows(), data.x.cols()), {}};
  for (std::size_t i = 0; i < order.size(); ++i) {
    shuffled.x.row(static_cast<Eigen::Index>(i)) = data.x.row(order[i]);
    shuffled.labels.push_back(data.labels[static_cast<std::size_t>(order[i])]);
  }
  EXPECT_EQ(evaluate(model, data).accuracy, evaluate(model, shuffled).accuracy);
}

TEST(Evaluation, ConfusionRowsMatchClassCounts) {
  const auto ds = small_binary(1.3, 6, 1.0, 50, 37, 13);
  const VaeModel model(network_for(5, 2), 3);
  const auto ev = evaluate(model, make_features(ds, 5));
  EXPECT_EQ(ev.confusion.row_total(0), 37u);
  EXPECT_EQ(ev.confusion.row_total(1), 37u);
  EXPECT_DOUBLE_EQ(ev.accuracy,
                   static_cast<double>(ev.confusion.trace()) / ev.confusion.total());
}

TEST(Latent, OneRowPerSampleWithHeader) {
  const auto ds = small_binary(1.3, 6, 1.0, 50, 11, 14);
  const VaeModel model(network_for(5, 2), 5);
  const auto table = export_latent(model, ds);
  EXPECT_EQ(table.mu.rows(), 22);
  EXPECT_EQ(table.mu.cols(), 3);
  std::ostringstream out;
  write_latent_csv(out, table);
  const auto text = out.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "z1,z2,z3,label");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 23);
}

TEST(Report, CsvHasHeaderAndRows) {
  ReportTable t;
  t.columns = {"a", "b"};
  t.add_row({1.0, 0.25});
  EXPECT_THROW(t.add_row({1.0}), ConfigError);
  std::ostringstream out;
  t.write_csv(out);
  EXPECT_EQ(out.str(), "a,b\n1,0.25\n");
  EXPECT_EQ(t.column("b"), 1u);
}

TEST(Algorithm1, ReportShapeAndStageAssignment) {
  const auto r = run_algorithm1(tiny_algorithm1(3));
  ASSERT_EQ(r.report.rows.size(), 3u);
  ASSERT_EQ(r.stages.size(), 2u);
  EXPECT_FALSE(r.stages[0].fine_tuned);
  EXPECT_EQ(r.stages[0].bin_size, 100);
  EXPECT_TRUE(r.stages[1].fine_tuned);
  EXPECT_EQ(r.stages[1].bin_size, 50);
  const auto fine = r.report.column("fine_tuned");
  EXPECT_EQ(r.report.rows[0][fine], 1.0);
  EXPECT_EQ(r.report.rows[1][fine], 0.0);
  for (const auto& e : r.evaluations) {
    EXPECT_GE(e.evaluation.accuracy, 0.0);
    EXPECT_LE(e.evaluation.accuracy, 1.0);
    EXPECT_EQ(e.evaluation.confusion.row_total(0), e.test_rows / 2);
  }
  EXPECT_EQ(r.confusion.rows.size(), 3u * 4u);
}

TEST(Algorithm1, IdenticalSeedAndPlanGiveIdenticalReport) {
  const auto a = run_algorithm1(tiny_algorithm1(4));
  const auto b = run_algorithm1(tiny_algorithm1(4));
  EXPECT_EQ(a.report.rows, b.report.rows);
  EXPECT_EQ(a.confusion.rows, b.confusion.rows);
  EXPECT_TRUE(std::equal(a.base_model().parameters().begin(),
                         a.base_model().parameters().end(),
                         b.base_model().parameters().begin()));
}

TEST(Algorithm1, RejectsWrongInputWidth) {
  auto plan = tiny_algorithm1(1);
  plan.network.input_dim = 6;
  EXPECT_THROW(run_algorithm1(plan), DimensionError);
}

TEST(Algorithm1, FineTuningIsNoWorseThanScratchOnMostSeeds) {
  int wins = 0;
  for (std::uint64_t seed : {21u, 22u, 23u}) {
    auto plan = tiny_algorithm1(seed);
    plan.bins_per_class = 400;
    plan.initial.epochs = 40;
    plan.finetune.epochs = 10;
    const auto cmp = compare_transfer(plan, 20);
    if (cmp.fine_tuned_accuracy >= cmp.scratch_accuracy) ++wins;
  }
  EXPECT_GE(wins, 2);
}

TEST(Algorithm2, StructureOfSweeps) {
  Algorithm2Plan plan;
  plan.bins_per_class = 150;
  plan.extra_bins_per_class = 50;
  plan.train_nbar_obs = {1.3};
  plan.train.epochs = 5;
  plan.sweep_efficiencies = {0.1, 0.6};
  plan.sweep_nbar_obs = {0.5, 1.3};
  plan.sweep_bin_sizes = {100, 200};
  plan.eval_bins_per_class = 40;
  plan.seed = 5;
  const auto r = run_algorithm2(plan);
  EXPECT_EQ(r.per_eta.size(), 3u);
  EXPECT_EQ(r.eta_sweep.size(), 2u);
  EXPECT_EQ(r.nbar_sweep.size(), 3u);  // 0.5 lies below every training eta
  EXPECT_EQ(r.bin_sweep.size(), 6u);
  for (const auto& c : r.nbar_sweep) EXPECT_NEAR(c.nbar_obs, 1.3, 1e-6);
  EXPECT_EQ(r.report.rows.size(), 3u + 2u + 3u + 6u);
  EXPECT_EQ(r.report.columns.front(), "sweep");
}

TEST(MixedGrid, CellsCoverRatioSquareWithFullConfusion) {
  MixedGridPlan plan;
  plan.bins_per_class = 200;
  plan.ratios = {0.0, 0.5, 1.0};
  plan.train.epochs = 5;
  plan.eval_bins_per_class = 30;
  plan.seed = 6;
  const auto r = run_mixed_grid(plan);
  ASSERT_EQ(r.cells.size(), 9u);
  const auto& cell = r.cell(0.0, 0.0);
  EXPECT_EQ(cell.evaluation.confusion.classes(), 4);
  for (int c = 0; c < 4; ++c) EXPECT_EQ(cell.evaluation.confusion.row_total(c), 30u);
  EXPECT_EQ(r.confusion.rows.size(), 9u * 16u);
  EXPECT_THROW((void)r.cell(0.25, 0.0), ConfigError);
}

TEST(MixedGrid, RequiresFourClassHead) {
  MixedGridPlan plan;
  plan.network.num_classes = 2;
  EXPECT_THROW(run_mixed_grid(plan), ConfigError);
  plan.network.num_classes = 4;
  plan.ratios = {1.0};
  EXPECT_THROW(run_mixed_grid(plan), ConfigError);
}

TEST(Plans, JsonRoundTrip) {
  auto p1 = tiny_algorithm1(9);
  const auto q1 = nlohmann::json(p1).get<Algorithm1Plan>();
  EXPECT_EQ(q1.bin_sizes, p1.bin_sizes);
  EXPECT_EQ(q1.initial.epochs, p1.initial.epochs);
  EXPECT_EQ(q1.finetune.epochs, p1.finetune.epochs);
  EXPECT_EQ(q1.network, p1.network);
  EXPECT_EQ(q1.seed, 9u);

  Algorithm2Plan p2;
  p2.efficiencies = {0.7};
  const auto q2 = nlohmann::json(p2).get<Algorithm2Plan>();
  EXPECT_EQ(q2.efficiencies, p2.efficiencies);
  EXPECT_EQ(q2.sweep_nbar_obs, p2.sweep_nbar_obs);

  MixedGridPlan p3;
  p3.ratios = {0.0, 1.0};
  EXPECT_EQ(nlohmann::json(p3).get<MixedGridPlan>().ratios, p3.ratios);
}

}  // namespace
