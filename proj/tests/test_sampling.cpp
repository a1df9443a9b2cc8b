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

#include "photonvae/sampling.hpp"

#include <cmath>
#include <sstream>
#include <vector>

#include "gtest/gtest.h"
#include "photonvae/dataset_io.hpp"

namespace photonvae {
namespace {

DatasetMeta two_class_meta(int bins, int bin_size, std::uint64_t seed) {
  DatasetMeta meta;
  meta.classes = {{SourceSpec::make(SourceKind::Spacs, 1.3), 0},
                  {SourceSpec::make(SourceKind::Spats, 1.3), 1}};
  meta.detector = {4, 0.9};
  meta.bin_size = bin_size;
  meta.bins_per_class = bins;
  meta.seed = seed;
  return meta;
}

TEST(Sampling, DegenerateDistributions) {
  Rng rng(1);
  for (int c : sample_counts(PhotonPMF({1.0, 0.0}), 1000, rng)) EXPECT_EQ(c, 0);
  for (int c : sample_counts(PhotonPMF({0.0, 1.0}), 1000, rng)) EXPECT_EQ(c, 1);
}

TEST(Sampling, FairCoinConcentration) {
  Rng rng(2);
  const auto counts = sample_counts(PhotonPMF({0.5, 0.5}), 1000000, rng);
  double ones = 0.0;
  for (int c : counts) ones += c;
  EXPECT_NEAR(ones / counts.size(), 0.5, 0.002);
}

TEST(Sampling, EmpiricalConvergesToChain) {
  const auto pmf = observed_chain(spats_pmf(1.9, 40), {4, 0.9});
  Rng rng(3);
  const std::size_t draws = 1000000;
  const auto counts = sample_counts(pmf, draws, rng);
  std::vector<double> freq(7, 0.0);
  for (int c : counts) freq[static_cast<std::size_t>(c)] += 1.0 / draws;
  for (int n = 0; n <= 6; ++n) {
    const double p = pmf[n];
    EXPECT_LE(std::abs(freq[static_cast<std::size_t>(n)] - p),
              5.0 * std::sqrt(p * (1 - p) / draws) + 1e-12) << n;
  }
}

TEST(Sampling, BinStatisticsExamples) {
  const std::vector<int> counts{0, 0, 1, 1};
  const auto bins = bin_statistics(counts, 4, 1);
  ASSERT_EQ(bins.size(), 1u);
  EXPECT_EQ(bins[0].p_obs[0], 0.5);
  EXPECT_EQ(bins[0].p_obs[1], 0.5);
  EXPECT_EQ(bins[0].n_bar_obs, 0.5);
  EXPECT_EQ(bins[0].label, 1);

  const std::vector<int> twos(200, 2);
  const auto all_two = bin_statistics(twos, 200, 0);
  EXPECT_EQ(all_two[0].p_obs[2], 1.0);
  EXPECT_EQ(all_two[0].n_bar_obs, 2.0);

  const std::vector<int> ragged{1, 1, 1, 2, 2};
  EXPECT_EQ(bin_statistics(ragged, 2, 0).size(), 2u);
}

TEST(Sampling, BinStatisticsRejectsLargeCounts) {
  const std::vector<int> counts{0, 7};
  EXPECT_THROW(bin_statistics(counts, 2, 0), PhysicsError);
  EXPECT_THROW(bin_statistics(counts, 0, 0), ConfigError);
}

TEST(Sampling, BinnedObservationInvariants) {
  const auto pmf = observed_chain(thermal_pmf(1.9, 40), {6, 1.0});
  Rng rng(4);
  for (int bin_size : {1, 7, 50, 333}) {
    const auto counts = sample_counts(pmf, static_cast<std::size_t>(bin_size) * 40, rng);
    for (const auto& obs : bin_statistics(counts, bin_size, 0)) {
      double sum = 0.0, mean = 0.0;
      for (std::size_t n = 0; n < obs.p_obs.size(); ++n) {
        sum += obs.p_obs[n];
        mean += static_cast<double>(n) * obs.p_obs[n];
        const double scaled = obs.p_obs[n] * bin_size;
        EXPECT_NEAR(scaled, std::round(scaled), 1e-9);
      }
      EXPECT_NEAR(sum, 1.0, 1e-12);
      EXPECT_NEAR(obs.n_bar_obs, mean, 1e-12);
    }
  }
}

TEST(Sampling, BinMeansMatchChainMean) {
  DatasetMeta meta;
  meta.classes = {{SourceSpec::make(SourceKind::Spats, 1.9), 0}};
  meta.detector = {4, 0.9};
  meta.bin_size = 200;
  meta.bins_per_class = 2000;
  meta.seed = 5;
  const auto ds = generate_dataset(meta);
  const auto pmf = observed_pmf(meta.classes[0].source, meta.detector);
  const double mean = pmf_mean(pmf);
  double second = 0.0;
  for (int n = 0; n <= 6; ++n) second += n * n * pmf[n];
  const double sigma = std::sqrt((second - mean * mean) / (2000.0 * 200.0));
  double avg = 0.0;
  for (const auto& s : ds.rows) avg += s.obs.n_bar_obs / ds.size();
  EXPECT_LE(std::abs(avg - mean), 3.0 * sigma);
}

TEST(Sampling, GenerateDatasetShapeAndDeterminism) {
  const auto meta = two_class_meta(2000, 200, 42);
  const auto a = generate_dataset(meta);
  EXPECT_EQ(a.size(), 4000u);
  const auto counts = label_counts(a);
  ASSERT_EQ(counts.size(), 2u);
  EXPECT_EQ(counts[0], counts[1]);

  const auto b = generate_dataset(meta);
  std::ostringstream sa, sb;
  write_dataset_csv(sa, a);
  write_dataset_csv(sb, b);
  EXPECT_EQ(sa.str(), sb.str());
}

TEST(Sampling, ParallelGenerationMatchesSerial) {
  auto meta = two_class_meta(97, 31, 9);
  const auto serial = generate_dataset(meta);
  meta.workers = 3;
  const auto parallel = generate_dataset(meta);
  ASSERT_EQ(serial.size(), parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    EXPECT_EQ(serial.rows[i].obs.p_obs, parallel.rows[i].obs.p_obs);
    EXPECT_EQ(serial.rows[i].obs.label, parallel.rows[i].obs.label);
  }
}

TEST(Sampling, LosslessSpacsHasNoEmptyBins) {
  DatasetMeta meta;
  meta.classes = {{SourceSpec::make(SourceKind::Spacs, 1.3), 0}};
  meta.detector = {6, 1.0};
  meta.bin_size = 100;
  meta.bins_per_class = 200;
  for (const auto& s : generate_dataset(meta).rows) EXPECT_EQ(s.obs.p_obs[0], 0.0);
}

TEST(Sampling, StratifiedSplit) {
  const auto ds = generate_dataset(two_class_meta(100, 20, 1));
  const auto split = split_stratified(ds, 77);
  EXPECT_EQ(split.train.size(), 160u);
  EXPECT_EQ(split.validation.size(), 20u);
  EXPECT_EQ(split.test.size(), 20u);
  for (const auto* part : {&split.train, &split.validation, &split.test}) {
    const auto counts = label_counts(*part);
    EXPECT_EQ(counts[0], counts[1]);
  }
  const auto again = split_stratified(ds, 77);
  for (std::size_t i = 0; i < split.test.size(); ++i)
    EXPECT_EQ(split.test.rows[i].obs.p_obs, again.test.rows[i].obs.p_obs);
}

TEST(DatasetIo, CsvHeaderAndRoundTrip) {
  auto meta = two_class_meta(25, 37, 3);
  meta.classes.push_back({SourceSpec::make(SourceKind::MixedThermalSpats, 1.3, 0.4), 2});
  const auto ds = generate_dataset(meta);
  std::stringstream buf;
  write_dataset_csv(buf, ds);
  std::string first;
  std::getline(buf, first);
  EXPECT_EQ(first, "p0,p1,p2,p3,p4,p5,p6,nbar_obs,label,bin_size,eta,n_detectors,nbar_the,"
                   "source_kind,mix_ratio");
  buf.seekg(0);
  const auto back = read_dataset_csv(buf);
  ASSERT_EQ(back.size(), ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (std::size_t n = 0; n < 7; ++n)
      EXPECT_NEAR(back.rows[i].obs.p_obs[n], ds.rows[i].obs.p_obs[n], 1e-9);
    EXPECT_EQ(back.rows[i].source, ds.rows[i].source);
    EXPECT_EQ(back.rows[i].detector, ds.rows[i].detector);
    EXPECT_EQ(back.rows[i].obs.bin_size, 37);
  }
  std::stringstream again;
  write_dataset_csv(again, back);
  EXPECT_EQ(again.str(), buf.str());

  std::stringstream bad("p0,p1\n1,2\n");
  EXPECT_THROW(read_dataset_csv(bad), ConfigError);
}

TEST(DatasetIo, MetaJsonRoundTrip) {
  const auto meta = two_class_meta(10, 5, 123456789012345ULL);
  const nlohmann::json j = meta;
  const auto back = j.get<DatasetMeta>();
  EXPECT_EQ(back.seed, meta.seed);
  EXPECT_EQ(back.classes.size(), 2u);
  EXPECT_EQ(back.classes[1].source, meta.classes[1].source);
  EXPECT_EQ(back.detector, meta.detector);
}

}  // namespace
}  // namespace photonvae
