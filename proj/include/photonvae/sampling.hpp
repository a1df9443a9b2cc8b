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
#include <array>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "photonvae/detector_model.hpp"
#include "photonvae/distributions.hpp"
#include "photonvae/errors.hpp"

namespace photonvae {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of the independent stream (`stream`, `index`) under a root seed.
/// Streams depend only on their coordinates, so any partition of the work
/// across threads reproduces the serial result.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream,
                                 std::uint64_t index) {
  return mix64(mix64(mix64(seed) ^ stream) ^ index);
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream,
                    std::uint64_t index) {
  return Rng(derive_seed(seed, stream, index));
}

/// Empirical click statistics of one bin of `bin_size` observations.
struct BinnedObservation {
  std::array<double, kObservedSupport> p_obs{};
  double n_bar_obs = 0.0;
  int label = 0;
  int bin_size = 0;
};

/// I.i.d. draws by inverse CDF. A uniform draw landing in the dropped tail is
/// assigned to the highest outcome with nonzero probability.
inline std::vector<int> sample_counts(const PhotonPMF& pmf, std::size_t count,
                                      Rng& rng) {
  const auto probs = pmf.probs();
  std::vector<double> cdf(probs.size());
  double acc = 0.0;
  for (std::size_t n = 0; n < probs.size(); ++n) {
    acc += probs[n];
    cdf[n] = acc;
  }
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<int> counts(count);
  int top = pmf.n_max();
  while (top > 0 && probs[static_cast<std::size_t>(top)] == 0.0) --top;
  for (auto& c : counts) {
    const double u = uniform(rng);
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    c = it == cdf.end() ? top : static_cast<int>(it - cdf.begin());
  }
  return counts;
}

/// Splits `counts` into consecutive bins; a trailing partial bin is dropped.
inline std::vector<BinnedObservation> bin_statistics(std::span<const int> counts,
                                                     int bin_size, int label) {
  if (bin_size < 1) throw ConfigError("bin_statistics: bin_size must be >= 1");
  const std::size_t width = static_cast<std::size_t>(bin_size);
  const std::size_t n_bins = counts.size() / width;
  std::vector<BinnedObservation> bins;
  bins.reserve(n_bins);
  for (std::size_t b = 0; b < n_bins; ++b) {
    std::array<long, kObservedSupport> tally{};
    long total = 0;
    for (std::size_t i = b * width; i < (b + 1) * width; ++i) {
      const int c = counts[i];
      if (c < 0 || c >= kObservedSupport)
        throw PhysicsError("bin_statistics: click count " + std::to_string(c) +
                           " outside 0..6");
      ++tally[static_cast<std::size_t>(c)];
      total += c;
    }
    BinnedObservation obs;
    for (std::size_t n = 0; n < tally.size(); ++n)
      obs.p_obs[n] = static_cast<double>(tally[n]) / bin_size;
    obs.n_bar_obs = static_cast<double>(total) / bin_size;
    obs.label = label;
    obs.bin_size = bin_size;
    bins.push_back(obs);
  }
  return bins;
}

/// One labeled light source of a dataset.
struct ClassSource {
  SourceSpec source;
  int label = 0;
};

struct DatasetMeta {
  std::vector<ClassSource> classes;
  DetectorConfig detector;
  int bin_size = 100;
  int bins_per_class = 2000;
  std::uint64_t seed = 0;
  unsigned workers = 1;  // not part of the result

  void validate() const {
    if (classes.empty()) throw ConfigError("dataset needs at least one class");
    if (bin_size < 1) throw ConfigError("bin_size must be >= 1");
    if (bins_per_class < 1) throw ConfigError("bins_per_class must be >= 1");
    detector.validate();
    for (const auto& c : classes) {
      c.source.validate();
      if (c.label < 0) throw ConfigError("class labels must be >= 0");
    }
  }
};

/// A dataset row: one bin plus the configuration that produced it.
struct Sample {
  BinnedObservation obs;
  SourceSpec source;
  DetectorConfig detector;

  /// Theoretical (pre-loss) mean parameter of the source.
  [[nodiscard]] double nbar_the() const { return source.mean_param; }
};

struct Dataset {
  std::vector<Sample> rows;

  [[nodiscard]] std::size_t size() const { return rows.size(); }
  [[nodiscard]] bool empty() const { return rows.empty(); }

  void append(const Dataset& other) {
    rows.insert(rows.end(), other.rows.begin(), other.rows.end());
  }
};

/// Bins for every class in `meta`. Row order is class-major then bin index;
/// bin b of class c always draws from stream (c, b) of `meta.seed`.
inline Dataset generate_dataset(const DatasetMeta& meta) {
  meta.validate();
  std::vector<PhotonPMF> observed;
  observed.reserve(meta.classes.size());
  for (const auto& c : meta.classes)
    observed.push_back(observed_pmf(c.source, meta.detector));

  const std::size_t per_class = static_cast<std::size_t>(meta.bins_per_class);
  const std::size_t total = per_class * meta.classes.size();
  Dataset ds;
  ds.rows.resize(total);

  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t row = begin; row < end; ++row) {
      const std::size_t c = row / per_class;
      const std::size_t b = row % per_class;
      Rng rng = make_rng(meta.seed, c, b);
      const auto counts =
          sample_counts(observed[c], static_cast<std::size_t>(meta.bin_size), rng);
      Sample& s = ds.rows[row];
      s.obs = bin_statistics(counts, meta.bin_size, meta.classes[c].label).front();
      s.source = meta.classes[c].source;
      s.detector = meta.detector;
    }
  };

  const std::size_t workers =
      std::clamp<std::size_t>(meta.workers, 1, std::max<std::size_t>(total, 1));
  if (workers == 1) {
    work(0, total);
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (total + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t begin = w * chunk;
      const std::size_t end = std::min(total, begin + chunk);
      if (begin < end) pool.emplace_back(work, begin, end);
    }
  }
  return ds;
}

struct DatasetSplit {
  Dataset train;
  Dataset validation;
  Dataset test;
};

/// Seeded split stratified by label; each split keeps the original row order.
inline DatasetSplit split_stratified(const Dataset& ds, std::uint64_t seed,
                                     double train_fraction = 0.8,
                                     double validation_fraction = 0.1) {
  if (train_fraction < 0.0 || validation_fraction < 0.0 ||
      train_fraction + validation_fraction > 1.0)
    throw ConfigError("split fractions must be nonnegative and sum to <= 1");

  int max_label = -1;
  for (const auto& s : ds.rows) max_label = std::max(max_label, s.obs.label);
  std::vector<std::vector<std::size_t>> by_label(
      static_cast<std::size_t>(max_label + 1));
  for (std::size_t i = 0; i < ds.rows.size(); ++i)
    by_label[static_cast<std::size_t>(ds.rows[i].obs.label)].push_back(i);

  std::vector<std::size_t> train, val, test;
  for (std::size_t label = 0; label < by_label.size(); ++label) {
    auto& idx = by_label[label];
    Rng rng = make_rng(seed, 0x5b117ULL, label);
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto n = static_cast<double>(idx.size());
    const auto n_train = static_cast<std::size_t>(std::llround(n * train_fraction));
    const auto n_val = std::min(
        idx.size() - n_train,
        static_cast<std::size_t>(std::llround(n * validation_fraction)));
    train.insert(train.end(), idx.begin(), idx.begin() + n_train);
    val.insert(val.end(), idx.begin() + n_train, idx.begin() + n_train + n_val);
    test.insert(test.end(), idx.begin() + n_train + n_val, idx.end());
  }

  auto gather = [&](std::vector<std::size_t>& idx) {
    std::sort(idx.begin(), idx.end());
    Dataset out;
    out.rows.reserve(idx.size());
    for (auto i : idx) out.rows.push_back(ds.rows[i]);
    return out;
  };
  return {gather(train), gather(val), gather(test)};
}

/// Number of rows per label, indexed by label.
inline std::vector<std::size_t> label_counts(const Dataset& ds) {
  std::vector<std::size_t> counts;
  for (const auto& s : ds.rows) {
    const auto label = static_cast<std::size_t>(s.obs.label);
    if (label >= counts.size()) counts.resize(label + 1, 0);
    ++counts[label];
  }
  return counts;
}

}  // namespace photonvae
