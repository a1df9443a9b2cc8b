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
#include <string>
#include <vector>

#include "photonvae/distributions.hpp"
#include "photonvae/errors.hpp"

namespace photonvae {

/// Number of click entries every observed distribution carries (P(0)..P(6)).
inline constexpr int kObservedSupport = 7;

/// Balanced splitter tree feeding `n_detectors` click detectors, each with
/// quantum efficiency `efficiency`. Every detector reports at most one click
/// per observation (low-rate dead-time regime).
struct DetectorConfig {
  int n_detectors = 4;
  double efficiency = 1.0;

  void validate() const {
    if (n_detectors < 1) throw PhysicsError("detector count must be >= 1");
    if (!(efficiency > 0.0 && efficiency <= 1.0))
      throw PhysicsError("quantum efficiency must lie in (0, 1]");
  }

  friend bool operator==(const DetectorConfig&, const DetectorConfig&) = default;
};

/// Bernoulli thinning: each photon survives independently with probability eta.
inline PhotonPMF apply_efficiency(const PhotonPMF& pmf, double eta) {
  if (!(eta > 0.0 && eta <= 1.0))
    throw PhysicsError("apply_efficiency: eta must lie in (0, 1]");
  if (eta == 1.0) return pmf;

  const std::size_t size = pmf.size();
  std::vector<double> out(size, 0.0);
  // row[n] = binom(m, n) eta^n (1 - eta)^(m - n), advanced one m at a time
  std::vector<double> row(size, 0.0);
  row[0] = 1.0;
  for (std::size_t m = 0; m < size; ++m) {
    if (m > 0) {
      for (std::size_t n = m; n > 0; --n)
        row[n] = (1.0 - eta) * row[n] + eta * row[n - 1];
      row[0] *= 1.0 - eta;
    }
    const double weight = pmf[m];
    if (weight == 0.0) continue;
    for (std::size_t n = 0; n <= m; ++n) out[n] += row[n] * weight;
  }
  for (double& p : out) p = std::min(p, 1.0);
  return PhotonPMF(std::move(out));
}

/// C(n, j): probability that j photons, each routed uniformly at random to one
/// of N detectors, occupy exactly n distinct detectors.
class ClickCoefficients {
 public:
  ClickCoefficients(int n_detectors, int j_max)
      : n_detectors_(n_detectors),
        j_max_(j_max),
        table_(static_cast<std::size_t>(n_detectors + 1) *
                   static_cast<std::size_t>(j_max + 1),
               0.0) {}

  [[nodiscard]] int n_detectors() const { return n_detectors_; }
  [[nodiscard]] int j_max() const { return j_max_; }

  [[nodiscard]] double operator()(int n, int j) const {
    if (n < 0 || j < 0 || n > n_detectors_ || j > j_max_) return 0.0;
    return table_[index(n, j)];
  }

  double& at(int n, int j) { return table_[index(n, j)]; }

 private:
  [[nodiscard]] std::size_t index(int n, int j) const {
    return static_cast<std::size_t>(n) * static_cast<std::size_t>(j_max_ + 1) +
           static_cast<std::size_t>(j);
  }

  int n_detectors_;
  int j_max_;
  std::vector<double> table_;
};

/// Closed form by inclusion-exclusion over the empty detectors:
///   C(n, j) = binom(N, n) * sum_k (-1)^k binom(n, k) ((n - k) / N)^j.
/// The surjection count is scaled by N^-j term by term so no intermediate
/// exceeds binom(N, n) * 2^n.
inline ClickCoefficients click_coefficients(int n_detectors, int j_max) {
  if (n_detectors < 1)
    throw PhysicsError("click_coefficients: detector count must be >= 1");
  if (j_max < 0) throw PhysicsError("click_coefficients: j_max must be >= 0");

  auto binom = [](int n, int k) {
    double c = 1.0;
    for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
    return c;
  };

  ClickCoefficients table(n_detectors, j_max);
  const double inv_n = 1.0 / n_detectors;
  for (int j = 0; j <= j_max; ++j) {
    for (int n = 0; n <= std::min(j, n_detectors); ++n) {
      double surjective = 0.0;
      for (int k = 0; k <= n; ++k) {
        const double occupied = (n - k) * inv_n;
        const double power = j == 0 ? 1.0 : std::pow(occupied, j);
        surjective += ((k % 2 == 0) ? 1.0 : -1.0) * binom(n, k) * power;
      }
      table.at(n, j) = std::clamp(binom(n_detectors, n) * surjective, 0.0, 1.0);
    }
  }
  return table;
}

/// Collapses photon numbers to click counts: P_o(n) = sum_{j>=n} C(n, j) P(j).
/// The result is padded with zeros up to P(6).
inline PhotonPMF apply_click_model(const PhotonPMF& pmf,
                                   const ClickCoefficients& coeffs) {
  if (coeffs.j_max() < pmf.n_max())
    throw PhysicsError("apply_click_model: coefficient table too small");
  const int top = std::min(pmf.n_max(), coeffs.n_detectors());
  std::vector<double> out(
      static_cast<std::size_t>(std::max(top + 1, kObservedSupport)), 0.0);
  for (int n = 0; n <= top; ++n) {
    double p = 0.0;
    for (int j = n; j <= pmf.n_max(); ++j)
      p += coeffs(n, j) * pmf[static_cast<std::size_t>(j)];
    out[static_cast<std::size_t>(n)] = std::min(p, 1.0);
  }
  return PhotonPMF(std::move(out));
}

inline PhotonPMF apply_click_model(const PhotonPMF& pmf, int n_detectors) {
  return apply_click_model(pmf, click_coefficients(n_detectors, pmf.n_max()));
}

/// Losses first, then the click collapse.
inline PhotonPMF observed_chain(const PhotonPMF& pmf, const DetectorConfig& cfg) {
  cfg.validate();
  return apply_click_model(apply_efficiency(pmf, cfg.efficiency),
                           cfg.n_detectors);
}

inline PhotonPMF observed_pmf(const SourceSpec& source,
                              const DetectorConfig& cfg) {
  return observed_chain(source_pmf(source), cfg);
}

/// Mean click count seen by the detector for `source`.
inline double observed_mean(const SourceSpec& source, const DetectorConfig& cfg) {
  return pmf_mean(observed_pmf(source, cfg));
}

}  // namespace photonvae
