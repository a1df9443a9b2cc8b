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

#include "photonvae/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "gtest/gtest.h"

namespace photonvae {
namespace {

// Direct evaluation with lgamma; shares nothing with the ratio recurrences.
double poisson_direct(double lambda, int n) {
  if (lambda == 0.0) return n == 0 ? 1.0 : 0.0;
  return std::exp(-lambda + n * std::log(lambda) - std::lgamma(n + 1.0));
}

double spacs_direct(double a, int n) {
  double p = 0.0;
  if (n >= 1) p += poisson_direct(a, n - 1);
  if (n >= 2) p += a * poisson_direct(a, n - 2);
  return p / (1.0 + a);
}

double spats_direct(double nbar, int n) {
  if (n < 1) return 0.0;
  return n * std::pow(nbar, n - 1) / std::pow(1.0 + nbar, n + 1);
}

const std::vector<double> kGrid{0.1, 0.5, 1.0, 1.3, 1.9, 3.0};

TEST(Distributions, CoherentVacuumAndPoissonValues) {
  const auto vacuum = coherent_pmf(0.0);
  EXPECT_EQ(vacuum[0], 1.0);
  for (int n = 1; n <= vacuum.n_max(); ++n) EXPECT_EQ(vacuum[n], 0.0);

  EXPECT_NEAR(coherent_pmf(1.0)[0], 0.36787944117144233, 1e-15);
  const auto pmf = coherent_pmf(1.3, 20);
  double oracle_sum = 0.0;
  for (int n = 0; n <= 20; ++n) {
    EXPECT_NEAR(pmf[n], poisson_direct(1.3, n), 1e-14);
    oracle_sum += poisson_direct(1.3, n);
  }
  EXPECT_NEAR(pmf.total(), 1.0, 1e-6);
  EXPECT_NEAR(pmf.total(), oracle_sum, 1e-14);
}

TEST(Distributions, ThermalValuesAndMean) {
  const auto vacuum = thermal_pmf(0.0);
  EXPECT_EQ(vacuum[0], 1.0);
  EXPECT_EQ(vacuum[1], 0.0);
  const auto pmf = thermal_pmf(1.0, 60);
  EXPECT_DOUBLE_EQ(pmf[0], 0.5);
  EXPECT_DOUBLE_EQ(pmf[1], 0.25);
  EXPECT_NEAR(pmf_mean(pmf), 1.0, 1e-6);
}

TEST(Distributions, SpacsValues) {
  EXPECT_EQ(spacs_pmf(1.0)[0], 0.0);
  EXPECT_NEAR(spacs_pmf(1.0)[1], 0.18393972058572117, 1e-15);
  const auto fock = spacs_pmf(0.0);
  EXPECT_EQ(fock[0], 0.0);
  EXPECT_EQ(fock[1], 1.0);
  for (int n = 2; n <= fock.n_max(); ++n) EXPECT_EQ(fock[n], 0.0);
  for (double a : kGrid) {
    const auto pmf = spacs_pmf(a);
    for (int n = 0; n <= 20; ++n) EXPECT_NEAR(pmf[n], spacs_direct(a, n), 1e-14);
  }
}

TEST(Distributions, SpatsValuesAndMean) {
  EXPECT_EQ(spats_pmf(1.0, 80)[0], 0.0);
  EXPECT_DOUBLE_EQ(spats_pmf(1.0, 80)[1], 0.25);
  EXPECT_NEAR(pmf_mean(spats_pmf(1.0, 80)), 3.0, 1e-6);
  for (double nbar : {0.1, 0.5, 1.0, 1.5, 2.0}) {
    const auto pmf = spats_pmf(nbar, 120);
    EXPECT_NEAR(pmf_mean(pmf), 2.0 * nbar + 1.0, 1e-5) << nbar;
    for (int n = 0; n <= 30; ++n) EXPECT_NEAR(pmf[n], spats_direct(nbar, n), 1e-14);
  }
}

TEST(Distributions, NormalizationOverParameterGrid) {
  for (double m : kGrid) {
    for (SourceKind kind : {SourceKind::Coherent, SourceKind::Thermal, SourceKind::Spacs,
                            SourceKind::Spats}) {
      const auto pmf = source_pmf(SourceSpec::make(kind, m));
      EXPECT_GE(pmf.total(), 1.0 - 1e-6) << m;
      EXPECT_LE(pmf.total(), 1.0) << m;
      for (double p : pmf.probs()) {
        EXPECT_GE(p, 0.0);
        EXPECT_LE(p, 1.0);
      }
    }
  }
}

TEST(Distributions, ThermalFamilyRaisesSupportAutomatically) {
  EXPECT_THROW(spats_pmf(1.3), PhysicsError);
  const auto spec = SourceSpec::make(SourceKind::Spats, 1.3);
  const auto pmf = source_pmf(spec);
  EXPECT_GT(pmf.n_max(), kDefaultMaxPhotons);
  EXPECT_GE(pmf.total(), 1.0 - kTailBound);
  EXPECT_EQ(pmf.n_max(), required_n_max(spec));
}

TEST(Distributions, PhotonAddedStatesHaveNoVacuum) {
  for (double m : {0.0, 0.01, 0.1, 0.5, 1.0, 1.3, 1.9, 3.0}) {
    EXPECT_EQ(spacs_pmf(m)[0], 0.0);
    EXPECT_EQ(spats_pmf(m, 200)[0], 0.0);
  }
}

TEST(Distributions, SpacsArgmaxAtLargeAmplitude) {
  const auto pmf = spacs_pmf(25.0, 80);
  const auto probs = pmf.probs();
  const auto argmax = std::max_element(probs.begin(), probs.end()) - probs.begin();
  EXPECT_TRUE(argmax == 25 || argmax == 26) << argmax;
}

TEST(Distributions, MixedEndpointsAndMidpoint) {
  const auto base = coherent_pmf(1.3);
  const auto added = spacs_pmf(1.3);
  EXPECT_EQ(mixed_pmf(base, added, 1.0), base);
  EXPECT_EQ(mixed_pmf(base, added, 0.0), added);
  const auto mid = mixed_pmf(PhotonPMF({1.0, 0.0}), PhotonPMF({0.0, 1.0}), 0.5);
  EXPECT_DOUBLE_EQ(mid[0], 0.5);
  EXPECT_DOUBLE_EQ(mid[1], 0.5);
}

TEST(Distributions, MixedIsAffineInRatio) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto base = thermal_pmf(1.3, 80);
  const auto added = spats_pmf(1.3, 80);
  for (int trial = 0; trial < 200; ++trial) {
    const double r1 = unit(rng), r2 = unit(rng), lambda = unit(rng);
    const auto a = mixed_pmf(base, added, r1);
    const auto b = mixed_pmf(base, added, r2);
    const auto c = mixed_pmf(base, added, lambda * r1 + (1 - lambda) * r2);
    for (int n = 0; n <= c.n_max(); ++n)
      EXPECT_NEAR(lambda * a[n] + (1 - lambda) * b[n], c[n], 1e-12);
  }
}

TEST(Distributions, MeanOfSimpleDistributions) {
  EXPECT_EQ(pmf_mean(PhotonPMF({1.0, 0.0, 0.0})), 0.0);
  EXPECT_EQ(pmf_mean(PhotonPMF({0.0, 1.0, 0.0})), 1.0);
  EXPECT_NEAR(pmf_mean(coherent_pmf(1.3, 20)), 1.3, 1e-5);
}

TEST(Distributions, RejectsInvalidArguments) {
  EXPECT_THROW(coherent_pmf(-0.1), PhysicsError);
  EXPECT_THROW(thermal_pmf(-1.0), PhysicsError);
  EXPECT_THROW(spacs_pmf(-1.0), PhysicsError);
  EXPECT_THROW(spats_pmf(-1.0), PhysicsError);
  EXPECT_THROW(coherent_pmf(1.0, -1), PhysicsError);
  // tail above n_max far exceeds the bound
  EXPECT_THROW(coherent_pmf(10.0, 20), PhysicsError);
  EXPECT_THROW(thermal_pmf(3.0, 20), PhysicsError);
  EXPECT_THROW(mixed_pmf(coherent_pmf(1.0, 20), spacs_pmf(1.0, 30), 0.5), PhysicsError);
  EXPECT_THROW(mixed_pmf(coherent_pmf(1.0), spacs_pmf(1.0), 1.5), PhysicsError);
  EXPECT_THROW(PhotonPMF({0.5, 0.6}), PhysicsError);
}

TEST(Distributions, SourceSpecCanonicalizesAndRaisesBound) {
  EXPECT_EQ(SourceSpec::make(SourceKind::Spacs, 1.0, 0.3).mix_ratio, 1.0);
  EXPECT_EQ(SourceSpec::make(SourceKind::MixedCoherentSpacs, 1.0, 0.3).mix_ratio, 0.3);
  EXPECT_THROW(SourceSpec::make(SourceKind::MixedThermalSpats, 1.0, 1.2), PhysicsError);
  EXPECT_EQ(required_n_max(SourceSpec::make(SourceKind::Coherent, 1.3)), 20);
  const auto big = source_pmf(SourceSpec::make(SourceKind::Coherent, 50.0));
  EXPECT_GT(big.n_max(), 20);
  EXPECT_GE(big.total(), 1.0 - 1e-6);
  const auto mix = source_pmf(SourceSpec::make(SourceKind::MixedThermalSpats, 1.3, 0.25));
  for (int n = 0; n <= mix.n_max(); ++n)
    EXPECT_NEAR(mix[n], 0.25 * thermal_pmf(1.3, mix.n_max())[n] +
                            0.75 * spats_pmf(1.3, mix.n_max())[n], 1e-15);
  for (auto k : {SourceKind::Coherent, SourceKind::MixedThermalSpats})
    EXPECT_EQ(parse_source_kind(to_string(k)), k);
  EXPECT_THROW(parse_source_kind("laser"), ConfigError);
}

}  // namespace
}  // namespace photonvae
