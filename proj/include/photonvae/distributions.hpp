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

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "photonvae/errors.hpp"

namespace photonvae {

/// Largest probability mass a truncated distribution may drop beyond n_max.
inline constexpr double kTailBound = 1e-6;
inline constexpr int kDefaultMaxPhotons = 20;

/// Photon-number distribution over n = 0..n_max.
///
/// Entries are absolute probabilities. The mass above n_max is dropped, never
/// redistributed, so the total lies in [1 - kTailBound, 1].
class PhotonPMF {
 public:
  explicit PhotonPMF(std::vector<double> probs) : probs_(std::move(probs)) {
    if (probs_.empty()) throw PhysicsError("PhotonPMF: empty distribution");
    double sum = 0.0;
    for (std::size_t n = 0; n < probs_.size(); ++n) {
      const double p = probs_[n];
      if (!std::isfinite(p) || p < 0.0 || p > 1.0)
        throw PhysicsError("PhotonPMF: probability at n=" + std::to_string(n) +
                           " outside [0, 1]");
      sum += p;
    }
    if (sum > 1.0 + 1e-12)
      throw PhysicsError("PhotonPMF: total probability exceeds 1");
    if (sum < 1.0 - kTailBound)
      throw PhysicsError("PhotonPMF: truncated tail mass " +
                         std::to_string(1.0 - sum) +
                         " exceeds 1e-6; raise n_max");
  }

  [[nodiscard]] std::span<const double> probs() const { return probs_; }
  [[nodiscard]] int n_max() const { return static_cast<int>(probs_.size()) - 1; }
  [[nodiscard]] std::size_t size() const { return probs_.size(); }

  /// Probability of n photons; zero beyond the truncation bound.
  [[nodiscard]] double operator[](std::size_t n) const {
    return n < probs_.size() ? probs_[n] : 0.0;
  }

  [[nodiscard]] double total() const {
    double sum = 0.0;
    for (double p : probs_) sum += p;
    return sum;
  }

  friend bool operator==(const PhotonPMF&, const PhotonPMF&) = default;

 private:
  std::vector<double> probs_;
};

enum class SourceKind {
  Coherent,
  Thermal,
  Spacs,
  Spats,
  MixedCoherentSpacs,
  MixedThermalSpats,
};

inline std::string_view to_string(SourceKind kind) {
  switch (kind) {
    case SourceKind::Coherent: return "coherent";
    case SourceKind::Thermal: return "thermal";
    case SourceKind::Spacs: return "spacs";
    case SourceKind::Spats: return "spats";
    case SourceKind::MixedCoherentSpacs: return "mixed_coherent_spacs";
    case SourceKind::MixedThermalSpats: return "mixed_thermal_spats";
  }
  return "unknown";
}

inline SourceKind parse_source_kind(std::string_view name) {
  for (auto kind : {SourceKind::Coherent, SourceKind::Thermal, SourceKind::Spacs,
                    SourceKind::Spats, SourceKind::MixedCoherentSpacs,
                    SourceKind::MixedThermalSpats}) {
    if (to_string(kind) == name) return kind;
  }
  throw ConfigError("unknown source kind '" + std::string(name) + "'");
}

inline bool is_mixed(SourceKind kind) {
  return kind == SourceKind::MixedCoherentSpacs ||
         kind == SourceKind::MixedThermalSpats;
}

/// A light source. `mean_param` is |alpha|^2 for the coherent family and the
/// mean of the initial thermal state for the thermal family; `mix_ratio` is the
/// weight of the base (non-photon-added) state in the mixed kinds.
struct SourceSpec {
  SourceKind kind = SourceKind::Coherent;
  double mean_param = 0.0;
  double mix_ratio = 1.0;

  static SourceSpec make(SourceKind kind, double mean_param,
                         double mix_ratio = 1.0) {
    SourceSpec spec{kind, mean_param, is_mixed(kind) ? mix_ratio : 1.0};
    spec.validate();
    return spec;
  }

  void validate() const {
    if (!std::isfinite(mean_param) || mean_param < 0.0)
      throw PhysicsError("source mean parameter must be finite and >= 0");
    if (!(mix_ratio >= 0.0 && mix_ratio <= 1.0))
      throw PhysicsError("mix ratio must lie in [0, 1]");
  }

  friend bool operator==(const SourceSpec&, const SourceSpec&) = default;
};

namespace detail {

inline void check_generator_args(double mean, int n_max, const char* who) {
  if (!std::isfinite(mean) || mean < 0.0)
    throw PhysicsError(std::string(who) + ": mean must be finite and >= 0");
  if (n_max < 0) throw PhysicsError(std::string(who) + ": n_max must be >= 0");
}

// lambda^k e^{-lambda} / k! for k = 0..n_max, by ratio updates.
inline std::vector<double> poisson_terms(double lambda, int n_max) {
  std::vector<double> terms(static_cast<std::size_t>(n_max) + 1, 0.0);
  double term = std::exp(-lambda);
  for (int k = 0; k <= n_max; ++k) {
    if (k > 0) term *= lambda / k;
    terms[static_cast<std::size_t>(k)] = term;
  }
  return terms;
}

}  // namespace detail

/// Poisson statistics of a coherent state with mean photon number `mean`.
inline PhotonPMF coherent_pmf(double mean, int n_max = kDefaultMaxPhotons) {
  detail::check_generator_args(mean, n_max, "coherent_pmf");
  return PhotonPMF(detail::poisson_terms(mean, n_max));
}

/// Bose-Einstein statistics nbar^n / (1 + nbar)^(n + 1).
inline PhotonPMF thermal_pmf(double nbar, int n_max = kDefaultMaxPhotons) {
  detail::check_generator_args(nbar, n_max, "thermal_pmf");
  std::vector<double> probs(static_cast<std::size_t>(n_max) + 1, 0.0);
  const double ratio = nbar / (1.0 + nbar);
  double p = 1.0 / (1.0 + nbar);
  for (int n = 0; n <= n_max; ++n) {
    if (n > 0) p *= ratio;
    probs[static_cast<std::size_t>(n)] = p;
  }
  return PhotonPMF(std::move(probs));
}

/// Single-photon-added coherent state |alpha, 1>. With a = |alpha|^2,
/// P(n) = [Pois_a(n - 1) + a * Pois_a(n - 2)] / (1 + a); terms whose Poisson
/// index is negative vanish, so P(0) = 0 and P(1) has only the first term.
inline PhotonPMF spacs_pmf(double alpha_sq, int n_max = kDefaultMaxPhotons) {
  detail::check_generator_args(alpha_sq, n_max, "spacs_pmf");
  const auto pois = detail::poisson_terms(alpha_sq, n_max);
  std::vector<double> probs(static_cast<std::size_t>(n_max) + 1, 0.0);
  const double norm = 1.0 / (1.0 + alpha_sq);
  for (int n = 1; n <= n_max; ++n) {
    double p = pois[static_cast<std::size_t>(n - 1)];
    if (n >= 2) p += alpha_sq * pois[static_cast<std::size_t>(n - 2)];
    probs[static_cast<std::size_t>(n)] = norm * p;
  }
  return PhotonPMF(std::move(probs));
}

/// Single-photon-added thermal state: n * nbar^(n-1) / (1 + nbar)^(n+1), n >= 1.
inline PhotonPMF spats_pmf(double nbar, int n_max = kDefaultMaxPhotons) {
  detail::check_generator_args(nbar, n_max, "spats_pmf");
  std::vector<double> probs(static_cast<std::size_t>(n_max) + 1, 0.0);
  const double ratio = nbar / (1.0 + nbar);
  // geometric part nbar^(n-1) / (1 + nbar)^(n+1), starting at n = 1
  double geo = 1.0 / ((1.0 + nbar) * (1.0 + nbar));
  for (int n = 1; n <= n_max; ++n) {
    if (n > 1) geo *= ratio;
    probs[static_cast<std::size_t>(n)] = n * geo;
  }
  return PhotonPMF(std::move(probs));
}

/// Diagonal of r |base><base| + (1 - r) |added><added|.
inline PhotonPMF mixed_pmf(const PhotonPMF& base, const PhotonPMF& added,
                           double r) {
  if (base.size() != added.size())
    throw PhysicsError("mixed_pmf: distributions have different n_max");
  if (!(r >= 0.0 && r <= 1.0))
    throw PhysicsError("mixed_pmf: mix ratio must lie in [0, 1]");
  std::vector<double> probs(base.size());
  for (std::size_t n = 0; n < probs.size(); ++n)
    probs[n] = r * base[n] + (1.0 - r) * added[n];
  return PhotonPMF(std::move(probs));
}

inline double pmf_mean(const PhotonPMF& pmf) {
  double mean = 0.0;
  const auto probs = pmf.probs();
  for (std::size_t n = 1; n < probs.size(); ++n)
    mean += static_cast<double>(n) * probs[n];
  return mean;
}

/// Photon statistics of `source` truncated at `n_max`.
inline PhotonPMF source_pmf(const SourceSpec& source, int n_max) {
  source.validate();
  const double m = source.mean_param;
  switch (source.kind) {
    case SourceKind::Coherent: return coherent_pmf(m, n_max);
    case SourceKind::Thermal: return thermal_pmf(m, n_max);
    case SourceKind::Spacs: return spacs_pmf(m, n_max);
    case SourceKind::Spats: return spats_pmf(m, n_max);
    case SourceKind::MixedCoherentSpacs:
      return mixed_pmf(coherent_pmf(m, n_max), spacs_pmf(m, n_max),
                       source.mix_ratio);
    case SourceKind::MixedThermalSpats:
      return mixed_pmf(thermal_pmf(m, n_max), spats_pmf(m, n_max),
                       source.mix_ratio);
  }
  throw ConfigError("source_pmf: unknown source kind");
}

/// Truncation bound for `source`: kDefaultMaxPhotons when that suffices,
/// otherwise the first bound on a coarse ladder whose tail is within kTailBound.
inline int required_n_max(const SourceSpec& source, int limit = 4096) {
  source.validate();
  int n_max = kDefaultMaxPhotons;
  while (n_max <= limit) {
    try {
      (void)source_pmf(source, n_max);
      return n_max;
    } catch (const PhysicsError&) {
      n_max = n_max < 64 ? n_max + 4 : n_max * 2;
    }
  }
  throw PhysicsError("required_n_max: tail bound unreachable below n_max=" +
                     std::to_string(limit));
}

/// Photon statistics of `source` with the default bound, raised when the tail
/// would otherwise exceed kTailBound.
inline PhotonPMF source_pmf(const SourceSpec& source) {
  return source_pmf(source, required_n_max(source));
}

}  // namespace photonvae
