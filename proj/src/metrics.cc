/*
 * Copyright 2026 The andor Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "andor/metrics.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>
#include <utility>

#include "andor/error.h"

namespace andor {
namespace {

void CheckSameN(int a, int b) {
  if (a != b) {
    throw Error(ErrorKind::kDimension, "spectra over different variable "
                                       "counts: n=" + std::to_string(a) +
                                           " vs n=" + std::to_string(b));
  }
}

double Restricted(const InteractionSpectrum& spectrum,
                  const SalientIndex& index, Family family,
                  std::uint32_t mask) {
  return index.Contains(family, mask) ? spectrum.effects(family)[mask] : 0.0;
}

}  // namespace

bool SalientIndex::Contains(Family family, std::uint32_t mask) const {
  const int order = std::popcount(mask);
  if (order >= static_cast<int>(and_sets.size())) return false;
  const MaskSet& s = set(family, order);
  return std::binary_search(s.begin(), s.end(), mask);
}

std::size_t SalientIndex::size() const {
  std::size_t total = 0;
  for (const MaskSet& s : and_sets) total += s.size();
  for (const MaskSet& s : or_sets) total += s.size();
  return total;
}

double MaxEffectMagnitude(const InteractionSpectrum& spectrum) {
  double peak = 0.0;
  for (std::size_t s = 1; s < spectrum.and_effects.size(); ++s) {
    peak = std::max({peak, std::abs(spectrum.and_effects[s]),
                     std::abs(spectrum.or_effects[s])});
  }
  return peak;
}

SalientIndex SelectSalientAbove(const InteractionSpectrum& spectrum,
                                double tau, std::string layer) {
  if (std::isnan(tau) || tau < 0.0) {
    throw Error(ErrorKind::kDomain, "salience threshold must be >= 0");
  }
  const int n = spectrum.n();
  SalientIndex index{n, tau, std::move(layer),
                     std::vector<MaskSet>(n + 1), std::vector<MaskSet>(n + 1)};
  const bool all_zero = MaxEffectMagnitude(spectrum) == 0.0;
  if (all_zero) return index;
  for (std::size_t s = 1; s < spectrum.and_effects.size(); ++s) {
    const auto mask = static_cast<std::uint32_t>(s);
    const int order = std::popcount(mask);
    if (std::abs(spectrum.and_effects[s]) > tau) {
      index.and_sets[order].push_back(mask);
    }
    if (std::abs(spectrum.or_effects[s]) > tau) {
      index.or_sets[order].push_back(mask);
    }
  }
  return index;
}

SalientIndex SelectSalient(const InteractionSpectrum& spectrum,
                           double tau_ratio, std::string layer) {
  if (!(tau_ratio > 0.0)) {
    throw Error(ErrorKind::kDomain, "tau ratio must be > 0");
  }
  return SelectSalientAbove(spectrum,
                            tau_ratio * MaxEffectMagnitude(spectrum),
                            std::move(layer));
}

InteractionSpectrum Normalize(const InteractionSpectrum& spectrum,
                              double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw Error(ErrorKind::kDomain, "normalisation scale must be > 0");
  }
  InteractionSpectrum out = spectrum;
  for (double& e : out.and_effects.mutable_values()) e /= scale;
  for (double& e : out.or_effects.mutable_values()) e /= scale;
  return out;
}

std::vector<double> OrderStrength(const SalientIndex& index,
                                  const InteractionSpectrum& spectrum,
                                  Family family) {
  CheckSameN(index.n, spectrum.n());
  std::vector<double> totals(index.n + 1, 0.0);
  const LatticeArray& effects = spectrum.effects(family);
  for (int m = 0; m <= index.n; ++m) {
    for (std::uint32_t mask : index.set(family, m)) {
      totals[m] += std::abs(effects[mask]);
    }
  }
  return totals;
}

double SharedEffect(double a, double b) {
  if (a * b <= 0.0) return 0.0;
  return std::copysign(std::min(std::abs(a), std::abs(b)), a);
}

TrackTable Track(const InteractionSpectrum& layer,
                 const SalientIndex& layer_index,
                 const InteractionSpectrum& final_layer,
                 const SalientIndex& final_index) {
  const int n = layer.n();
  CheckSameN(n, final_layer.n());
  CheckSameN(n, layer_index.n);
  CheckSameN(n, final_index.n);
  TrackTable table;
  table.n = n;
  for (Family family : {Family::kAnd, Family::kOr}) {
    std::vector<TrackCell>& cells = table.cells[static_cast<int>(family)];
    cells.assign(n + 1, TrackCell{});
    for (std::size_t s = 1; s < layer.and_effects.size(); ++s) {
      const auto mask = static_cast<std::uint32_t>(s);
      const double a = Restricted(layer, layer_index, family, mask);
      const double b = Restricted(final_layer, final_index, family, mask);
      if (a == 0.0 && b == 0.0) continue;
      const double shared = SharedEffect(a, b);
      TrackCell& cell = cells[std::popcount(mask)];
      cell.all_layer += std::abs(a);
      cell.all_final += std::abs(b);
      cell.overlap += std::abs(shared);
      cell.forget += std::abs(a - shared);
      cell.fresh += std::abs(b - shared);
    }
  }
  return table;
}

TrackTable MeanTrack(std::span<const TrackTable> tables) {
  if (tables.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "no tables to average");
  }
  TrackTable mean;
  mean.n = tables.front().n;
  for (auto& cells : mean.cells) cells.assign(mean.n + 1, TrackCell{});
  for (const TrackTable& t : tables) {
    CheckSameN(mean.n, t.n);
    for (int f = 0; f < 2; ++f) {
      for (int m = 0; m <= mean.n; ++m) {
        TrackCell& dst = mean.cells[f][m];
        const TrackCell& src = t.cells[f][m];
        dst.all_layer += src.all_layer;
        dst.all_final += src.all_final;
        dst.overlap += src.overlap;
        dst.forget += src.forget;
        dst.fresh += src.fresh;
      }
    }
  }
  const double count = static_cast<double>(tables.size());
  for (auto& cells : mean.cells) {
    for (TrackCell& c : cells) {
      c.all_layer /= count;
      c.all_final /= count;
      c.overlap /= count;
      c.forget /= count;
      c.fresh /= count;
    }
  }
  return mean;
}

double IdentityError(const TrackTable& table) {
  double worst = 0.0;
  for (const auto& cells : table.cells) {
    for (const TrackCell& c : cells) {
      worst = std::max(worst, std::abs(c.overlap + c.forget - c.all_layer) /
                                  std::max(1.0, c.all_layer));
      worst = std::max(worst, std::abs(c.overlap + c.fresh - c.all_final) /
                                  std::max(1.0, c.all_final));
    }
  }
  return worst;
}

Ratios CompletenessRedundancy(const TrackCell& cell) {
  Ratios r;
  if (cell.all_final > 0.0) r.completeness = cell.overlap / cell.all_final;
  if (cell.all_layer > 0.0) r.redundancy = cell.forget / cell.all_layer;
  return r;
}

std::optional<double> Iou(const MaskSet& a, const MaskSet& b) {
  if (a.empty() && b.empty()) return std::nullopt;
  std::size_t common = 0;
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++common;
      ++i;
      ++j;
    }
  }
  const std::size_t joined = a.size() + b.size() - common;
  return static_cast<double>(common) / static_cast<double>(joined);
}

std::optional<double> Stability(std::span<const InteractionSpectrum> ensemble,
                                const MaskSet& omega, Family family) {
  if (ensemble.size() < 2) {
    throw Error(ErrorKind::kEnsemble,
                "stability needs at least 2 perturbed spectra, got " +
                    std::to_string(ensemble.size()));
  }
  for (const InteractionSpectrum& s : ensemble) {
    CheckSameN(ensemble.front().n(), s.n());
  }
  if (omega.empty()) return std::nullopt;
  const double k = static_cast<double>(ensemble.size());
  double total = 0.0;
  for (std::uint32_t mask : omega) {
    double mean = 0.0;
    for (const InteractionSpectrum& s : ensemble) {
      mean += s.effects(family)[mask];
    }
    mean /= k;
    double var = 0.0;
    for (const InteractionSpectrum& s : ensemble) {
      const double d = s.effects(family)[mask] - mean;
      var += d * d;
    }
    var /= k;
    total += std::abs(mean) / std::sqrt(std::max(var, kVarianceFloor));
  }
  return total / static_cast<double>(omega.size());
}

double NoiseRatio(std::span<const double> x, std::span<const double> x_noisy,
                  SubsetMask s, const MaskingSpec& spec) {
  if (x.size() != x_noisy.size() || x.size() != spec.input_dim()) {
    throw Error(ErrorKind::kDimension,
                "noise ratio inputs must match the masking spec dimension");
  }
  if (s.n() != spec.n()) {
    throw Error(ErrorKind::kDimension, "mask and masking spec disagree on n");
  }
  double signal = 0.0;
  double noise = 0.0;
  for (int i = 0; i < spec.n(); ++i) {
    if (!s.Contains(i)) continue;
    for (std::size_t d : spec.variables[i].dims) {
      signal += x[d] * x[d];
      noise += (x[d] - x_noisy[d]) * (x[d] - x_noisy[d]);
    }
  }
  if (signal == 0.0) {
    throw Error(ErrorKind::kDomain, "pattern has zero signal in the input");
  }
  return std::sqrt(noise / signal);
}

}  // namespace andor
