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

#ifndef ANDOR_METRICS_H_
#define ANDOR_METRICS_H_

// Layer-wise tracking metrics: salient interaction selection, per-order
// strength, overlap / forget / new, completeness, redundancy, IoU across
// models, stability under input noise and the noise ratio of a pattern.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "andor/lattice.h"
#include "andor/masking.h"
#include "andor/spectrum.h"

namespace andor {

using MaskSet = std::vector<std::uint32_t>;  // sorted, unique

// Salient masks of one spectrum bucketed by order (index 0..n; order 0 is
// always empty).
struct SalientIndex {
  int n = 0;
  double tau = 0.0;
  std::string layer;
  std::vector<MaskSet> and_sets;
  std::vector<MaskSet> or_sets;

  const MaskSet& set(Family family, int order) const {
    return family == Family::kAnd ? and_sets[order] : or_sets[order];
  }
  bool Contains(Family family, std::uint32_t mask) const;
  std::size_t size() const;
};

// max over S != {} of |I_and(S)| and |I_or(S)|.
double MaxEffectMagnitude(const InteractionSpectrum& spectrum);

// tau = tau_ratio * MaxEffectMagnitude(spectrum). Throws kDomain unless
// tau_ratio > 0. An all-zero spectrum gives an empty index with tau = 0.
SalientIndex SelectSalient(const InteractionSpectrum& spectrum,
                           double tau_ratio, std::string layer = "");

// Masks with |effect| strictly above the given absolute threshold.
SalientIndex SelectSalientAbove(const InteractionSpectrum& spectrum,
                                double tau, std::string layer = "");

// Every effect divided by scale. Throws kDomain unless scale > 0.
InteractionSpectrum Normalize(const InteractionSpectrum& spectrum,
                              double scale);

// all^m = sum over salient S of order m of |I(S)|, indexed by order.
std::vector<double> OrderStrength(const SalientIndex& index,
                                  const InteractionSpectrum& spectrum,
                                  Family family);

// 0 if a * b <= 0, else sign(a) * min(|a|, |b|).
double SharedEffect(double a, double b);

struct TrackCell {
  double all_layer = 0.0;
  double all_final = 0.0;
  double overlap = 0.0;
  double forget = 0.0;
  double fresh = 0.0;  // the "new" strength
};

// cells[family][order]
struct TrackTable {
  int n = 0;
  std::array<std::vector<TrackCell>, 2> cells;

  const TrackCell& cell(Family family, int order) const {
    return cells[static_cast<int>(family)][order];
  }
  TrackCell& cell(Family family, int order) {
    return cells[static_cast<int>(family)][order];
  }
};

// Compares a layer with the final layer. Non-salient effects count as 0 on
// both sides. Throws kDimension when n differs.
TrackTable Track(const InteractionSpectrum& layer,
                 const SalientIndex& layer_index,
                 const InteractionSpectrum& final_layer,
                 const SalientIndex& final_index);

// Element-wise mean of tables over samples. Throws kInvalidArgument on an
// empty list and kDimension on mixed n.
TrackTable MeanTrack(std::span<const TrackTable> tables);

// Largest violation of overlap + forget = all_layer and
// overlap + new = all_final, relative to max(1, all).
double IdentityError(const TrackTable& table);

struct Ratios {
  std::optional<double> completeness;  // overlap / all_final
  std::optional<double> redundancy;    // forget / all_layer
};
Ratios CompletenessRedundancy(const TrackCell& cell);

// |A & B| / |A | B|, absent when both are empty.
std::optional<double> Iou(const MaskSet& a, const MaskSet& b);

inline constexpr double kVarianceFloor = 1e-12;

// Mean over S in omega of |mean_k I_k(S)| / sqrt(max(Var_k I_k(S), 1e-12))
// with the population variance over the K spectra. Absent for an empty
// omega; throws kEnsemble when K < 2.
std::optional<double> Stability(std::span<const InteractionSpectrum> ensemble,
                                const MaskSet& omega, Family family);

// |x^S - x_noisy^S| / |x^S| over the raw dimensions owned by S. Throws
// kDomain when x^S is zero and kDimension on size mismatches.
double NoiseRatio(std::span<const double> x, std::span<const double> x_noisy,
                  SubsetMask s, const MaskingSpec& spec);

}  // namespace andor

#endif  // ANDOR_METRICS_H_
