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

#ifndef ANDOR_SPECTRUM_H_
#define ANDOR_SPECTRUM_H_

// AND / OR interaction spectra of a value function over masked inputs.
//
// Given the AND-part v_and and OR-part v_or of a value table,
//
//   I_and(S) = sum_{T subset of S} (-1)^{|S|-|T|} v_and(T)
//   I_or(S)  = -sum_{T subset of S} (-1)^{|S|-|T|} v_or(N \ T),   S != {}
//
// and every masked output is recovered as
//
//   v_and(T) + v_or(T) = sum_{S subset of T} I_and(S)
//                      + sum_{S meets T} I_or(S)
//
// whenever v_or({}) = 0.

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "andor/lattice.h"

namespace andor {

enum class Family { kAnd, kOr };

std::string_view FamilyName(Family family);

struct InteractionSpectrum {
  LatticeArray and_effects;
  LatticeArray or_effects;

  int n() const { return and_effects.n(); }
  const LatticeArray& effects(Family family) const {
    return family == Family::kAnd ? and_effects : or_effects;
  }
};

// Moebius transform of the AND component.
LatticeArray AndInteractions(const LatticeArray& v_and);

// OR effects of the OR component. Entry 0 carries v_or({}) so that a
// decomposition violating v_or({}) = 0 is visible in the spectrum.
LatticeArray OrInteractions(const LatticeArray& v_or);

InteractionSpectrum ComputeSpectrum(const LatticeArray& v_and,
                                    const LatticeArray& v_or);

// sum_{S subset of T} I_and(S) + sum_{S meets T} I_or(S) for one mask.
double Reconstruct(const InteractionSpectrum& spectrum, SubsetMask mask);

// Reconstruct() for every mask at once, O(n 2^n).
LatticeArray ReconstructAll(const InteractionSpectrum& spectrum);

// Sum of all AND effects and all non-empty OR effects, i.e. the
// reconstruction at the full mask.
double TotalEffect(const InteractionSpectrum& spectrum);

struct RetainedEffect {
  std::uint32_t mask;
  Family family;
  double effect;
};

struct SparseApproximation {
  // Non-empty masks with |effect| > threshold, AND family first, each family
  // in increasing mask order.
  std::vector<RetainedEffect> retained;
  double threshold = 0.0;
  // |full reconstruction - reconstruction from I_and({}) and retained terms|
  // per mask.
  std::vector<double> error;
  double max_error = 0.0;
  double mean_error = 0.0;
};

// Keeps the salient terms of the spectrum and measures how well they alone
// match every masked output. The empty-set AND term is always kept. Throws
// kDomain for negative or NaN thresholds; +infinity drops every term.
SparseApproximation SparseMatch(const InteractionSpectrum& spectrum,
                                double threshold);

// Shapley values as the uniform re-allocation of each interaction to its
// members: phi(i) = sum_{S containing i} (I_and(S) + I_or(S)) / |S|.
std::vector<double> ShapleyValues(const InteractionSpectrum& spectrum);

inline constexpr int kMaxShapleyDirectVariables = 14;

// Classical Shapley values of the game `v` by exact enumeration with the
// |S|!(n-|S|-1)!/n! weights. This is the cross-check oracle for
// ShapleyValues; throws kInvalidArgument above kMaxShapleyDirectVariables.
std::vector<double> ShapleyDirect(const LatticeArray& v);

// Folds every first-order OR effect into the first-order AND effect of the
// same variable. A singleton is active under the same masks in both
// families, so reconstruction is unchanged.
InteractionSpectrum MergeFirstOrder(InteractionSpectrum spectrum);

}  // namespace andor

#endif  // ANDOR_SPECTRUM_H_
