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

#include "andor/spectrum.h"

#include <bit>
#include <cmath>
#include <string>
#include <utility>

#include "andor/error.h"

namespace andor {
namespace {

void CheckSameSize(const LatticeArray& a, const LatticeArray& b) {
  if (a.n() != b.n()) {
    throw Error(ErrorKind::kDimension,
                "lattice sizes differ: n=" + std::to_string(a.n()) +
                    " vs n=" + std::to_string(b.n()));
  }
}

// sum over non-empty S meeting T of or_effects[S], for every T. Uses
// sum_{S meets T} = total - sum_{S subset of N\T}.
LatticeArray OrActivations(const LatticeArray& or_effects) {
  LatticeArray nonempty = or_effects;
  nonempty[0] = 0.0;
  double total = 0.0;
  for (double e : nonempty.values()) total += e;
  const LatticeArray inside = ZetaTransform(nonempty);
  const std::uint32_t full = FullBits(or_effects.n());
  LatticeArray out(or_effects.n());
  for (std::size_t t = 0; t < out.size(); ++t) {
    out[t] = total - inside[full ^ static_cast<std::uint32_t>(t)];
  }
  return out;
}

}  // namespace

std::string_view FamilyName(Family family) {
  return family == Family::kAnd ? "and" : "or";
}

LatticeArray AndInteractions(const LatticeArray& v_and) {
  return MoebiusTransform(v_and);
}

LatticeArray OrInteractions(const LatticeArray& v_or) {
  LatticeArray out = MoebiusTransform(ReverseTable(v_or));
  for (double& e : out.mutable_values()) e = -e;
  out[0] = v_or[0];
  return out;
}

InteractionSpectrum ComputeSpectrum(const LatticeArray& v_and,
                                    const LatticeArray& v_or) {
  CheckSameSize(v_and, v_or);
  return {AndInteractions(v_and), OrInteractions(v_or)};
}

double Reconstruct(const InteractionSpectrum& spectrum, SubsetMask mask) {
  if (mask.n() != spectrum.n()) {
    throw Error(ErrorKind::kDimension, "mask and spectrum sizes differ");
  }
  const std::uint32_t t = mask.bits();
  double and_sum = 0.0;
  // Enumerate the subsets of t, including t itself and the empty set.
  for (std::uint32_t s = t;; s = (s - 1) & t) {
    and_sum += spectrum.and_effects[s];
    if (s == 0) break;
  }
  double or_sum = 0.0;
  for (std::size_t s = 1; s < spectrum.or_effects.size(); ++s) {
    if ((s & t) != 0) or_sum += spectrum.or_effects[s];
  }
  return and_sum + or_sum;
}

LatticeArray ReconstructAll(const InteractionSpectrum& spectrum) {
  LatticeArray out = ZetaTransform(spectrum.and_effects);
  const LatticeArray ors = OrActivations(spectrum.or_effects);
  for (std::size_t t = 0; t < out.size(); ++t) out[t] += ors[t];
  return out;
}

double TotalEffect(const InteractionSpectrum& spectrum) {
  double total = 0.0;
  for (double e : spectrum.and_effects.values()) total += e;
  for (std::size_t s = 1; s < spectrum.or_effects.size(); ++s) {
    total += spectrum.or_effects[s];
  }
  return total;
}

SparseApproximation SparseMatch(const InteractionSpectrum& spectrum,
                                double threshold) {
  if (!(threshold >= 0.0)) {
    throw Error(ErrorKind::kDomain, "threshold must be >= 0");
  }
  const int n = spectrum.n();
  SparseApproximation result;
  result.threshold = threshold;

  InteractionSpectrum kept{LatticeArray(n), LatticeArray(n)};
  kept.and_effects[0] = spectrum.and_effects[0];
  for (Family family : {Family::kAnd, Family::kOr}) {
    const LatticeArray& effects = spectrum.effects(family);
    LatticeArray& target =
        family == Family::kAnd ? kept.and_effects : kept.or_effects;
    for (std::size_t s = 1; s < effects.size(); ++s) {
      if (std::abs(effects[s]) > threshold) {
        target[s] = effects[s];
        result.retained.push_back(
            {static_cast<std::uint32_t>(s), family, effects[s]});
      }
    }
  }

  const LatticeArray full = ReconstructAll(spectrum);
  const LatticeArray sparse = ReconstructAll(kept);
  result.error.resize(full.size());
  double sum = 0.0;
  for (std::size_t t = 0; t < full.size(); ++t) {
    const double e = std::abs(full[t] - sparse[t]);
    result.error[t] = e;
    result.max_error = std::max(result.max_error, e);
    sum += e;
  }
  result.mean_error = sum / static_cast<double>(full.size());
  return result;
}

std::vector<double> ShapleyValues(const InteractionSpectrum& spectrum) {
  const int n = spectrum.n();
  std::vector<double> phi(n, 0.0);
  for (std::size_t s = 1; s < spectrum.and_effects.size(); ++s) {
    const double share =
        (spectrum.and_effects[s] + spectrum.or_effects[s]) /
        std::popcount(static_cast<std::uint32_t>(s));
    for (int i = 0; i < n; ++i) {
      if ((s >> i) & 1u) phi[i] += share;
    }
  }
  return phi;
}

std::vector<double> ShapleyDirect(const LatticeArray& v) {
  const int n = v.n();
  if (n > kMaxShapleyDirectVariables) {
    throw Error(ErrorKind::kInvalidArgument,
                "direct Shapley enumeration is limited to n <= " +
                    std::to_string(kMaxShapleyDirectVariables));
  }
  // weight[k] = k! (n-k-1)! / n!; all factorials up to 14! are exact doubles.
  std::vector<double> factorial(n + 1, 1.0);
  for (int k = 1; k <= n; ++k) factorial[k] = factorial[k - 1] * k;
  std::vector<double> weight(n);
  for (int k = 0; k < n; ++k) {
    weight[k] = factorial[k] * factorial[n - k - 1] / factorial[n];
  }
  std::vector<double> phi(n, 0.0);
  for (int i = 0; i < n; ++i) {
    const std::uint32_t bit = 1u << i;
    for (std::size_t s = 0; s < v.size(); ++s) {
      if (s & bit) continue;
      const int k = std::popcount(static_cast<std::uint32_t>(s));
      phi[i] += weight[k] * (v[s | bit] - v[s]);
    }
  }
  return phi;
}

InteractionSpectrum MergeFirstOrder(InteractionSpectrum spectrum) {
  for (int i = 0; i < spectrum.n(); ++i) {
    const std::size_t s = std::size_t{1} << i;
    spectrum.and_effects[s] += spectrum.or_effects[s];
    spectrum.or_effects[s] = 0.0;
  }
  return spectrum;
}

}  // namespace andor
