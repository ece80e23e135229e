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

#include "andor/planted.h"

#include <bit>
#include <random>
#include <string>

#include "andor/error.h"

namespace andor {

ValueTable PlantedTable(int n, std::span<const PlantedTerm> terms,
                        double noise_amplitude, std::uint64_t seed) {
  if (!(noise_amplitude >= 0.0)) {
    throw Error(ErrorKind::kDomain, "noise amplitude must be >= 0");
  }
  const std::uint32_t full = FullBits(n);
  LatticeArray and_terms(n);
  // [mask meets T] = 1 - [T subset of N \ mask]; the second part is a
  // superset sum over the complements.
  LatticeArray or_complements(n);
  double or_total = 0.0;
  for (const PlantedTerm& term : terms) {
    if (term.mask == 0 || term.mask > full) {
      throw Error(ErrorKind::kInvalidArgument,
                  "planted mask " + std::to_string(term.mask) +
                      " is empty or out of range for n=" + std::to_string(n));
    }
    if (term.family == Family::kAnd) {
      and_terms[term.mask] += term.coefficient;
    } else {
      or_complements[full ^ term.mask] += term.coefficient;
      or_total += term.coefficient;
    }
  }
  LatticeArray values = ZetaTransform(and_terms);
  const LatticeArray inactive = SupersetZetaTransform(or_complements);
  for (std::size_t t = 0; t < values.size(); ++t) {
    values[t] += or_total - inactive[t];
  }
  if (noise_amplitude > 0.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> noise(-noise_amplitude,
                                                 noise_amplitude);
    for (double& v : values.mutable_values()) v += noise(rng);
  }
  return ValueTable{std::move(values), "planted", {}};
}

double PlantedValue(std::span<const PlantedTerm> terms, std::uint32_t mask) {
  double value = 0.0;
  for (const PlantedTerm& term : terms) {
    const bool active = term.family == Family::kAnd
                            ? (term.mask & mask) == term.mask
                            : (term.mask & mask) != 0;
    if (active) value += term.coefficient;
  }
  return value;
}

std::vector<PlantedTerm> RandomAntichainTerms(int n, int k,
                                              std::uint64_t seed) {
  if (n < 4 || n > kMaxVariables || k < 0) {
    throw Error(ErrorKind::kInvalidArgument,
                "antichain terms need 4 <= n <= 24 and k >= 0");
  }
  constexpr int kMaxAttempts = 1 << 20;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<PlantedTerm> terms;
  for (int attempt = 0; static_cast<int>(terms.size()) < k; ++attempt) {
    if (attempt == kMaxAttempts) {
      throw Error(ErrorKind::kDomain, "no antichain of " + std::to_string(k) +
                                          " masks found for n=" +
                                          std::to_string(n));
    }
    const std::uint32_t mask = static_cast<std::uint32_t>(rng()) & FullBits(n);
    const int order = std::popcount(mask);
    if (order < 2 || order > n / 2) continue;
    const Family family = (rng() & 1) ? Family::kAnd : Family::kOr;
    bool nested = false;
    for (const PlantedTerm& term : terms) {
      const std::uint32_t common = term.mask & mask;
      if (common == term.mask || common == mask) nested = true;
    }
    if (nested) continue;
    const double magnitude = 0.5 + 0.5 * unit(rng);
    const double sign = (rng() & 1) ? 1.0 : -1.0;
    terms.push_back({mask, family, magnitude * sign});
  }
  return terms;
}

Dataset PlantedDataset(int n, std::span<const PlantedTerm> terms, int count,
                       double jitter, std::uint64_t seed) {
  if (n < 1 || n > kMaxVariables || count < 0 || !(jitter >= 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "invalid planted dataset request");
  }
  double mean = 0.0;
  const std::uint32_t full = FullBits(n);
  for (std::uint32_t mask = 0; mask <= full; ++mask) {
    mean += PlantedValue(terms, mask);
    if (mask == full) break;
  }
  mean /= static_cast<double>(LatticeSize(n));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  Dataset data;
  for (int r = 0; r < count; ++r) {
    const std::uint32_t z = static_cast<std::uint32_t>(rng()) & full;
    std::vector<double> x(n);
    for (int i = 0; i < n; ++i) {
      x[i] = ((z >> i) & 1u) + jitter * noise(rng);
    }
    data.inputs.push_back(std::move(x));
    data.labels.push_back(PlantedValue(terms, z) > mean ? 1 : 0);
  }
  return data;
}

}  // namespace andor
