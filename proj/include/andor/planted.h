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

#ifndef ANDOR_PLANTED_H_
#define ANDOR_PLANTED_H_

// Synthetic value tables with known interaction structure.

#include <cstdint>
#include <span>
#include <vector>

#include "andor/spectrum.h"
#include "andor/toy_model.h"
#include "andor/value_table.h"

namespace andor {

struct PlantedTerm {
  std::uint32_t mask;
  Family family;
  double coefficient;
};

// v(T) = sum_AND c * [mask subset of T] + sum_OR c * [mask meets T]
//        + uniform(-noise, noise) per entry (seeded).
// Throws kInvalidArgument on empty or out-of-range masks.
ValueTable PlantedTable(int n, std::span<const PlantedTerm> terms,
                        double noise_amplitude, std::uint64_t seed);

// Noise-free planted value at one mask.
double PlantedValue(std::span<const PlantedTerm> terms, std::uint32_t mask);

// k terms on distinct masks of order 2..n/2, no mask containing another,
// random family, |c| in [0.5, 1] with random sign. Throws kInvalidArgument
// when n < 4 or k < 0, and kDomain when no such family is found.
std::vector<PlantedTerm> RandomAntichainTerms(int n, int k,
                                              std::uint64_t seed);

// Inputs x_i = z_i + N(0, jitter^2) for uniform random presence bits z, with
// label 1 iff PlantedValue(terms, z) exceeds its mean over all 2^n masks.
// Masking a variable to baseline 0 corresponds to z_i = 0.
Dataset PlantedDataset(int n, std::span<const PlantedTerm> terms, int count,
                       double jitter, std::uint64_t seed);

}  // namespace andor

#endif  // ANDOR_PLANTED_H_
