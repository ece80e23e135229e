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

#include "andor/lattice.h"

#include <cmath>
#include <string>
#include <utility>

#include "andor/error.h"

namespace andor {
namespace {

void CheckVariableCount(int n) {
  if (n < 1 || n > kMaxVariables) {
    throw Error(ErrorKind::kInvalidArgument,
                "variable count must be in [1, " +
                    std::to_string(kMaxVariables) + "], got " +
                    std::to_string(n));
  }
}

// Index of the j-th pair partner without `bit`: inserts a zero at position
// `shift` of j.
inline std::size_t LowIndex(std::size_t j, int shift) {
  const std::size_t low = j & ((std::size_t{1} << shift) - 1);
  return ((j >> shift) << (shift + 1)) | low;
}

enum class Direction { kSubset, kSuperset };

// One pass per bit. For kSubset the element with the bit set is updated from
// its partner without the bit; kSuperset is the mirror image. `sign` is +1 for
// sums and -1 for differences.
template <Direction kDir>
void ParallelSweep(std::span<double> values, int n, double sign) {
  const std::size_t half = values.size() / 2;
  const bool parallel = values.size() >= kernels::kParallelThreshold;
  double* data = values.data();
  for (int bit = 0; bit < n; ++bit) {
    const std::size_t stride = std::size_t{1} << bit;
#pragma omp parallel for schedule(static) if (parallel)
    for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(half); ++j) {
      const std::size_t lo = LowIndex(static_cast<std::size_t>(j), bit);
      const std::size_t hi = lo | stride;
      if constexpr (kDir == Direction::kSubset) {
        data[hi] += sign * data[lo];
      } else {
        data[lo] += sign * data[hi];
      }
    }
  }
}

template <Direction kDir>
void SerialSweep(std::span<double> values, int n, double sign) {
  const std::size_t size = values.size();
  for (int bit = 0; bit < n; ++bit) {
    const std::size_t stride = std::size_t{1} << bit;
    for (std::size_t mask = 0; mask < size; ++mask) {
      if ((mask & stride) == 0) continue;
      if constexpr (kDir == Direction::kSubset) {
        values[mask] += sign * values[mask ^ stride];
      } else {
        values[mask ^ stride] += sign * values[mask];
      }
    }
  }
}

template <typename Sweep>
LatticeArray Transformed(const LatticeArray& a, Sweep sweep) {
  LatticeArray out = a;
  sweep(out.mutable_values(), out.n());
  return out;
}

}  // namespace

SubsetMask::SubsetMask(std::uint32_t bits, int n) : bits_(bits), n_(n) {
  CheckVariableCount(n);
  if (bits > FullBits(n)) {
    throw Error(ErrorKind::kInvalidArgument,
                "mask " + std::to_string(bits) + " out of range for n=" +
                    std::to_string(n));
  }
}

SubsetMask SubsetMask::Full(int n) {
  CheckVariableCount(n);
  return SubsetMask(FullBits(n), n);
}

SubsetMask SubsetMask::Of(std::initializer_list<int> variables, int n) {
  std::uint32_t bits = 0;
  for (int v : variables) {
    if (v < 0 || v >= n) {
      throw Error(ErrorKind::kInvalidArgument,
                  "variable " + std::to_string(v) + " out of range");
    }
    bits |= 1u << v;
  }
  return SubsetMask(bits, n);
}

SubsetMask SubsetMask::Complement() const {
  return SubsetMask(~bits_ & FullBits(n_), n_);
}

LatticeArray::LatticeArray(int n) : n_(n) {
  CheckVariableCount(n);
  values_.assign(LatticeSize(n), 0.0);
}

LatticeArray::LatticeArray(int n, std::vector<double> values)
    : n_(n), values_(std::move(values)) {
  CheckVariableCount(n);
  if (values_.size() != LatticeSize(n)) {
    throw Error(ErrorKind::kSchema,
                "expected " + std::to_string(LatticeSize(n)) +
                    " values for n=" + std::to_string(n) + ", found " +
                    std::to_string(values_.size()));
  }
  CheckFinite();
}

void LatticeArray::CheckFinite() const {
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw Error(ErrorKind::kDomain,
                  "non-finite lattice value at mask " + std::to_string(i));
    }
  }
}

namespace kernels {

void SubsetSumInPlace(std::span<double> values, int n) {
  ParallelSweep<Direction::kSubset>(values, n, 1.0);
}
void SubsetDifferenceInPlace(std::span<double> values, int n) {
  ParallelSweep<Direction::kSubset>(values, n, -1.0);
}
void SupersetSumInPlace(std::span<double> values, int n) {
  ParallelSweep<Direction::kSuperset>(values, n, 1.0);
}
void SupersetDifferenceInPlace(std::span<double> values, int n) {
  ParallelSweep<Direction::kSuperset>(values, n, -1.0);
}

}  // namespace kernels

namespace serial {

void SubsetSumInPlace(std::span<double> values, int n) {
  SerialSweep<Direction::kSubset>(values, n, 1.0);
}
void SubsetDifferenceInPlace(std::span<double> values, int n) {
  SerialSweep<Direction::kSubset>(values, n, -1.0);
}
void SupersetSumInPlace(std::span<double> values, int n) {
  SerialSweep<Direction::kSuperset>(values, n, 1.0);
}
void SupersetDifferenceInPlace(std::span<double> values, int n) {
  SerialSweep<Direction::kSuperset>(values, n, -1.0);
}

LatticeArray ZetaTransform(const LatticeArray& a) {
  return Transformed(a, serial::SubsetSumInPlace);
}
LatticeArray MoebiusTransform(const LatticeArray& v) {
  return Transformed(v, serial::SubsetDifferenceInPlace);
}

}  // namespace serial

LatticeArray ZetaTransform(const LatticeArray& a) {
  return Transformed(a, kernels::SubsetSumInPlace);
}

LatticeArray MoebiusTransform(const LatticeArray& v) {
  return Transformed(v, kernels::SubsetDifferenceInPlace);
}

LatticeArray SupersetZetaTransform(const LatticeArray& a) {
  return Transformed(a, kernels::SupersetSumInPlace);
}

LatticeArray SupersetMoebiusTransform(const LatticeArray& a) {
  return Transformed(a, kernels::SupersetDifferenceInPlace);
}

LatticeArray ReverseTable(const LatticeArray& v) {
  const std::uint32_t full = FullBits(v.n());
  std::vector<double> out(v.size());
  for (std::size_t mask = 0; mask < v.size(); ++mask) {
    out[mask] = v[full ^ static_cast<std::uint32_t>(mask)];
  }
  return LatticeArray(v.n(), std::move(out));
}

}  // namespace andor
