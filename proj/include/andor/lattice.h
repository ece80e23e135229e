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

#ifndef ANDOR_LATTICE_H_
#define ANDOR_LATTICE_H_

// Subsets of N = {0, ..., n-1} as bitmasks and the fast transforms over the
// 2^n subset lattice.
//
// Bit i of a mask is set iff variable i is present (unmasked). Index 0 is the
// fully masked sample, index 2^n - 1 the original input.

#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace andor {

inline constexpr int kMaxVariables = 24;

class SubsetMask {
 public:
  // Throws kInvalidArgument unless 1 <= n <= kMaxVariables and bits < 2^n.
  SubsetMask(std::uint32_t bits, int n);

  static SubsetMask Empty(int n) { return SubsetMask(0, n); }
  static SubsetMask Full(int n);
  static SubsetMask Of(std::initializer_list<int> variables, int n);

  std::uint32_t bits() const { return bits_; }
  int n() const { return n_; }
  int order() const { return std::popcount(bits_); }
  bool Contains(int variable) const { return (bits_ >> variable) & 1u; }
  bool IsSubsetOf(SubsetMask other) const {
    return (bits_ & ~other.bits_) == 0;
  }
  bool Intersects(SubsetMask other) const { return (bits_ & other.bits_) != 0; }
  SubsetMask Complement() const;

  friend bool operator==(SubsetMask a, SubsetMask b) = default;

 private:
  std::uint32_t bits_;
  int n_;
};

inline std::uint32_t FullBits(int n) {
  return static_cast<std::uint32_t>((std::uint64_t{1} << n) - 1);
}

inline std::size_t LatticeSize(int n) { return std::size_t{1} << n; }

// A real-valued function on the subsets of N, stored densely by mask.
class LatticeArray {
 public:
  // The lattice of the empty ground set: a single zero entry.
  LatticeArray() : n_(0), values_(1, 0.0) {}
  // All-zero array. Throws kInvalidArgument on n outside [1, kMaxVariables].
  explicit LatticeArray(int n);
  // Throws kSchema if values.size() != 2^n and kDomain on non-finite values.
  LatticeArray(int n, std::vector<double> values);

  int n() const { return n_; }
  std::size_t size() const { return values_.size(); }

  double operator[](std::size_t mask) const { return values_[mask]; }
  double& operator[](std::size_t mask) { return values_[mask]; }
  double operator[](SubsetMask mask) const { return values_[mask.bits()]; }
  double& operator[](SubsetMask mask) { return values_[mask.bits()]; }

  std::span<const double> values() const { return values_; }
  std::span<double> mutable_values() { return values_; }

  double empty_value() const { return values_.front(); }
  double full_value() const { return values_.back(); }

  // Throws kDomain if any entry is NaN or infinite.
  void CheckFinite() const;

  friend bool operator==(const LatticeArray&, const LatticeArray&) = default;

 private:
  int n_;
  std::vector<double> values_;
};

// out[T] = sum_{S subset of T} a[S].
LatticeArray ZetaTransform(const LatticeArray& a);
// out[S] = sum_{T subset of S} (-1)^{|S|-|T|} v[T]; inverse of ZetaTransform.
LatticeArray MoebiusTransform(const LatticeArray& v);
// out[T] = sum_{S superset of T} a[S].
LatticeArray SupersetZetaTransform(const LatticeArray& a);
// out[T] = sum_{S superset of T} (-1)^{|S|-|T|} a[S]; this is the adjoint of
// MoebiusTransform.
LatticeArray SupersetMoebiusTransform(const LatticeArray& a);
// out[T] = v[N \ T].
LatticeArray ReverseTable(const LatticeArray& v);

// In-place per-bit sweeps. Stages over the 2^(n-1) index pairs of each bit are
// split across OpenMP threads once the table is large enough; every element is
// written by exactly one thread from values fixed at stage entry, so results
// are bit-identical for any thread count.
namespace kernels {

void SubsetSumInPlace(std::span<double> values, int n);
void SubsetDifferenceInPlace(std::span<double> values, int n);
void SupersetSumInPlace(std::span<double> values, int n);
void SupersetDifferenceInPlace(std::span<double> values, int n);

// Tables below this size run the sweeps on the calling thread.
inline constexpr std::size_t kParallelThreshold = std::size_t{1} << 14;

}  // namespace kernels

// Single-threaded reference sweeps, kept for testing and benchmarking against
// the parallel kernels.
namespace serial {

void SubsetSumInPlace(std::span<double> values, int n);
void SubsetDifferenceInPlace(std::span<double> values, int n);
void SupersetSumInPlace(std::span<double> values, int n);
void SupersetDifferenceInPlace(std::span<double> values, int n);

LatticeArray ZetaTransform(const LatticeArray& a);
LatticeArray MoebiusTransform(const LatticeArray& v);

}  // namespace serial

}  // namespace andor

#endif  // ANDOR_LATTICE_H_
