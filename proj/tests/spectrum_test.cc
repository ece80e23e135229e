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

#include <cmath>
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include "andor/error.h"
#include "andor/planted.h"
#include "oracles.h"

namespace andor {
namespace {

using testing::LiteralMoebius;
using testing::LiteralOr;
using testing::LiteralReconstruct;
using testing::MaxAbsDiff;
using testing::PermutationShapley;
using testing::RandomValues;
using testing::WeightedShapley;

std::vector<double> ToVector(const LatticeArray& a) {
  return {a.values().begin(), a.values().end()};
}

LatticeArray Make(int n, std::vector<double> values) {
  return LatticeArray(n, std::move(values));
}

InteractionSpectrum AndOnly(const LatticeArray& v) {
  return ComputeSpectrum(v, LatticeArray(v.n()));
}

TEST(AndInteractionsTest, TwoVariableExample) {
  const std::vector<double> v = {0, 1, 2, 5};
  EXPECT_EQ(ToVector(AndInteractions(Make(2, v))), LiteralMoebius(v, 2));
  EXPECT_EQ(ToVector(AndInteractions(Make(2, v))),
            (std::vector<double>{0, 1, 2, 2}));
}

TEST(AndInteractionsTest, AdditiveTableIsFirstOrder) {
  const LatticeArray out = AndInteractions(Make(2, {0, 1, 2, 3}));
  EXPECT_EQ(out[0b01], 1.0);
  EXPECT_EQ(out[0b10], 2.0);
  EXPECT_EQ(out[0b11], 0.0);
}

TEST(AndInteractionsTest, PlantedAndIndicator) {
  std::vector<double> v(8, 0.0);
  for (std::uint32_t t = 0; t < 8; ++t) v[t] = (t & 0b011) == 0b011 ? 1.0 : 0.0;
  const LatticeArray out = AndInteractions(Make(3, v));
  EXPECT_EQ(ToVector(out), LiteralMoebius(v, 3));
  for (std::uint32_t s = 0; s < 8; ++s) EXPECT_EQ(out[s], s == 0b011 ? 1.0 : 0.0);
}

TEST(OrInteractionsTest, TwoVariableExample) {
  const std::vector<double> v = {0, 1, 2, 5};
  const LatticeArray out = OrInteractions(Make(2, v));
  EXPECT_EQ(LiteralOr(v, 2)[0b01], 3.0);
  EXPECT_EQ(out[0b01], 3.0);
  EXPECT_EQ(ToVector(out), LiteralOr(v, 2));
}

TEST(OrInteractionsTest, EmptyEntryCarriesEmptyValue) {
  EXPECT_EQ(OrInteractions(Make(2, {0.25, 1, 2, 5}))[0], 0.25);
}

TEST(OrInteractionsTest, PlantedOrIndicator) {
  std::vector<double> v(8, 0.0);
  for (std::uint32_t t = 0; t < 8; ++t) v[t] = (t & 0b011) != 0 ? 1.0 : 0.0;
  const LatticeArray out = OrInteractions(Make(3, v));
  EXPECT_LT(MaxAbsDiff(ToVector(out), LiteralOr(v, 3)), 1e-15);
  for (std::uint32_t s = 1; s < 8; ++s) {
    if (std::popcount(s) == 2) {
      EXPECT_EQ(out[s], s == 0b011 ? 1.0 : 0.0);
    }
  }
}

TEST(OrInteractionsTest, MatchesLiteralSumsOnRandomTables) {
  for (int n = 1; n <= 9; ++n) {
    const std::vector<double> v = RandomValues(n, 40 + n);
    EXPECT_LT(MaxAbsDiff(ToVector(OrInteractions(Make(n, v))), LiteralOr(v, n)),
              1e-10);
  }
}

TEST(DualityTest, OrIsNegatedAndOfReversedTable) {
  for (int k = 0; k < 50; ++k) {
    const int n = 1 + k % 12;
    const LatticeArray v = Make(n, RandomValues(n, 500 + k, 5.0));
    const LatticeArray lhs = OrInteractions(v);
    const LatticeArray rhs = AndInteractions(ReverseTable(v));
    for (std::size_t s = 1; s < v.size(); ++s) {
      ASSERT_NEAR(lhs[s], -rhs[s], 1e-10) << "n=" << n << " S=" << s;
    }
  }
}

TEST(ReconstructTest, EmptyAndFullMasks) {
  const int n = 5;
  LatticeArray v_or = Make(n, RandomValues(n, 3));
  v_or[0] = 0.0;
  const InteractionSpectrum spectrum =
      ComputeSpectrum(Make(n, RandomValues(n, 2)), v_or);
  EXPECT_EQ(Reconstruct(spectrum, SubsetMask::Empty(n)),
            spectrum.and_effects[0]);
  EXPECT_NEAR(Reconstruct(spectrum, SubsetMask::Full(n)),
              TotalEffect(spectrum), 1e-12);
}

TEST(ReconstructTest, MatchesBothComponentsOnAllMasks) {
  const int n = 8;
  const LatticeArray v_and = Make(n, RandomValues(n, 11));
  LatticeArray v_or = Make(n, RandomValues(n, 12));
  v_or[0] = 0.0;
  const InteractionSpectrum spectrum = ComputeSpectrum(v_and, v_or);
  const LatticeArray all = ReconstructAll(spectrum);
  const std::vector<double> a = ToVector(spectrum.and_effects);
  const std::vector<double> o = ToVector(spectrum.or_effects);
  for (std::uint32_t t = 0; t < v_and.size(); ++t) {
    const double expected = v_and[t] + v_or[t];
    ASSERT_NEAR(Reconstruct(spectrum, SubsetMask(t, n)), expected, 1e-10);
    ASSERT_NEAR(all[t], expected, 1e-10);
    ASSERT_NEAR(LiteralReconstruct(a, o, n, t), expected, 1e-10);
  }
}

TEST(ReconstructTest, ExactOnRandomSplitsUpToTwelveVariables) {
  for (int k = 0; k < 50; ++k) {
    const int n = 4 + k % 9;
    const LatticeArray v_and = Make(n, RandomValues(n, 900 + k, 3.0));
    LatticeArray v_or = Make(n, RandomValues(n, 1900 + k, 3.0));
    v_or[0] = 0.0;
    const LatticeArray all = ReconstructAll(ComputeSpectrum(v_and, v_or));
    for (std::size_t t = 0; t < all.size(); ++t) {
      const double expected = v_and[t] + v_or[t];
      ASSERT_LE(std::abs(all[t] - expected), 1e-8 * std::max(1.0, std::abs(expected)));
    }
  }
}

TEST(SparseMatchTest, ZeroThresholdKeepsEverything) {
  const int n = 4;
  const InteractionSpectrum spectrum = AndOnly(Make(n, RandomValues(n, 8)));
  const SparseApproximation approx = SparseMatch(spectrum, 0.0);
  EXPECT_EQ(approx.retained.size(), LatticeSize(n) - 1);
  EXPECT_LT(approx.max_error, 1e-12);
}

TEST(SparseMatchTest, InfiniteThresholdKeepsOnlyEmptyTerm) {
  const int n = 4;
  const LatticeArray v = Make(n, RandomValues(n, 9));
  const SparseApproximation approx =
      SparseMatch(AndOnly(v), std::numeric_limits<double>::infinity());
  EXPECT_TRUE(approx.retained.empty());
  for (std::size_t t = 0; t < v.size(); ++t) {
    EXPECT_NEAR(approx.error[t], std::abs(v[t] - v[0]), 1e-12);
  }
}

TEST(SparseMatchTest, PlantedFiveTermsWithSmallNoise) {
  const int n = 4;
  const std::vector<PlantedTerm> terms = {{0b0011, Family::kAnd, 1.0},
                                          {0b0101, Family::kAnd, -0.8},
                                          {0b1001, Family::kAnd, 0.6},
                                          {0b0110, Family::kAnd, 0.9},
                                          {0b1110, Family::kAnd, -0.7}};
  const ValueTable table = PlantedTable(n, terms, 1e-4, 17);
  const SparseApproximation approx = SparseMatch(AndOnly(table.values), 1e-3);
  ASSERT_EQ(approx.retained.size(), terms.size());
  for (std::size_t k = 0; k < terms.size(); ++k) {
    bool found = false;
    for (const RetainedEffect& r : approx.retained) {
      found |= r.mask == terms[k].mask && r.family == Family::kAnd;
    }
    EXPECT_TRUE(found) << "mask " << terms[k].mask;
  }
  EXPECT_LE(approx.max_error, LatticeSize(n) * 1e-4);
}

TEST(SparseMatchTest, RetainsStrictlyAboveThreshold) {
  const InteractionSpectrum spectrum = AndOnly(Make(1, {0.0, 0.5}));
  EXPECT_TRUE(SparseMatch(spectrum, 0.5).retained.empty());
  EXPECT_EQ(SparseMatch(spectrum, 0.49).retained.size(), 1u);
}

TEST(SparseMatchTest, RejectsNegativeOrNanThreshold) {
  const InteractionSpectrum spectrum = AndOnly(Make(1, {0.0, 0.5}));
  EXPECT_THROW(SparseMatch(spectrum, -1.0), Error);
  EXPECT_THROW(SparseMatch(spectrum, std::nan("")), Error);
}

// A larger threshold can drop two terms that cancel each other, so the max
// error is not monotone in the threshold.
TEST(SparseMatchTest, MaxErrorCanDecreaseAsThresholdGrows) {
  InteractionSpectrum spectrum{LatticeArray(1), LatticeArray(1)};
  spectrum.and_effects[1] = 2.0;
  spectrum.or_effects[1] = -1.5;
  const double low = SparseMatch(spectrum, 1.6).max_error;
  const double high = SparseMatch(spectrum, 3.0).max_error;
  EXPECT_DOUBLE_EQ(low, 1.5);
  EXPECT_DOUBLE_EQ(high, 0.5);
}

TEST(SparseMatchTest, ErrorBoundedByDroppedMassWhichIsMonotone) {
  const int n = 6;
  LatticeArray v_or = Make(n, RandomValues(n, 61));
  v_or[0] = 0.0;
  const InteractionSpectrum spectrum =
      ComputeSpectrum(Make(n, RandomValues(n, 60)), v_or);
  double previous = -1.0;
  for (double tau : {0.0, 0.01, 0.05, 0.1, 0.3, 1.0, 10.0}) {
    double dropped = 0.0;
    for (std::size_t s = 1; s < spectrum.and_effects.size(); ++s) {
      if (std::abs(spectrum.and_effects[s]) <= tau) {
        dropped += std::abs(spectrum.and_effects[s]);
      }
      if (std::abs(spectrum.or_effects[s]) <= tau) {
        dropped += std::abs(spectrum.or_effects[s]);
      }
    }
    EXPECT_LE(SparseMatch(spectrum, tau).max_error, dropped + 1e-12);
    EXPECT_GE(dropped, previous);
    previous = dropped;
  }
}

TEST(ShapleyTest, TwoVariableExample) {
  const LatticeArray v = Make(2, {0, 1, 2, 5});
  const std::vector<double> expected = PermutationShapley(ToVector(v), 2);
  EXPECT_DOUBLE_EQ(expected[0], 2.0);
  EXPECT_DOUBLE_EQ(expected[1], 3.0);
  const std::vector<double> phi = ShapleyValues(AndOnly(v));
  EXPECT_NEAR(phi[0], 2.0, 1e-12);
  EXPECT_NEAR(phi[1], 3.0, 1e-12);
  const std::vector<double> direct = ShapleyDirect(v);
  EXPECT_NEAR(direct[0], 2.0, 1e-12);
  EXPECT_NEAR(direct[1], 3.0, 1e-12);
}

TEST(ShapleyTest, SymmetricTableGivesEqualValues) {
  const int n = 5;
  LatticeArray v(n);
  for (std::uint32_t t = 0; t < v.size(); ++t) {
    v[t] = std::pow(std::popcount(t), 1.5);
  }
  const std::vector<double> phi = ShapleyValues(AndOnly(v));
  for (int i = 1; i < n; ++i) EXPECT_NEAR(phi[i], phi[0], 1e-12);
}

TEST(ShapleyTest, NullPlayerGetsZero) {
  const int n = 4;
  LatticeArray v(n);
  const std::vector<double> base = RandomValues(n, 70);
  for (std::uint32_t t = 0; t < v.size(); ++t) v[t] = base[t & ~0b0100u];
  EXPECT_NEAR(ShapleyDirect(v)[2], 0.0, 1e-12);
  EXPECT_NEAR(ShapleyValues(AndOnly(v))[2], 0.0, 1e-12);
}

TEST(ShapleyTest, ReallocationMatchesEnumerationAndIsEfficient) {
  for (int k = 0; k < 20; ++k) {
    const int n = 1 + k % 10;
    const LatticeArray v = Make(n, RandomValues(n, 300 + k, 2.0));
    const std::vector<double> oracle =
        n <= 7 ? PermutationShapley(ToVector(v), n) : WeightedShapley(ToVector(v), n);
    const std::vector<double> phi = ShapleyValues(AndOnly(v));
    const std::vector<double> direct = ShapleyDirect(v);
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      EXPECT_NEAR(phi[i], oracle[i], 1e-8);
      EXPECT_NEAR(direct[i], oracle[i], 1e-8);
      total += direct[i];
    }
    EXPECT_NEAR(total, v.full_value() - v.empty_value(), 1e-8);
  }
}

TEST(ShapleyTest, ReallocationIncludesOrEffects) {
  const int n = 6;
  const LatticeArray v = Make(n, RandomValues(n, 71));
  LatticeArray v_or = Make(n, RandomValues(n, 72));
  v_or[0] = 0.0;
  LatticeArray v_and(n);
  for (std::size_t t = 0; t < v.size(); ++t) v_and[t] = v[t] - v_or[t];
  const std::vector<double> phi = ShapleyValues(ComputeSpectrum(v_and, v_or));
  const std::vector<double> oracle = PermutationShapley(ToVector(v), n);
  for (int i = 0; i < n; ++i) EXPECT_NEAR(phi[i], oracle[i], 1e-8);
}

TEST(ShapleyTest, DirectRejectsLargeN) {
  EXPECT_THROW(ShapleyDirect(LatticeArray(kMaxShapleyDirectVariables + 1)),
               Error);
}

TEST(MergeFirstOrderTest, FoldsSingletonOrIntoAnd) {
  InteractionSpectrum spectrum{LatticeArray(2), LatticeArray(2)};
  spectrum.and_effects[1] = 1.0;
  spectrum.or_effects[1] = 2.0;
  spectrum.or_effects[3] = 4.0;
  const InteractionSpectrum merged = MergeFirstOrder(spectrum);
  EXPECT_EQ(merged.and_effects[1], 3.0);
  EXPECT_EQ(merged.or_effects[1], 0.0);
  EXPECT_EQ(merged.or_effects[3], 4.0);
}

TEST(MergeFirstOrderTest, IdempotentAndReconstructionPreserving) {
  for (int n = 1; n <= 8; ++n) {
    LatticeArray v_or = Make(n, RandomValues(n, 80 + n));
    v_or[0] = 0.0;
    const InteractionSpectrum spectrum =
        ComputeSpectrum(Make(n, RandomValues(n, 90 + n)), v_or);
    const InteractionSpectrum once = MergeFirstOrder(spectrum);
    const InteractionSpectrum twice = MergeFirstOrder(once);
    EXPECT_EQ(ToVector(once.and_effects), ToVector(twice.and_effects));
    EXPECT_EQ(ToVector(once.or_effects), ToVector(twice.or_effects));
    EXPECT_LT(MaxAbsDiff(ToVector(ReconstructAll(once)),
                         ToVector(ReconstructAll(spectrum))),
              1e-12);
  }
}

TEST(PlantedSpectrumTest, AndTermsGiveExactlyThePlantedMasks) {
  for (int k = 1; k <= 8; ++k) {
    const int n = 8;
    std::vector<PlantedTerm> terms;
    for (int j = 0; j < k; ++j) {
      terms.push_back({static_cast<std::uint32_t>((37 * (j + 1) * k) % 255 + 1),
                       Family::kAnd, 0.5 + 0.1 * j});
    }
    const ValueTable table = PlantedTable(n, terms, 0.0, 0);
    const LatticeArray effects = AndInteractions(table.values);
    LatticeArray expected(n);
    for (const PlantedTerm& t : terms) expected[t.mask] += t.coefficient;
    EXPECT_LT(MaxAbsDiff(ToVector(effects), ToVector(expected)), 1e-10);
  }
}

}  // namespace
}  // namespace andor
