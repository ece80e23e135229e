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

#ifndef ANDOR_MASKING_H_
#define ANDOR_MASKING_H_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "andor/lattice.h"

namespace andor {

// Rectangle of a grid input owned by one variable (image patch).
struct PatchRect {
  int row = 0;
  int col = 0;
  int height = 0;
  int width = 0;

  friend bool operator==(const PatchRect&, const PatchRect&) = default;
};

struct MaskVariable {
  std::string name;
  // Raw input dimensions owned by the variable.
  std::vector<std::size_t> dims;
  std::optional<PatchRect> patch;

  friend bool operator==(const MaskVariable&, const MaskVariable&) = default;
};

// Maps the n input variables onto raw input dimensions and fixes the
// baseline value each dimension takes when its variable is masked.
// Dimensions owned by no variable always keep their input value.
struct MaskingSpec {
  std::vector<MaskVariable> variables;
  std::vector<double> baseline;

  int n() const { return static_cast<int>(variables.size()); }
  std::size_t input_dim() const { return baseline.size(); }

  // Throws kSchema unless 1 <= n <= kMaxVariables, every variable owns a
  // non-empty set of in-range dimensions and no dimension is shared.
  void Validate() const;

  // Stable 16-hex-digit digest of the canonical serialisation; used to check
  // that tables from different files are comparable.
  std::string Digest() const;

  friend bool operator==(const MaskingSpec&, const MaskingSpec&) = default;
};

// One variable per raw dimension, named x0, x1, ...
MaskingSpec ElementwiseSpec(std::span<const double> baseline);

// Variables are patch_h x patch_w patches of a rows x cols x channels image
// stored row-major with channels innermost. `patches` lists the selected
// patches as (patch_row, patch_col) in the patch grid.
MaskingSpec GridPatchSpec(int rows, int cols, int channels, int patch_h,
                          int patch_w,
                          std::span<const std::pair<int, int>> patches,
                          std::span<const double> baseline);

// Per-dimension mean of the samples, the default baseline.
std::vector<double> MeanBaseline(std::span<const std::vector<double>> samples);

// Keeps x on the dimensions of variables in `mask` and substitutes the
// baseline on the dimensions of the other variables. Throws kDimension when
// x or the mask does not match the spec.
std::vector<double> MaskInput(std::span<const double> x, SubsetMask mask,
                              const MaskingSpec& spec);

std::string SerializeMaskingSpec(const MaskingSpec& spec);
MaskingSpec ParseMaskingSpec(std::string_view text);
void WriteMaskingSpec(const MaskingSpec& spec,
                      const std::filesystem::path& path);
MaskingSpec ReadMaskingSpec(const std::filesystem::path& path);

}  // namespace andor

#endif  // ANDOR_MASKING_H_
