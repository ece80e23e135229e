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

#ifndef ANDOR_VALUE_TABLE_H_
#define ANDOR_VALUE_TABLE_H_

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>

#include "andor/lattice.h"

namespace andor {

inline constexpr int kFormatVersion = 1;

// Metadata keys written by this library. Other keys are carried verbatim.
inline constexpr std::string_view kMetaSample = "sample_id";
inline constexpr std::string_view kMetaLayer = "layer";
inline constexpr std::string_view kMetaModel = "model";
inline constexpr std::string_view kMetaClass = "class";
inline constexpr std::string_view kMetaMaskingDigest = "masking_digest";

// Outputs v(x_T) of one value function on all 2^n masked variants of one
// sample.
struct ValueTable {
  LatticeArray values;
  std::string label;
  std::map<std::string, std::string> metadata;

  int n() const { return values.n(); }
  // Empty string when the key is absent.
  std::string Meta(std::string_view key) const;
};

inline constexpr double kProbabilityClamp = 1e-7;

// log(p / (1 - p)) with p clamped to [1e-7, 1 - 1e-7]. Throws kDomain for p
// outside [0, 1].
double LogOdds(double p);

// Largest magnitude LogOdds can return.
double MaxLogOdds();

enum class ProbabilityLink {
  // Softmax over all logits; single-logit models use the sigmoid.
  kSoftmax,
  // One-vs-rest sigmoid of the target logit.
  kSigmoid,
};

// Log-odds of class `y` computed directly from logits, clamped exactly like
// LogOdds. For two classes this is z_y - z_other, for one logit it is +-z.
double LogOddsFromLogits(std::span<const double> logits, int y,
                         ProbabilityLink link = ProbabilityLink::kSoftmax);

// Text serialisation: a JSON document with format_version, n, label,
// metadata (string map) and values (2^n reals, 17 significant digits).
std::string SerializeTable(const ValueTable& table);
// Throws kParse on malformed text (with line and field context) and kSchema
// when the document does not describe a valid table.
ValueTable ParseTable(std::string_view text);

void WriteTable(const ValueTable& table, const std::filesystem::path& path);
// Throws kInputNotFound if the file does not exist.
ValueTable ReadTable(const std::filesystem::path& path);

// Shared helpers for the text formats.
std::string ReadTextFile(const std::filesystem::path& path);
// Writes to a temporary sibling and renames it into place.
void WriteTextFile(const std::filesystem::path& path, std::string_view text);
// Shortest decimal with 17 significant digits.
std::string FormatReal(double value);

}  // namespace andor

#endif  // ANDOR_VALUE_TABLE_H_
