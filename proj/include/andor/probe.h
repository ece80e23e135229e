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

#ifndef ANDOR_PROBE_H_
#define ANDOR_PROBE_H_

// Linear probes on intermediate-layer features. A probe trained on layer l
// turns the layer's features into the value function v^(l) whose
// interactions describe what that layer encodes.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "andor/masking.h"
#include "andor/toy_model.h"
#include "andor/value_table.h"

namespace andor {

struct FeatureRow {
  std::string sample_id;
  // Mask bits of the masked input, or nullopt for the unmasked sample.
  std::optional<std::uint32_t> mask;
  int label = 0;
  std::vector<double> features;
};

// Features of one layer for a set of (possibly masked) samples.
//
// Text format:
//   # comment lines are ignored
//   layer=<id> d=<dim> classes=<C>
//   <sample_id>,<mask bits|FULL>,<label>,<f_1>,...,<f_d>
struct FeatureDump {
  std::string layer_id;
  int dim = 0;
  int num_classes = 0;
  std::vector<FeatureRow> rows;

  // Throws kSchema on ragged rows, labels outside [0, C) or d < 1.
  void Validate() const;
};

std::string SerializeFeatureDump(const FeatureDump& dump);
FeatureDump ParseFeatureDump(std::string_view text);
void WriteFeatureDump(const FeatureDump& dump,
                      const std::filesystem::path& path);
FeatureDump ReadFeatureDump(const std::filesystem::path& path);

struct ProbeModel {
  Eigen::MatrixXd weights;  // d x C
  Eigen::VectorXd bias;     // C
  int num_classes() const { return static_cast<int>(bias.size()); }

  std::vector<double> Logits(std::span<const double> features) const;
  // The last layer of `model` as a probe on its final hidden features.
  static ProbeModel FromHead(const ToyModel& model);
};

std::string SerializeProbe(const ProbeModel& probe);
ProbeModel ParseProbe(std::string_view text);
void WriteProbe(const ProbeModel& probe, const std::filesystem::path& path);
ProbeModel ReadProbe(const std::filesystem::path& path);

struct ProbeConfig {
  double learning_rate = 0.01;
  int epochs = 500;
  // Train on masked rows as well as FULL rows.
  bool include_masked_rows = false;
};

struct ProbeTraining {
  ProbeModel probe;
  // Mean cross-entropy before each epoch's update, plus the final loss.
  std::vector<double> epoch_losses;
  double accuracy = 0.0;
};

// Full-batch gradient descent on the mean softmax cross-entropy. Features
// are standardised internally and the affine map is folded back into the
// probe, so the learned function is still linear in the raw features.
// Throws kTraining on single-class data and kOptimization when the loss
// stops being finite.
ProbeTraining TrainProbe(const FeatureDump& train,
                         const ProbeConfig& config = {});

// v(T) = log-odds of class y under the probe, from the rows of `sample_id`
// keyed by mask (row order is irrelevant; FULL counts as the full mask).
// Throws kCompleteness listing the absent masks.
ValueTable ProbeTable(const ProbeModel& probe, const FeatureDump& masked,
                      std::string_view sample_id, int y, int n,
                      ProbabilityLink link = ProbabilityLink::kSoftmax);

// Hidden features of `model` at `layer` (0-based hidden layer index; the
// logits are hidden_layers()) for all 2^n masked variants of x.
std::vector<FeatureRow> MaskedFeatureRows(const ToyModel& model, int layer,
                                          std::span<const double> x,
                                          std::string_view sample_id,
                                          int label, const MaskingSpec& spec);

}  // namespace andor

#endif  // ANDOR_PROBE_H_
