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

#ifndef ANDOR_TOY_MODEL_H_
#define ANDOR_TOY_MODEL_H_

// Small dense networks used as desk-scale stand-ins for trained DNNs.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "andor/masking.h"
#include "andor/value_table.h"

namespace andor {

struct DenseLayer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd bias;     // out

  int in_dim() const { return static_cast<int>(weights.cols()); }
  int out_dim() const { return static_cast<int>(weights.rows()); }
};

enum class ToyModelKind { kMlp, kLinear };

// Dense layers with a rectifier after every layer but the last. A LINEAR
// model is exactly one layer.
class ToyModel {
 public:
  // Throws kSchema if layer shapes do not chain or a LINEAR model has more
  // than one layer.
  ToyModel(ToyModelKind kind, std::vector<DenseLayer> layers);

  ToyModelKind kind() const { return kind_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  int input_dim() const { return layers_.front().in_dim(); }
  int output_dim() const { return layers_.back().out_dim(); }
  // Number of hidden (rectified) layers.
  int hidden_layers() const { return static_cast<int>(layers_.size()) - 1; }

  std::vector<double> Logits(std::span<const double> x) const;

  // Activations after each hidden layer followed by the logits; size
  // hidden_layers() + 1.
  std::vector<Eigen::VectorXd> Trace(std::span<const double> x) const;

 private:
  ToyModelKind kind_;
  std::vector<DenseLayer> layers_;
};

std::string SerializeToyModel(const ToyModel& model);
ToyModel ParseToyModel(std::string_view text);
void WriteToyModel(const ToyModel& model, const std::filesystem::path& path);
ToyModel ReadToyModel(const std::filesystem::path& path);

// Labelled training data for toy models and probes.
struct Dataset {
  std::vector<std::vector<double>> inputs;
  std::vector<int> labels;
};

struct ToyTrainingConfig {
  std::vector<int> hidden = {32, 32};
  int classes = 2;
  int epochs = 200;
  int batch_size = 32;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
};

// Cross-entropy training with Adam from a seeded He initialisation.
ToyModel TrainToyModel(const Dataset& data, const ToyTrainingConfig& config);

double Accuracy(const ToyModel& model, const Dataset& data);

// v(T) = log-odds of class y on MaskInput(x, T, spec), for all 2^n masks.
// Masks are evaluated in parallel; the table is ordered by mask regardless.
ValueTable TableFromModel(const ToyModel& model, std::span<const double> x,
                          int y, const MaskingSpec& spec,
                          ProbabilityLink link = ProbabilityLink::kSoftmax);

}  // namespace andor

#endif  // ANDOR_TOY_MODEL_H_
