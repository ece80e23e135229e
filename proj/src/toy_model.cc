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

#include "andor/toy_model.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <utility>

#include "andor/error.h"
#include "json.hpp"

namespace andor {
namespace {

using nlohmann::json;

Eigen::VectorXd ToVector(std::span<const double> x) {
  return Eigen::Map<const Eigen::VectorXd>(x.data(),
                                           static_cast<Eigen::Index>(x.size()));
}

Eigen::VectorXd Relu(const Eigen::VectorXd& z) { return z.cwiseMax(0.0); }

// Softmax probabilities of a logit vector; one logit means a sigmoid over
// classes {0, 1}.
Eigen::VectorXd Probabilities(const Eigen::VectorXd& logits) {
  if (logits.size() == 1) {
    Eigen::VectorXd p(2);
    p[1] = 1.0 / (1.0 + std::exp(-logits[0]));
    p[0] = 1.0 - p[1];
    return p;
  }
  Eigen::VectorXd e = (logits.array() - logits.maxCoeff()).exp();
  return e / e.sum();
}

struct AdamSlot {
  Eigen::MatrixXd m_w, v_w;
  Eigen::VectorXd m_b, v_b;
};

}  // namespace

ToyModel::ToyModel(ToyModelKind kind, std::vector<DenseLayer> layers)
    : kind_(kind), layers_(std::move(layers)) {
  if (layers_.empty()) throw Error(ErrorKind::kSchema, "model has no layers");
  if (kind_ == ToyModelKind::kLinear && layers_.size() != 1) {
    throw Error(ErrorKind::kSchema, "a linear model has exactly one layer");
  }
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const DenseLayer& layer = layers_[l];
    if (layer.bias.size() != layer.weights.rows()) {
      throw Error(ErrorKind::kSchema,
                  "layer " + std::to_string(l) + " bias length mismatch");
    }
    if (l > 0 && layer.in_dim() != layers_[l - 1].out_dim()) {
      throw Error(ErrorKind::kSchema,
                  "layer " + std::to_string(l) + " expects " +
                      std::to_string(layer.in_dim()) + " inputs, previous " +
                      "layer produces " +
                      std::to_string(layers_[l - 1].out_dim()));
    }
    if (!layer.weights.allFinite() || !layer.bias.allFinite()) {
      throw Error(ErrorKind::kSchema, "non-finite model parameters");
    }
  }
}

std::vector<Eigen::VectorXd> ToyModel::Trace(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != input_dim()) {
    throw Error(ErrorKind::kDimension,
                "model expects " + std::to_string(input_dim()) +
                    " inputs, got " + std::to_string(x.size()));
  }
  std::vector<Eigen::VectorXd> out;
  out.reserve(layers_.size());
  Eigen::VectorXd h = ToVector(x);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Eigen::VectorXd z = layers_[l].weights * h + layers_[l].bias;
    h = l + 1 < layers_.size() ? Relu(z) : z;
    out.push_back(h);
  }
  return out;
}

std::vector<double> ToyModel::Logits(std::span<const double> x) const {
  const Eigen::VectorXd z = Trace(x).back();
  return std::vector<double>(z.data(), z.data() + z.size());
}

std::string SerializeToyModel(const ToyModel& model) {
  json layers = json::array();
  for (const DenseLayer& layer : model.layers()) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      std::vector<double> row(layer.weights.cols());
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
        row[c] = layer.weights(r, c);
      }
      rows.push_back(row);
    }
    std::vector<double> bias(layer.bias.data(),
                             layer.bias.data() + layer.bias.size());
    layers.push_back({{"weights", rows}, {"bias", bias}});
  }
  json doc = {{"format_version", kFormatVersion},
              {"kind", model.kind() == ToyModelKind::kMlp ? "mlp" : "linear"},
              {"layers", layers}};
  return doc.dump(1) + "\n";
}

ToyModel ParseToyModel(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::kParse, std::string("toy model: ") + e.what());
  }
  try {
    const std::string kind_name = doc.at("kind").get<std::string>();
    ToyModelKind kind;
    if (kind_name == "mlp") {
      kind = ToyModelKind::kMlp;
    } else if (kind_name == "linear") {
      kind = ToyModelKind::kLinear;
    } else {
      throw Error(ErrorKind::kSchema, "toy model: unknown kind " + kind_name);
    }
    std::vector<DenseLayer> layers;
    for (const json& entry : doc.at("layers")) {
      const auto rows =
          entry.at("weights").get<std::vector<std::vector<double>>>();
      const auto bias = entry.at("bias").get<std::vector<double>>();
      const Eigen::Index cols = rows.empty() ? 0 : rows.front().size();
      DenseLayer layer{Eigen::MatrixXd(rows.size(), cols),
                       Eigen::VectorXd(bias.size())};
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (static_cast<Eigen::Index>(rows[r].size()) != cols) {
          throw Error(ErrorKind::kSchema, "toy model: ragged weight matrix");
        }
        for (Eigen::Index c = 0; c < cols; ++c) layer.weights(r, c) = rows[r][c];
      }
      for (std::size_t i = 0; i < bias.size(); ++i) layer.bias[i] = bias[i];
      layers.push_back(std::move(layer));
    }
    return ToyModel(kind, std::move(layers));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kSchema, std::string("toy model: ") + e.what());
  }
}

void WriteToyModel(const ToyModel& model, const std::filesystem::path& path) {
  WriteTextFile(path, SerializeToyModel(model));
}

ToyModel ReadToyModel(const std::filesystem::path& path) {
  return ParseToyModel(ReadTextFile(path));
}

ToyModel TrainToyModel(const Dataset& data, const ToyTrainingConfig& config) {
  if (data.inputs.empty() || data.inputs.size() != data.labels.size()) {
    throw Error(ErrorKind::kTraining, "empty or inconsistent dataset");
  }
  if (config.classes < 2) {
    throw Error(ErrorKind::kConfig, "toy models need at least two classes");
  }
  const int in_dim = static_cast<int>(data.inputs.front().size());
  std::mt19937_64 rng(config.seed);

  std::vector<int> widths = {in_dim};
  widths.insert(widths.end(), config.hidden.begin(), config.hidden.end());
  widths.push_back(config.classes);
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    std::normal_distribution<double> init(0.0, std::sqrt(2.0 / widths[l]));
    DenseLayer layer{Eigen::MatrixXd(widths[l + 1], widths[l]),
                     Eigen::VectorXd::Zero(widths[l + 1])};
    for (Eigen::Index i = 0; i < layer.weights.size(); ++i) {
      layer.weights.data()[i] = init(rng);
    }
    layers.push_back(std::move(layer));
  }

  std::vector<AdamSlot> slots;
  for (const DenseLayer& layer : layers) {
    slots.push_back(
        {Eigen::MatrixXd::Zero(layer.weights.rows(), layer.weights.cols()),
         Eigen::MatrixXd::Zero(layer.weights.rows(), layer.weights.cols()),
         Eigen::VectorXd::Zero(layer.bias.size()),
         Eigen::VectorXd::Zero(layer.bias.size())});
  }
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  int step = 0;

  std::vector<std::size_t> order(data.inputs.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t depth = layers.size();

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size();
         start += config.batch_size) {
      const std::size_t end =
          std::min(order.size(), start + config.batch_size);
      std::vector<Eigen::MatrixXd> grad_w(depth);
      std::vector<Eigen::VectorXd> grad_b(depth);
      for (std::size_t l = 0; l < depth; ++l) {
        grad_w[l] = Eigen::MatrixXd::Zero(layers[l].weights.rows(),
                                          layers[l].weights.cols());
        grad_b[l] = Eigen::VectorXd::Zero(layers[l].bias.size());
      }
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t idx = order[k];
        std::vector<Eigen::VectorXd> acts = {ToVector(data.inputs[idx])};
        for (std::size_t l = 0; l < depth; ++l) {
          Eigen::VectorXd z = layers[l].weights * acts.back() + layers[l].bias;
          acts.push_back(l + 1 < depth ? Relu(z) : z);
        }
        Eigen::VectorXd delta = Probabilities(acts.back());
        delta[data.labels[idx]] -= 1.0;
        for (std::size_t l = depth; l-- > 0;) {
          grad_w[l] += delta * acts[l].transpose();
          grad_b[l] += delta;
          if (l > 0) {
            Eigen::VectorXd back = layers[l].weights.transpose() * delta;
            delta = (acts[l].array() > 0.0).select(back, 0.0);
          }
        }
      }
      ++step;
      const double batch = static_cast<double>(end - start);
      const double c1 = 1.0 - std::pow(kBeta1, step);
      const double c2 = 1.0 - std::pow(kBeta2, step);
      for (std::size_t l = 0; l < depth; ++l) {
        AdamSlot& s = slots[l];
        const Eigen::MatrixXd gw = grad_w[l] / batch;
        const Eigen::VectorXd gb = grad_b[l] / batch;
        s.m_w = kBeta1 * s.m_w + (1 - kBeta1) * gw;
        s.v_w = kBeta2 * s.v_w + (1 - kBeta2) * gw.cwiseProduct(gw);
        s.m_b = kBeta1 * s.m_b + (1 - kBeta1) * gb;
        s.v_b = kBeta2 * s.v_b + (1 - kBeta2) * gb.cwiseProduct(gb);
        layers[l].weights.array() -=
            config.learning_rate * (s.m_w.array() / c1) /
            ((s.v_w.array() / c2).sqrt() + kEps);
        layers[l].bias.array() -= config.learning_rate * (s.m_b.array() / c1) /
                                  ((s.v_b.array() / c2).sqrt() + kEps);
      }
    }
  }
  return ToyModel(ToyModelKind::kMlp, std::move(layers));
}

double Accuracy(const ToyModel& model, const Dataset& data) {
  if (data.inputs.empty()) return 0.0;
  int correct = 0;
  for (std::size_t i = 0; i < data.inputs.size(); ++i) {
    const std::vector<double> z = model.Logits(data.inputs[i]);
    const int predicted =
        z.size() == 1 ? (z[0] > 0.0 ? 1 : 0)
                      : static_cast<int>(std::max_element(z.begin(), z.end()) -
                                         z.begin());
    correct += predicted == data.labels[i];
  }
  return static_cast<double>(correct) / data.inputs.size();
}

ValueTable TableFromModel(const ToyModel& model, std::span<const double> x,
                          int y, const MaskingSpec& spec,
                          ProbabilityLink link) {
  spec.Validate();
  if (static_cast<int>(spec.input_dim()) != model.input_dim()) {
    throw Error(ErrorKind::kDimension,
                "masking spec covers " + std::to_string(spec.input_dim()) +
                    " dimensions, model expects " +
                    std::to_string(model.input_dim()));
  }
  const int n = spec.n();
  std::vector<double> values(LatticeSize(n));
  const std::ptrdiff_t size = static_cast<std::ptrdiff_t>(values.size());
  // Errors cannot leave an OpenMP region; masks are validated up front so
  // the loop body only evaluates.
  const std::vector<double> probe = MaskInput(x, SubsetMask::Full(n), spec);
  (void)LogOddsFromLogits(model.Logits(probe), y, link);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t t = 0; t < size; ++t) {
    const std::vector<double> masked =
        MaskInput(x, SubsetMask(static_cast<std::uint32_t>(t), n), spec);
    values[t] = LogOddsFromLogits(model.Logits(masked), y, link);
  }
  ValueTable table{LatticeArray(n, std::move(values)), {}, {}};
  table.metadata[std::string(kMetaClass)] = std::to_string(y);
  table.metadata[std::string(kMetaMaskingDigest)] = spec.Digest();
  return table;
}

}  // namespace andor
