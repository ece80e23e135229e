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

#include "andor/probe.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <utility>

#include "andor/decomposition.h"
#include "andor/error.h"
#include "json.hpp"

namespace andor {
namespace {

using nlohmann::json;

[[noreturn]] void DumpError(int line, const std::string& message) {
  throw Error(ErrorKind::kParse,
              "feature dump: line " + std::to_string(line) + ": " + message);
}

std::vector<std::string_view> SplitFields(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view Trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

template <typename T>
bool ParseNumber(std::string_view text, T& out) {
  text = Trim(text);
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end;
}

// Log-sum-exp softmax cross-entropy of one logit row.
double CrossEntropy(const Eigen::VectorXd& logits, int label) {
  const double peak = logits.maxCoeff();
  const double lse =
      peak + std::log((logits.array() - peak).exp().sum());
  return lse - logits[label];
}

}  // namespace

void FeatureDump::Validate() const {
  if (dim < 1) throw Error(ErrorKind::kSchema, "feature dump: d must be >= 1");
  if (num_classes < 1) {
    throw Error(ErrorKind::kSchema, "feature dump: classes must be >= 1");
  }
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const FeatureRow& row = rows[r];
    if (static_cast<int>(row.features.size()) != dim) {
      throw Error(ErrorKind::kSchema,
                  "feature dump: row " + std::to_string(r) + " has " +
                      std::to_string(row.features.size()) +
                      " features, expected " + std::to_string(dim));
    }
    if (row.label < 0 || row.label >= std::max(num_classes, 2)) {
      throw Error(ErrorKind::kSchema, "feature dump: row " +
                                          std::to_string(r) +
                                          " label out of range");
    }
    for (double f : row.features) {
      if (!std::isfinite(f)) {
        throw Error(ErrorKind::kSchema, "feature dump: row " +
                                            std::to_string(r) +
                                            " has a non-finite feature");
      }
    }
  }
}

std::string SerializeFeatureDump(const FeatureDump& dump) {
  std::ostringstream out;
  out << "layer=" << dump.layer_id << " d=" << dump.dim
      << " classes=" << dump.num_classes << "\n";
  for (const FeatureRow& row : dump.rows) {
    out << row.sample_id << ','
        << (row.mask ? std::to_string(*row.mask) : std::string("FULL")) << ','
        << row.label;
    for (double f : row.features) out << ',' << FormatReal(f);
    out << '\n';
  }
  return out.str();
}

FeatureDump ParseFeatureDump(std::string_view text) {
  FeatureDump dump;
  bool have_header = false;
  int line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = Trim(text.substr(start, end - start));
    start = end + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;

    if (!have_header) {
      for (std::string_view field : SplitFields(line, ' ')) {
        if (field.empty()) continue;
        const std::size_t eq = field.find('=');
        if (eq == std::string_view::npos) DumpError(line_no, "bad header field");
        const std::string_view key = field.substr(0, eq);
        const std::string_view value = field.substr(eq + 1);
        if (key == "layer") {
          dump.layer_id = std::string(value);
        } else if (key == "d") {
          if (!ParseNumber(value, dump.dim)) DumpError(line_no, "bad d");
        } else if (key == "classes") {
          if (!ParseNumber(value, dump.num_classes)) {
            DumpError(line_no, "bad classes");
          }
        }
      }
      if (dump.dim < 1 || dump.num_classes < 1) {
        DumpError(line_no, "header needs d=<dim> and classes=<C>");
      }
      have_header = true;
      continue;
    }

    const auto fields = SplitFields(line, ',');
    if (static_cast<int>(fields.size()) != 3 + dump.dim) {
      DumpError(line_no, "expected " + std::to_string(3 + dump.dim) +
                             " fields, found " +
                             std::to_string(fields.size()));
    }
    FeatureRow row;
    row.sample_id = std::string(Trim(fields[0]));
    const std::string_view mask = Trim(fields[1]);
    if (mask != "FULL") {
      std::uint32_t bits = 0;
      if (!ParseNumber(mask, bits)) DumpError(line_no, "field 2: bad mask");
      row.mask = bits;
    }
    if (!ParseNumber(fields[2], row.label)) {
      DumpError(line_no, "field 3: bad label");
    }
    row.features.resize(dump.dim);
    for (int j = 0; j < dump.dim; ++j) {
      if (!ParseNumber(fields[3 + j], row.features[j])) {
        DumpError(line_no, "field " + std::to_string(4 + j) + ": bad number");
      }
    }
    dump.rows.push_back(std::move(row));
  }
  if (!have_header) DumpError(line_no, "missing header line");
  dump.Validate();
  return dump;
}

void WriteFeatureDump(const FeatureDump& dump,
                      const std::filesystem::path& path) {
  WriteTextFile(path, SerializeFeatureDump(dump));
}

FeatureDump ReadFeatureDump(const std::filesystem::path& path) {
  const std::string text = ReadTextFile(path);
  try {
    return ParseFeatureDump(text);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

std::vector<double> ProbeModel::Logits(std::span<const double> features) const {
  if (static_cast<Eigen::Index>(features.size()) != weights.rows()) {
    throw Error(ErrorKind::kDimension,
                "probe expects " + std::to_string(weights.rows()) +
                    " features, got " + std::to_string(features.size()));
  }
  const Eigen::Map<const Eigen::VectorXd> f(
      features.data(), static_cast<Eigen::Index>(features.size()));
  const Eigen::VectorXd z = weights.transpose() * f + bias;
  return std::vector<double>(z.data(), z.data() + z.size());
}

ProbeModel ProbeModel::FromHead(const ToyModel& model) {
  const DenseLayer& head = model.layers().back();
  return ProbeModel{head.weights.transpose(), head.bias};
}

std::string SerializeProbe(const ProbeModel& probe) {
  json w = json::array();
  for (Eigen::Index r = 0; r < probe.weights.rows(); ++r) {
    std::vector<double> row(probe.weights.cols());
    for (Eigen::Index c = 0; c < probe.weights.cols(); ++c) {
      row[c] = probe.weights(r, c);
    }
    w.push_back(row);
  }
  std::vector<double> b(probe.bias.data(), probe.bias.data() + probe.bias.size());
  json doc = {{"format_version", kFormatVersion},
              {"dim", probe.weights.rows()},
              {"classes", probe.num_classes()},
              {"weights", w},
              {"bias", b}};
  return doc.dump(1) + "\n";
}

ProbeModel ParseProbe(std::string_view text) {
  try {
    const json doc = json::parse(text.begin(), text.end());
    const auto w = doc.at("weights").get<std::vector<std::vector<double>>>();
    const auto b = doc.at("bias").get<std::vector<double>>();
    ProbeModel probe{Eigen::MatrixXd(w.size(), b.size()),
                     Eigen::VectorXd(b.size())};
    for (std::size_t r = 0; r < w.size(); ++r) {
      if (w[r].size() != b.size()) {
        throw Error(ErrorKind::kSchema, "probe: weight row width mismatch");
      }
      for (std::size_t c = 0; c < b.size(); ++c) probe.weights(r, c) = w[r][c];
    }
    for (std::size_t c = 0; c < b.size(); ++c) probe.bias[c] = b[c];
    return probe;
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::kParse, std::string("probe: ") + e.what());
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kSchema, std::string("probe: ") + e.what());
  }
}

void WriteProbe(const ProbeModel& probe, const std::filesystem::path& path) {
  WriteTextFile(path, SerializeProbe(probe));
}

ProbeModel ReadProbe(const std::filesystem::path& path) {
  return ParseProbe(ReadTextFile(path));
}

ProbeTraining TrainProbe(const FeatureDump& train, const ProbeConfig& config) {
  train.Validate();
  std::vector<const FeatureRow*> rows;
  for (const FeatureRow& row : train.rows) {
    if (!row.mask || config.include_masked_rows) rows.push_back(&row);
  }
  std::set<int> classes;
  for (const FeatureRow* row : rows) classes.insert(row->label);
  if (classes.size() < 2) {
    throw Error(ErrorKind::kTraining,
                "probe training needs at least two classes, found " +
                    std::to_string(classes.size()));
  }
  const int d = train.dim;
  const int c = std::max(train.num_classes, *classes.rbegin() + 1);
  const Eigen::Index m = static_cast<Eigen::Index>(rows.size());

  Eigen::MatrixXd x(m, d);
  Eigen::MatrixXd target = Eigen::MatrixXd::Zero(m, c);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (int j = 0; j < d; ++j) x(i, j) = rows[i]->features[j];
    target(i, rows[i]->label) = 1.0;
  }
  const Eigen::RowVectorXd mean = x.colwise().mean();
  Eigen::RowVectorXd scale =
      ((x.rowwise() - mean).array().square().colwise().mean()).sqrt();
  for (Eigen::Index j = 0; j < scale.size(); ++j) {
    if (!(scale[j] > 1e-12)) scale[j] = 1.0;
  }
  const Eigen::MatrixXd z =
      (x.rowwise() - mean).array().rowwise() / scale.array();

  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(d, c);
  Eigen::RowVectorXd b = Eigen::RowVectorXd::Zero(c);
  ProbeTraining result;

  auto evaluate = [&](Eigen::MatrixXd& probs) {
    Eigen::MatrixXd logits = (z * w).rowwise() + b;
    double loss = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      loss += CrossEntropy(logits.row(i).transpose(), rows[i]->label);
      const double peak = logits.row(i).maxCoeff();
      Eigen::RowVectorXd e = (logits.row(i).array() - peak).exp();
      probs.row(i) = e / e.sum();
    }
    return loss / static_cast<double>(m);
  };

  Eigen::MatrixXd probs(m, c);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double loss = evaluate(probs);
    if (!std::isfinite(loss)) {
      throw Error(ErrorKind::kOptimization,
                  "probe loss became non-finite at epoch " +
                      std::to_string(epoch));
    }
    result.epoch_losses.push_back(loss);
    const Eigen::MatrixXd residual = (probs - target) / static_cast<double>(m);
    w -= config.learning_rate * (z.transpose() * residual);
    b -= config.learning_rate * residual.colwise().sum();
  }
  result.epoch_losses.push_back(evaluate(probs));

  int correct = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    Eigen::Index best;
    probs.row(i).maxCoeff(&best);
    correct += best == rows[i]->label;
  }
  result.accuracy = static_cast<double>(correct) / static_cast<double>(m);

  // Fold the standardisation back: w_raw = w / scale, b_raw = b - mean w_raw.
  result.probe.weights = w.array().colwise() / scale.transpose().array();
  result.probe.bias = (b - mean * result.probe.weights).transpose();
  return result;
}

ValueTable ProbeTable(const ProbeModel& probe, const FeatureDump& masked,
                      std::string_view sample_id, int y, int n,
                      ProbabilityLink link) {
  const std::uint32_t full = FullBits(n);
  std::map<std::uint32_t, const FeatureRow*> by_mask;
  for (const FeatureRow& row : masked.rows) {
    if (row.sample_id != sample_id) continue;
    const std::uint32_t bits = row.mask.value_or(full);
    if (bits > full) {
      throw Error(ErrorKind::kSchema, "mask " + std::to_string(bits) +
                                          " out of range for n=" +
                                          std::to_string(n));
    }
    by_mask.emplace(bits, &row);
  }
  if (by_mask.size() != LatticeSize(n)) {
    std::string missing;
    int listed = 0;
    std::size_t absent = 0;
    for (std::uint32_t t = 0; t <= full; ++t) {
      if (by_mask.count(t)) continue;
      ++absent;
      if (listed++ < 32) missing += (missing.empty() ? "" : " ") + std::to_string(t);
    }
    throw Error(ErrorKind::kCompleteness,
                "sample '" + std::string(sample_id) + "' is missing " +
                    std::to_string(absent) + " of " +
                    std::to_string(LatticeSize(n)) + " masks: " + missing +
                    (absent > 32 ? " ..." : ""));
  }
  std::vector<double> values(LatticeSize(n));
  for (const auto& [bits, row] : by_mask) {
    values[bits] = LogOddsFromLogits(probe.Logits(row->features), y, link);
  }
  ValueTable table{LatticeArray(n, std::move(values)), std::string(sample_id),
                   {}};
  table.metadata[std::string(kMetaSample)] = std::string(sample_id);
  table.metadata[std::string(kMetaLayer)] = masked.layer_id;
  table.metadata[std::string(kMetaClass)] = std::to_string(y);
  return table;
}

std::vector<FeatureRow> MaskedFeatureRows(const ToyModel& model, int layer,
                                          std::span<const double> x,
                                          std::string_view sample_id,
                                          int label, const MaskingSpec& spec) {
  if (layer < 0 || layer > model.hidden_layers()) {
    throw Error(ErrorKind::kInvalidArgument,
                "layer index " + std::to_string(layer) + " out of range");
  }
  const int n = spec.n();
  std::vector<FeatureRow> rows(LatticeSize(n));
  (void)MaskInput(x, SubsetMask::Full(n), spec);
  const std::ptrdiff_t size = static_cast<std::ptrdiff_t>(rows.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t t = 0; t < size; ++t) {
    const auto bits = static_cast<std::uint32_t>(t);
    const std::vector<double> input =
        MaskInput(x, SubsetMask(bits, n), spec);
    const Eigen::VectorXd h = model.Trace(input)[layer];
    FeatureRow& row = rows[t];
    row.sample_id = std::string(sample_id);
    row.mask = bits;
    row.label = label;
    row.features.assign(h.data(), h.data() + h.size());
  }
  return rows;
}

}  // namespace andor
