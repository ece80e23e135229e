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
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "andor/error.h"
#include "andor/toy_model.h"

namespace andor {
namespace {

FeatureDump Blobs(int per_class, double separation, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.5);
  FeatureDump dump;
  dump.layer_id = "blobs";
  dump.dim = 2;
  dump.num_classes = 2;
  for (int r = 0; r < 2 * per_class; ++r) {
    const int label = r % 2;
    const double center = label == 0 ? -separation : separation;
    dump.rows.push_back({"s" + std::to_string(r), std::nullopt, label,
                         {center + noise(rng), center + noise(rng)}});
  }
  return dump;
}

ProbeModel RandomProbe(int d, int c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  ProbeModel probe{Eigen::MatrixXd(d, c), Eigen::VectorXd(c)};
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < c; ++j) probe.weights(i, j) = g(rng);
  }
  for (int j = 0; j < c; ++j) probe.bias[j] = g(rng);
  return probe;
}

FeatureDump MaskedRows(int n, int d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  FeatureDump dump;
  dump.layer_id = "l1";
  dump.dim = d;
  dump.num_classes = 2;
  for (std::uint32_t t = 0; t < (1u << n); ++t) {
    std::vector<double> f(d);
    for (double& x : f) x = g(rng);
    dump.rows.push_back({"x", t, 1, f});
  }
  return dump;
}

ErrorKind KindOf(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::kIo;
}

TEST(TrainProbeTest, SeparableBlobs) {
  const ProbeTraining trained = TrainProbe(Blobs(100, 3.0, 1));
  EXPECT_GE(trained.accuracy, 0.99);
}

TEST(TrainProbeTest, RandomLabelsGiveChanceAccuracy) {
  FeatureDump dump = Blobs(200, 0.0, 2);
  std::mt19937_64 rng(3);
  for (FeatureRow& row : dump.rows) row.label = static_cast<int>(rng() % 2);
  const ProbeTraining trained = TrainProbe(dump);
  EXPECT_NEAR(trained.accuracy, 0.5, 0.1);
}

TEST(TrainProbeTest, DuplicatedRowsLeaveDecisionUnchanged) {
  const FeatureDump dump = Blobs(50, 1.0, 4);
  FeatureDump doubled = dump;
  doubled.rows.insert(doubled.rows.end(), dump.rows.begin(), dump.rows.end());
  const ProbeModel a = TrainProbe(dump).probe;
  const ProbeModel b = TrainProbe(doubled).probe;
  for (const FeatureRow& row : dump.rows) {
    const std::vector<double> la = a.Logits(row.features);
    const std::vector<double> lb = b.Logits(row.features);
    EXPECT_NEAR(la[1] - la[0], lb[1] - lb[0], 1e-6);
  }
}

TEST(TrainProbeTest, LossNonIncreasing) {
  const ProbeTraining trained = TrainProbe(Blobs(100, 1.0, 5));
  ASSERT_GT(trained.epoch_losses.size(), 2u);
  for (std::size_t e = 1; e < trained.epoch_losses.size(); ++e) {
    EXPECT_LE(trained.epoch_losses[e], trained.epoch_losses[e - 1] + 1e-12);
  }
}

TEST(TrainProbeTest, SingleClassIsTrainingError) {
  FeatureDump dump = Blobs(10, 1.0, 6);
  for (FeatureRow& row : dump.rows) row.label = 0;
  EXPECT_EQ(KindOf([&] { TrainProbe(dump); }), ErrorKind::kTraining);
}

TEST(TrainProbeTest, MaskedRowsExcludedUnlessRequested) {
  FeatureDump dump = Blobs(50, 3.0, 7);
  // Masked rows with flipped labels would ruin the probe if used.
  const std::size_t full_rows = dump.rows.size();
  for (std::size_t r = 0; r < full_rows; ++r) {
    FeatureRow row = dump.rows[r];
    row.mask = 1;
    row.label = 1 - row.label;
    dump.rows.push_back(row);
    dump.rows.push_back(row);
  }
  EXPECT_GE(TrainProbe(dump).accuracy, 0.99);
  ProbeConfig config;
  config.include_masked_rows = true;
  const ProbeModel mixed = TrainProbe(dump, config).probe;
  int correct = 0;
  for (std::size_t r = 0; r < full_rows; ++r) {
    const std::vector<double> logits = mixed.Logits(dump.rows[r].features);
    correct += (logits[1] > logits[0] ? 1 : 0) == dump.rows[r].label;
  }
  EXPECT_LT(correct, static_cast<int>(full_rows) / 2);
}

TEST(ProbeTableTest, ZeroWeightsGiveConstantLogOddsOfUniform) {
  const int n = 3;
  const ProbeModel probe{Eigen::MatrixXd::Zero(4, 3), Eigen::VectorXd::Zero(3)};
  FeatureDump dump = MaskedRows(n, 4, 8);
  dump.num_classes = 3;
  const ValueTable table = ProbeTable(probe, dump, "x", 1, n);
  for (double v : table.values.values()) {
    EXPECT_NEAR(v, std::log((1.0 / 3) / (2.0 / 3)), 1e-12);
  }
}

TEST(ProbeTableTest, TwoClassTableIsTheLogitMargin) {
  const int n = 4;
  const ProbeModel probe = RandomProbe(5, 2, 9);
  const FeatureDump dump = MaskedRows(n, 5, 10);
  const ValueTable table = ProbeTable(probe, dump, "x", 1, n);
  for (const FeatureRow& row : dump.rows) {
    const std::vector<double> logits = probe.Logits(row.features);
    EXPECT_NEAR(table.values[*row.mask], logits[1] - logits[0], 1e-10);
  }
  EXPECT_EQ(table.Meta(kMetaSample), "x");
  EXPECT_EQ(table.Meta(kMetaLayer), "l1");
  EXPECT_EQ(table.Meta(kMetaClass), "1");
}

TEST(ProbeTableTest, InvariantToRowOrderAndFullRowCountsAsFullMask) {
  const int n = 3;
  const ProbeModel probe = RandomProbe(3, 2, 11);
  FeatureDump dump = MaskedRows(n, 3, 12);
  const ValueTable a = ProbeTable(probe, dump, "x", 0, n);
  std::reverse(dump.rows.begin(), dump.rows.end());
  dump.rows.front().mask = std::nullopt;  // the former full-mask row
  const ValueTable b = ProbeTable(probe, dump, "x", 0, n);
  EXPECT_EQ(std::vector<double>(a.values.values().begin(), a.values.values().end()),
            std::vector<double>(b.values.values().begin(), b.values.values().end()));
}

TEST(ProbeTableTest, MissingMasksListed) {
  const int n = 3;
  FeatureDump dump = MaskedRows(n, 2, 13);
  dump.rows.erase(dump.rows.begin() + 5);
  dump.rows.erase(dump.rows.begin() + 2);
  try {
    ProbeTable(RandomProbe(2, 2, 14), dump, "x", 1, n);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kCompleteness);
    const std::string message = e.what();
    EXPECT_NE(message.find('2'), std::string::npos);
    EXPECT_NE(message.find('5'), std::string::npos);
  }
}

TEST(ProbeTableTest, ModelHeadReproducesModelTable) {
  Dataset data;
  std::mt19937_64 rng(15);
  for (int r = 0; r < 200; ++r) {
    std::vector<double> x(4);
    for (double& v : x) v = static_cast<double>(rng() % 2);
    data.labels.push_back(static_cast<int>(x[0] * x[1] + x[2] > 0.5));
    data.inputs.push_back(std::move(x));
  }
  ToyTrainingConfig config;
  config.hidden = {8, 8};
  config.epochs = 10;
  const ToyModel model = TrainToyModel(data, config);
  const MaskingSpec spec = ElementwiseSpec(std::vector<double>(4, 0.0));
  const std::vector<double> x = {1.0, 1.0, 0.0, 1.0};
  FeatureDump dump;
  dump.layer_id = "last";
  dump.rows = MaskedFeatureRows(model, model.hidden_layers() - 1, x, "x", 1, spec);
  dump.dim = static_cast<int>(dump.rows.front().features.size());
  dump.num_classes = 2;
  const ValueTable probe_table =
      ProbeTable(ProbeModel::FromHead(model), dump, "x", 1, 4);
  const ValueTable model_table = TableFromModel(model, x, 1, spec);
  for (std::size_t t = 0; t < 16; ++t) {
    EXPECT_NEAR(probe_table.values[t], model_table.values[t], 1e-6);
  }
}

TEST(FeatureDumpTest, TextRoundTrip) {
  FeatureDump dump = MaskedRows(2, 3, 16);
  dump.rows.push_back({"y", std::nullopt, 0, {0.25, -1e-300, 3.5}});
  const FeatureDump back = ParseFeatureDump(SerializeFeatureDump(dump));
  EXPECT_EQ(back.layer_id, dump.layer_id);
  EXPECT_EQ(back.dim, dump.dim);
  EXPECT_EQ(back.num_classes, dump.num_classes);
  ASSERT_EQ(back.rows.size(), dump.rows.size());
  for (std::size_t r = 0; r < dump.rows.size(); ++r) {
    EXPECT_EQ(back.rows[r].sample_id, dump.rows[r].sample_id);
    EXPECT_EQ(back.rows[r].mask, dump.rows[r].mask);
    EXPECT_EQ(back.rows[r].label, dump.rows[r].label);
    EXPECT_EQ(back.rows[r].features, dump.rows[r].features);
  }
}

TEST(FeatureDumpTest, ParseErrorsCarryLineNumbers) {
  const std::string text =
      "# comment\nlayer=a d=2 classes=2\nx,FULL,0,1.0,2.0\nx,3,1,1.0\n";
  try {
    ParseFeatureDump(text);
    FAIL();
  } catch (const Error& e) {
    EXPECT_TRUE(e.kind() == ErrorKind::kParse || e.kind() == ErrorKind::kSchema);
    EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos);
  }
}

TEST(FeatureDumpTest, ValidateRejectsBadLabels) {
  FeatureDump dump = MaskedRows(2, 2, 17);
  dump.rows[0].label = 5;
  EXPECT_EQ(KindOf([&] { dump.Validate(); }), ErrorKind::kSchema);
}

TEST(ProbeModelTest, JsonRoundTrip) {
  const ProbeModel probe = RandomProbe(3, 4, 18);
  const ProbeModel back = ParseProbe(SerializeProbe(probe));
  EXPECT_EQ(back.weights, probe.weights);
  EXPECT_EQ(back.bias, probe.bias);
}

}  // namespace
}  // namespace andor
