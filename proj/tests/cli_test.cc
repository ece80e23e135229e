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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <json.hpp>

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("andor_cli_" + std::string(::testing::UnitTest::GetInstance()
                                           ->current_test_info()
                                           ->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int Run(const std::string& args) {
    const std::string cmd = std::string(ANDOR_CLI) + " " + args + " 2>" +
                            (dir_ / "stderr.txt").string() + " >/dev/null";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
  }

  json ReadJson(const fs::path& path) {
    std::ifstream in(path);
    return json::parse(in);
  }

  std::string Out(const std::string& name) { return (dir_ / name).string(); }

  fs::path dir_;
};

TEST_F(CliTest, PlantedExtractPipeline) {
  ASSERT_EQ(Run("synth planted --n 4 --term and:3:1.0 --term or:12:-0.8 -o " +
                Out("synth")),
            0);
  ASSERT_EQ(Run("--kappa-ratio 0 extract --table " + Out("synth/table.json") +
                " -o " + Out("ex")),
            0);
  const json salient = ReadJson(dir_ / "ex" / "salient.json");
  EXPECT_FALSE(salient.empty());
  EXPECT_TRUE(fs::exists(dir_ / "ex" / "spectrum.json"));
  EXPECT_TRUE(fs::exists(dir_ / "ex" / "sparsity.csv"));
  const json manifest = ReadJson(dir_ / "ex" / "manifest.json");
  EXPECT_EQ(manifest["command"], "extract");
  EXPECT_EQ(manifest["status"], "ok");
  EXPECT_TRUE(manifest.contains("config_digest"));

  ASSERT_EQ(Run("sparsity --spectrum " + Out("ex/spectrum.json") + " -o " +
                Out("sp")),
            0);
  ASSERT_EQ(Run("iou --a " + Out("synth/table.json") + " --b " +
                Out("synth/table.json") + " -o " + Out("iou")),
            0);
  EXPECT_TRUE(fs::exists(dir_ / "iou" / "iou.csv"));
  ASSERT_EQ(Run("kappa-sweep --table " + Out("synth/table.json") + " -o " +
                Out("sweep")),
            0);
}

TEST_F(CliTest, MissingInputExitsTwoWithErrorDocument) {
  EXPECT_EQ(Run("extract --table " + Out("nope.json") + " -o " + Out("ex")), 2);
  const json err = ReadJson(dir_ / "ex" / "error.json");
  EXPECT_EQ(err["error"]["kind"], "input-not-found");
  EXPECT_EQ(err["command"], "extract");
}

TEST_F(CliTest, BadConfigExitsOne) {
  EXPECT_EQ(Run("--tau-scope sideways track --trace " + Out("t") + " -o " +
                Out("tr")),
            1);
  EXPECT_EQ(Run("synth planted --n 4 --term xor:3:1 -o " + Out("s")), 1);
}

TEST_F(CliTest, ToyTraceTracks) {
  ASSERT_EQ(Run("synth toy-trace --n 4 --terms 2 --train 200 --samples 2 "
                "--hidden 8 --epochs 5 -o " +
                Out("toy")),
            0);
  ASSERT_EQ(Run("track --trace " + Out("toy/trace") + " -o " + Out("tr")), 0);
  std::ifstream csv(dir_ / "tr" / "track.csv");
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header, "layer,order,family,metric,value");
}

}  // namespace
