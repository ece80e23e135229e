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

#include "andor/masking.h"

#include <cstdint>
#include <cstdio>
#include <string>
#include <utility>

#include "andor/error.h"
#include "andor/value_table.h"
#include "json.hpp"

namespace andor {
namespace {

using nlohmann::json;

[[noreturn]] void SchemaError(const std::string& message) {
  throw Error(ErrorKind::kSchema, "masking spec: " + message);
}

// FNV-1a, 64 bit.
std::uint64_t Fnv1a(std::string_view bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ull;
  }
  return hash;
}

}  // namespace

void MaskingSpec::Validate() const {
  if (n() < 1 || n() > kMaxVariables) {
    SchemaError("variable count must be in [1, " +
                std::to_string(kMaxVariables) + "], got " +
                std::to_string(n()));
  }
  std::vector<int> owner(input_dim(), -1);
  for (int i = 0; i < n(); ++i) {
    const MaskVariable& var = variables[i];
    if (var.dims.empty()) {
      SchemaError("variable " + std::to_string(i) + " owns no dimensions");
    }
    for (std::size_t d : var.dims) {
      if (d >= input_dim()) {
        SchemaError("variable " + std::to_string(i) + " dimension " +
                    std::to_string(d) + " exceeds baseline length " +
                    std::to_string(input_dim()));
      }
      if (owner[d] != -1) {
        SchemaError("dimension " + std::to_string(d) +
                    " is owned by variables " + std::to_string(owner[d]) +
                    " and " + std::to_string(i));
      }
      owner[d] = i;
    }
  }
}

std::string MaskingSpec::Digest() const {
  char buffer[17];
  std::snprintf(buffer, sizeof(buffer), "%016llx",
                static_cast<unsigned long long>(
                    Fnv1a(SerializeMaskingSpec(*this))));
  return buffer;
}

MaskingSpec ElementwiseSpec(std::span<const double> baseline) {
  MaskingSpec spec;
  spec.baseline.assign(baseline.begin(), baseline.end());
  for (std::size_t d = 0; d < baseline.size(); ++d) {
    spec.variables.push_back({"x" + std::to_string(d), {d}, std::nullopt});
  }
  spec.Validate();
  return spec;
}

MaskingSpec GridPatchSpec(int rows, int cols, int channels, int patch_h,
                          int patch_w,
                          std::span<const std::pair<int, int>> patches,
                          std::span<const double> baseline) {
  if (rows <= 0 || cols <= 0 || channels <= 0 || patch_h <= 0 ||
      patch_w <= 0) {
    throw Error(ErrorKind::kInvalidArgument, "grid sizes must be positive");
  }
  MaskingSpec spec;
  spec.baseline.assign(baseline.begin(), baseline.end());
  for (const auto& [pr, pc] : patches) {
    PatchRect rect{pr * patch_h, pc * patch_w, patch_h, patch_w};
    if (rect.row + rect.height > rows || rect.col + rect.width > cols ||
        pr < 0 || pc < 0) {
      throw Error(ErrorKind::kInvalidArgument, "patch outside the grid");
    }
    MaskVariable var;
    var.name = "patch_" + std::to_string(pr) + "_" + std::to_string(pc);
    var.patch = rect;
    for (int r = rect.row; r < rect.row + rect.height; ++r) {
      for (int c = rect.col; c < rect.col + rect.width; ++c) {
        for (int ch = 0; ch < channels; ++ch) {
          var.dims.push_back(
              static_cast<std::size_t>((r * cols + c) * channels + ch));
        }
      }
    }
    spec.variables.push_back(std::move(var));
  }
  spec.Validate();
  return spec;
}

std::vector<double> MeanBaseline(
    std::span<const std::vector<double>> samples) {
  if (samples.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "no samples for the baseline");
  }
  std::vector<double> mean(samples.front().size(), 0.0);
  for (const auto& s : samples) {
    if (s.size() != mean.size()) {
      throw Error(ErrorKind::kDimension, "samples differ in dimension");
    }
    for (std::size_t d = 0; d < s.size(); ++d) mean[d] += s[d];
  }
  for (double& m : mean) m /= static_cast<double>(samples.size());
  return mean;
}

std::vector<double> MaskInput(std::span<const double> x, SubsetMask mask,
                              const MaskingSpec& spec) {
  if (x.size() != spec.input_dim()) {
    throw Error(ErrorKind::kDimension,
                "input has " + std::to_string(x.size()) +
                    " dimensions, masking spec expects " +
                    std::to_string(spec.input_dim()));
  }
  if (mask.n() != spec.n()) {
    throw Error(ErrorKind::kDimension, "mask size does not match the spec");
  }
  std::vector<double> out(x.begin(), x.end());
  for (int i = 0; i < spec.n(); ++i) {
    if (mask.Contains(i)) continue;
    for (std::size_t d : spec.variables[i].dims) out[d] = spec.baseline[d];
  }
  return out;
}

std::string SerializeMaskingSpec(const MaskingSpec& spec) {
  json vars = json::array();
  for (const MaskVariable& var : spec.variables) {
    json entry = {{"name", var.name}, {"dims", var.dims}};
    if (var.patch) {
      entry["patch"] = {{"row", var.patch->row},
                        {"col", var.patch->col},
                        {"height", var.patch->height},
                        {"width", var.patch->width}};
    }
    vars.push_back(std::move(entry));
  }
  std::string baseline = "[";
  for (std::size_t d = 0; d < spec.baseline.size(); ++d) {
    baseline += (d ? ", " : "") + FormatReal(spec.baseline[d]);
  }
  baseline += "]";
  return "{\n  \"format_version\": " + std::to_string(kFormatVersion) +
         ",\n  \"n\": " + std::to_string(spec.n()) +
         ",\n  \"variables\": " + vars.dump() +
         ",\n  \"baseline\": " + baseline + "\n}\n";
}

MaskingSpec ParseMaskingSpec(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::kParse, std::string("masking spec: ") + e.what());
  }
  MaskingSpec spec;
  try {
    for (const json& entry : doc.at("variables")) {
      MaskVariable var;
      var.name = entry.value("name", std::string());
      var.dims = entry.at("dims").get<std::vector<std::size_t>>();
      if (auto it = entry.find("patch"); it != entry.end()) {
        var.patch = PatchRect{it->at("row").get<int>(), it->at("col").get<int>(),
                              it->at("height").get<int>(),
                              it->at("width").get<int>()};
      }
      spec.variables.push_back(std::move(var));
    }
    spec.baseline = doc.at("baseline").get<std::vector<double>>();
    if (doc.contains("n") && doc.at("n").get<int>() != spec.n()) {
      SchemaError("field 'n' disagrees with the variable list");
    }
  } catch (const json::exception& e) {
    SchemaError(e.what());
  }
  spec.Validate();
  return spec;
}

void WriteMaskingSpec(const MaskingSpec& spec,
                      const std::filesystem::path& path) {
  WriteTextFile(path, SerializeMaskingSpec(spec));
}

MaskingSpec ReadMaskingSpec(const std::filesystem::path& path) {
  return ParseMaskingSpec(ReadTextFile(path));
}

}  // namespace andor
