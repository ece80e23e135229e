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

#include "andor/value_table.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <utility>
#include <vector>

#include "andor/error.h"
#include "json.hpp"

namespace andor {
namespace {

using nlohmann::json;

int LineOf(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + byte,
                                         '\n'));
}

[[noreturn]] void SchemaError(const std::string& message) {
  throw Error(ErrorKind::kSchema, "value table: " + message);
}

const json& Field(const json& doc, const char* name) {
  auto it = doc.find(name);
  if (it == doc.end()) SchemaError(std::string("missing field '") + name + "'");
  return *it;
}

}  // namespace

std::string ValueTable::Meta(std::string_view key) const {
  auto it = metadata.find(std::string(key));
  return it == metadata.end() ? std::string() : it->second;
}

double LogOdds(double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw Error(ErrorKind::kDomain, "probability outside [0, 1]");
  }
  const double clamped =
      std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp);
  return std::log(clamped / (1.0 - clamped));
}

double MaxLogOdds() { return LogOdds(1.0); }

double LogOddsFromLogits(std::span<const double> logits, int y,
                         ProbabilityLink link) {
  const int classes = static_cast<int>(logits.size());
  if (classes == 0) throw Error(ErrorKind::kDimension, "no logits");
  double odds = 0.0;
  if (classes == 1) {
    if (y != 0 && y != 1) {
      throw Error(ErrorKind::kInvalidArgument,
                  "single-logit models have classes 0 and 1");
    }
    odds = y == 1 ? logits[0] : -logits[0];
  } else {
    if (y < 0 || y >= classes) {
      throw Error(ErrorKind::kInvalidArgument, "class index out of range");
    }
    if (link == ProbabilityLink::kSigmoid) {
      odds = logits[y];
    } else {
      // log p_y - log(1 - p_y) = z_y - logsumexp_{j != y} z_j.
      double peak = -std::numeric_limits<double>::infinity();
      for (int j = 0; j < classes; ++j) {
        if (j != y) peak = std::max(peak, logits[j]);
      }
      double sum = 0.0;
      for (int j = 0; j < classes; ++j) {
        if (j != y) sum += std::exp(logits[j] - peak);
      }
      odds = logits[y] - (peak + std::log(sum));
    }
  }
  if (std::isnan(odds)) {
    throw Error(ErrorKind::kDomain, "logits are not finite");
  }
  const double limit = MaxLogOdds();
  return std::clamp(odds, -limit, limit);
}

std::string FormatReal(double value) {
  char buffer[64];
  auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value,
                                 std::chars_format::general, 17);
  return std::string(buffer, end);
}

std::string SerializeTable(const ValueTable& table) {
  json meta = json::object();
  for (const auto& [key, value] : table.metadata) meta[key] = value;
  std::ostringstream out;
  out << "{\n";
  out << "  \"format_version\": " << kFormatVersion << ",\n";
  out << "  \"n\": " << table.n() << ",\n";
  out << "  \"label\": " << json(table.label).dump() << ",\n";
  out << "  \"metadata\": " << meta.dump() << ",\n";
  out << "  \"values\": [";
  const auto values = table.values.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    out << (i % 8 == 0 ? "\n    " : " ") << FormatReal(values[i])
        << (i + 1 < values.size() ? "," : "");
  }
  out << "\n  ]\n}\n";
  return out.str();
}

ValueTable ParseTable(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::kParse,
                "value table: line " + std::to_string(LineOf(text, e.byte)) +
                    ": " + e.what());
  }
  if (!doc.is_object()) SchemaError("top level must be an object");

  const json& version = Field(doc, "format_version");
  if (!version.is_number_integer() || version.get<int>() > kFormatVersion) {
    SchemaError("unsupported format_version " + version.dump());
  }
  const json& n_field = Field(doc, "n");
  if (!n_field.is_number_integer()) SchemaError("field 'n' must be an integer");
  const int n = n_field.get<int>();
  if (n < 1 || n > kMaxVariables) {
    SchemaError("field 'n' out of range: " + std::to_string(n));
  }

  ValueTable table{LatticeArray(n), {}, {}};
  if (auto it = doc.find("label"); it != doc.end()) {
    if (!it->is_string()) SchemaError("field 'label' must be a string");
    table.label = it->get<std::string>();
  }
  if (auto it = doc.find("metadata"); it != doc.end()) {
    if (!it->is_object()) SchemaError("field 'metadata' must be an object");
    for (const auto& [key, value] : it->items()) {
      table.metadata[key] =
          value.is_string() ? value.get<std::string>() : value.dump();
    }
  }

  const json& values = Field(doc, "values");
  if (!values.is_array()) SchemaError("field 'values' must be an array");
  if (values.size() != LatticeSize(n)) {
    SchemaError("expected " + std::to_string(LatticeSize(n)) +
                " values for n=" + std::to_string(n) + ", found " +
                std::to_string(values.size()));
  }
  std::vector<double> parsed(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!values[i].is_number()) {
      SchemaError("values[" + std::to_string(i) + "] is not a number");
    }
    parsed[i] = values[i].get<double>();
  }
  table.values = LatticeArray(n, std::move(parsed));
  return table;
}

std::string ReadTextFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::kInputNotFound,
                "cannot open '" + path.string() + "'");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void WriteTextFile(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw Error(ErrorKind::kIo, "cannot write '" + tmp.string() + "'");
    }
    out << text;
    if (!out) throw Error(ErrorKind::kIo, "write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void WriteTable(const ValueTable& table, const std::filesystem::path& path) {
  WriteTextFile(path, SerializeTable(table));
}

ValueTable ReadTable(const std::filesystem::path& path) {
  const std::string text = ReadTextFile(path);
  try {
    return ParseTable(text);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

}  // namespace andor
