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

#include "andor/report.h"

#include <bit>
#include <optional>
#include <sstream>

#include "andor/error.h"
#include "andor/value_table.h"
#include "json.hpp"

namespace andor {
namespace {

using Json = nlohmann::json;

constexpr Family kFamilies[] = {Family::kAnd, Family::kOr};

Json Values(const LatticeArray& a) {
  return Json(std::vector<double>(a.values().begin(), a.values().end()));
}

Json Optional(const std::optional<double>& value) {
  return value ? Json(*value) : Json(nullptr);
}

std::string CsvValue(const std::optional<double>& value) {
  return value ? FormatReal(*value) : std::string(kAbsent);
}

void CsvRow(std::ostringstream& out, const std::string& layer, int order,
            Family family, const char* metric,
            const std::optional<double>& value) {
  out << layer << ',' << order << ',' << FamilyName(family) << ',' << metric
      << ',' << CsvValue(value) << '\n';
}

constexpr char kCsvHeader[] = "layer,order,family,metric,value\n";

Json SalientJson(const SalientIndex& index) {
  Json doc;
  doc["n"] = index.n;
  doc["tau"] = index.tau;
  doc["layer"] = index.layer;
  doc["and"] = index.and_sets;
  doc["or"] = index.or_sets;
  doc["size"] = index.size();
  return doc;
}

LatticeArray ParseValues(const Json& values, int n, const char* name) {
  std::vector<double> out = values.get<std::vector<double>>();
  if (out.size() != LatticeSize(n)) {
    throw Error(ErrorKind::kSchema,
                std::string("spectrum ") + name + ": expected " +
                    std::to_string(LatticeSize(n)) + " values, found " +
                    std::to_string(out.size()));
  }
  return LatticeArray(n, std::move(out));
}

}  // namespace

std::string ExtractionDocument(const Extraction& extraction) {
  Json doc;
  doc["format_version"] = kFormatVersion;
  doc["kappa"] = extraction.kappa;
  doc["spectrum"] = {{"n", extraction.spectrum.n()},
                     {"and", Values(extraction.spectrum.and_effects)},
                     {"or", Values(extraction.spectrum.or_effects)}};
  doc["salient"] = SalientJson(extraction.salient);
  doc["loss"] = L1Loss(extraction.spectrum);
  doc["iterations"] = extraction.decomposition.iterations;
  doc["converged"] = extraction.decomposition.converged;
  return doc.dump(2) + "\n";
}

InteractionSpectrum ParseSpectrumDocument(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorKind::kParse, std::string("spectrum: ") + e.what());
  }
  try {
    const Json& body = doc.contains("spectrum") ? doc.at("spectrum") : doc;
    const int n = body.at("n").get<int>();
    if (n < 1 || n > kMaxVariables) {
      throw Error(ErrorKind::kSchema, "spectrum: n out of range");
    }
    return {ParseValues(body.at("and"), n, "and"),
            ParseValues(body.at("or"), n, "or")};
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::kSchema, std::string("spectrum: ") + e.what());
  }
}

std::string SalientDocument(const SalientIndex& index) {
  return SalientJson(index).dump(2) + "\n";
}

std::string DecompositionDocument(const DecompositionResult& result) {
  Json doc;
  doc["format_version"] = kFormatVersion;
  doc["n"] = result.spectrum.n();
  doc["kappa"] = result.params.kappa;
  doc["gamma"] = Values(result.params.gamma);
  doc["delta"] = Values(result.params.delta);
  doc["and"] = Values(result.spectrum.and_effects);
  doc["or"] = Values(result.spectrum.or_effects);
  doc["loss"] = L1Loss(result.spectrum);
  doc["loss_history"] = result.loss_history;
  doc["iterations"] = result.iterations;
  doc["converged"] = result.converged;
  return doc.dump(2) + "\n";
}

std::string SparsityCsv(const std::vector<SparsityPoint>& points) {
  std::ostringstream out;
  out << "rank,mask,order,family,magnitude,salient\n";
  for (std::size_t r = 0; r < points.size(); ++r) {
    const SparsityPoint& p = points[r];
    out << r + 1 << ',' << p.mask << ',' << std::popcount(p.mask) << ','
        << FamilyName(p.family) << ',' << FormatReal(p.magnitude) << ','
        << (p.salient ? 1 : 0) << '\n';
  }
  return out.str();
}

std::string TrackCsv(const TrackReport& report) {
  std::ostringstream out;
  out << kCsvHeader;
  for (const LayerReport& layer : report.layers) {
    for (Family family : kFamilies) {
      for (int m = 1; m <= report.n; ++m) {
        const TrackCell& c = layer.mean.cell(family, m);
        const Ratios ratios = CompletenessRedundancy(c);
        const std::string& id = layer.layer_id;
        CsvRow(out, id, m, family, "all_layer", c.all_layer);
        CsvRow(out, id, m, family, "all_final", c.all_final);
        CsvRow(out, id, m, family, "overlap", c.overlap);
        CsvRow(out, id, m, family, "forget", c.forget);
        CsvRow(out, id, m, family, "new", c.fresh);
        CsvRow(out, id, m, family, "completeness", ratios.completeness);
        CsvRow(out, id, m, family, "redundancy", ratios.redundancy);
      }
    }
  }
  return out.str();
}

std::string TrackDocument(const TrackReport& report) {
  Json doc;
  doc["format_version"] = kFormatVersion;
  doc["n"] = report.n;
  doc["final_layer"] = report.final_layer;
  doc["samples"] = report.samples;
  doc["identity_error"] = report.identity_error;
  doc["identity_ok"] = report.identity_ok;
  std::vector<int> orders;
  for (int m = 1; m <= report.n; ++m) orders.push_back(m);
  doc["panels"] = Json::array();
  for (Family family : kFamilies) {
    Json panel;
    panel["family"] = FamilyName(family);
    panel["orders"] = orders;
    panel["layers"] = Json::array();
    for (const LayerReport& layer : report.layers) {
      Json series;
      series["id"] = layer.layer_id;
      series["scale"] = layer.scale;
      series["tau"] = layer.tau;
      series["identity_error"] = layer.identity_error;
      Json all_layer, all_final, overlap, forget, fresh, completeness,
          redundancy;
      for (int m = 1; m <= report.n; ++m) {
        const TrackCell& c = layer.mean.cell(family, m);
        const Ratios ratios = CompletenessRedundancy(c);
        all_layer.push_back(c.all_layer);
        all_final.push_back(c.all_final);
        overlap.push_back(c.overlap);
        forget.push_back(c.forget);
        fresh.push_back(c.fresh);
        completeness.push_back(Optional(ratios.completeness));
        redundancy.push_back(Optional(ratios.redundancy));
      }
      series["all_layer"] = all_layer;
      series["all_final"] = all_final;
      series["overlap"] = overlap;
      series["forget"] = forget;
      series["new"] = fresh;
      series["completeness"] = completeness;
      series["redundancy"] = redundancy;
      panel["layers"].push_back(series);
    }
    doc["panels"].push_back(panel);
  }
  return doc.dump(2) + "\n";
}

std::string IouCsv(const IouReport& report, const std::string& label) {
  std::ostringstream out;
  out << kCsvHeader;
  for (Family family : kFamilies) {
    for (int m = 1; m <= report.n; ++m) {
      const IouCell& cell = report.cell(family, m);
      CsvRow(out, label, m, family, "iou", cell.mean);
      CsvRow(out, label, m, family, "samples",
             static_cast<double>(cell.samples));
    }
  }
  return out.str();
}

std::string IouDocument(const IouReport& report) {
  Json doc;
  doc["format_version"] = kFormatVersion;
  doc["n"] = report.n;
  doc["samples"] = report.samples;
  doc["panels"] = Json::array();
  for (Family family : kFamilies) {
    Json iou, counts;
    std::vector<int> orders;
    for (int m = 1; m <= report.n; ++m) {
      orders.push_back(m);
      iou.push_back(Optional(report.cell(family, m).mean));
      counts.push_back(report.cell(family, m).samples);
    }
    doc["panels"].push_back({{"family", FamilyName(family)},
                             {"orders", orders},
                             {"iou", iou},
                             {"samples", counts}});
  }
  return doc.dump(2) + "\n";
}

std::string StabilityCsv(const StabilityReport& report,
                         const std::string& label) {
  std::ostringstream out;
  out << kCsvHeader;
  for (Family family : kFamilies) {
    const int f = static_cast<int>(family);
    for (int m = 1; m <= report.n; ++m) {
      CsvRow(out, label, m, family, "stability", report.values[f][m]);
    }
  }
  return out.str();
}

std::string StabilityDocument(const StabilityReport& report) {
  Json doc;
  doc["format_version"] = kFormatVersion;
  doc["n"] = report.n;
  doc["ensemble_size"] = report.ensemble_size;
  doc["sigma"] = report.sigma;
  doc["panels"] = Json::array();
  for (Family family : kFamilies) {
    const int f = static_cast<int>(family);
    Json values, counts;
    std::vector<int> orders;
    for (int m = 1; m <= report.n; ++m) {
      orders.push_back(m);
      values.push_back(Optional(report.values[f][m]));
      counts.push_back(report.samples[f][m]);
    }
    doc["panels"].push_back({{"family", FamilyName(family)},
                             {"orders", orders},
                             {"stability", values},
                             {"samples", counts}});
  }
  return doc.dump(2) + "\n";
}

std::string KappaSweepDocument(const KappaSweep& sweep) {
  Json doc;
  doc["format_version"] = kFormatVersion;
  doc["ratios"] = sweep.ratios;
  doc["salient"] = Json::array();
  for (const SalientIndex& index : sweep.salient) {
    doc["salient"].push_back(SalientJson(index));
  }
  Json agreement = Json::array();
  for (const auto& row : sweep.agreement) {
    Json line = Json::array();
    for (const auto& value : row) line.push_back(Optional(value));
    agreement.push_back(line);
  }
  doc["agreement"] = agreement;
  return doc.dump(2) + "\n";
}

}  // namespace andor
