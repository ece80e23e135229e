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

#include "andor/pipeline.h"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <map>
#include <random>
#include <set>
#include <utility>

#include "andor/error.h"
#include "json.hpp"

namespace andor {
namespace {

using Json = nlohmann::json;

int ResolveWorkers(int workers) {
  return workers > 0 ? workers : omp_get_max_threads();
}

// Runs body(i) for i in [0, count) on up to `workers` threads and rethrows the
// first failure in index order.
template <typename Body>
void ParallelFor(int count, int workers, Body&& body) {
  std::vector<std::exception_ptr> errors(count);
#pragma omp parallel for schedule(dynamic) num_threads(ResolveWorkers(workers))
  for (int i = 0; i < count; ++i) {
    try {
      body(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& error : errors) {
    if (error) std::rethrow_exception(error);
  }
}

struct Decomposed {
  DecompositionResult result;
  double kappa = 0.0;
};

Decomposed Decompose(const ValueTable& table, const ExtractionConfig& config,
                     bool with_residuals) {
  Decomposed out;
  out.kappa = with_residuals && config.kappa_ratio > 0.0
                  ? DefaultKappa(table.values, config.kappa_ratio)
                  : 0.0;
  out.result = Optimize(table.values, out.kappa, config.optimizer);
  return out;
}

struct Selected {
  InteractionSpectrum spectrum;
  SalientIndex index;
};

// Threshold `tau` (absolute) with the configured merge placement.
Selected SelectWithMerge(const InteractionSpectrum& raw, double tau,
                         const ExtractionConfig& config,
                         const std::string& layer) {
  if (!config.merge_first_order) {
    return {raw, SelectSalientAbove(raw, tau, layer)};
  }
  InteractionSpectrum merged = MergeFirstOrder(raw);
  if (config.merge_before_threshold) {
    SalientIndex index = SelectSalientAbove(merged, tau, layer);
    return {std::move(merged), std::move(index)};
  }
  SalientIndex index = SelectSalientAbove(raw, tau, layer);
  if (index.n >= 1) {
    MaskSet& singles = index.and_sets[1];
    singles.insert(singles.end(), index.or_sets[1].begin(),
                   index.or_sets[1].end());
    std::sort(singles.begin(), singles.end());
    singles.erase(std::unique(singles.begin(), singles.end()), singles.end());
    index.or_sets[1].clear();
  }
  return {std::move(merged), std::move(index)};
}

// The spectrum the threshold is measured on.
const InteractionSpectrum& ThresholdBasis(const InteractionSpectrum& raw,
                                          const InteractionSpectrum& merged,
                                          const ExtractionConfig& config) {
  return config.merge_first_order && config.merge_before_threshold ? merged
                                                                   : raw;
}

void CheckTauRatio(double ratio) {
  if (!(ratio > 0.0)) {
    throw Error(ErrorKind::kDomain, "tau ratio must be > 0");
  }
}

std::string LayerOf(const ValueTable& table) {
  return table.Meta(kMetaLayer);
}

void CheckComparable(const ValueTable& a, const ValueTable& b,
                     const std::string& what) {
  if (a.n() != b.n()) {
    throw Error(ErrorKind::kComparability,
                what + ": n differs (" + std::to_string(a.n()) + " vs " +
                    std::to_string(b.n()) + ")");
  }
  const std::string da = a.Meta(kMetaMaskingDigest);
  const std::string db = b.Meta(kMetaMaskingDigest);
  if (!da.empty() && !db.empty() && da != db) {
    throw Error(ErrorKind::kComparability,
                what + ": masking digest differs (" + da + " vs " + db + ")");
  }
}

}  // namespace

std::string_view TauScopeName(TauScope scope) {
  return scope == TauScope::kLayer ? "layer" : "global";
}

TauScope ParseTauScope(std::string_view name) {
  if (name == "layer") return TauScope::kLayer;
  if (name == "global") return TauScope::kGlobal;
  throw Error(ErrorKind::kConfig, "unknown tau scope '" + std::string(name) +
                                      "' (expected layer or global)");
}

Extraction ExtractInteractions(const ValueTable& table,
                               const ExtractionConfig& config) {
  CheckTauRatio(config.tau_ratio);
  if (config.kappa_ratio < 0.0) {
    throw Error(ErrorKind::kDomain, "kappa ratio must be >= 0");
  }
  Decomposed d = Decompose(table, config, true);
  const InteractionSpectrum& raw = d.result.spectrum;
  const InteractionSpectrum merged =
      config.merge_first_order ? MergeFirstOrder(raw) : raw;
  const double tau =
      config.tau_ratio * MaxEffectMagnitude(ThresholdBasis(raw, merged, config));
  Selected selected = SelectWithMerge(raw, tau, config, LayerOf(table));
  Extraction out;
  out.kappa = d.kappa;
  out.spectrum = std::move(selected.spectrum);
  out.salient = std::move(selected.index);
  out.decomposition = std::move(d.result);
  return out;
}

double ReconstructionError(const LatticeArray& v, const Extraction& extraction) {
  const LatticeArray recon = ReconstructAll(extraction.spectrum);
  const LatticeArray& delta = extraction.decomposition.params.delta;
  double worst = 0.0;
  for (std::size_t t = 0; t < v.size(); ++t) {
    const double target = v[t] - delta[t];
    worst = std::max(worst,
                     std::abs(recon[t] - target) / std::max(1.0, std::abs(v[t])));
  }
  return worst;
}

std::vector<SparsityPoint> SparsityCurve(const InteractionSpectrum& spectrum,
                                         double tau) {
  std::vector<SparsityPoint> points;
  const std::size_t size = spectrum.and_effects.size();
  points.reserve(2 * (size - 1));
  for (Family family : {Family::kAnd, Family::kOr}) {
    const LatticeArray& effects = spectrum.effects(family);
    for (std::size_t s = 1; s < size; ++s) {
      const double magnitude = std::abs(effects[s]);
      points.push_back({static_cast<std::uint32_t>(s), family, magnitude,
                        magnitude > tau});
    }
  }
  std::stable_sort(points.begin(), points.end(),
                   [](const SparsityPoint& a, const SparsityPoint& b) {
                     return a.magnitude > b.magnitude;
                   });
  return points;
}

MaskSet FlatSalientSet(const SalientIndex& index) {
  MaskSet out;
  for (int m = 0; m <= index.n; ++m) {
    for (std::uint32_t mask : index.and_sets[m]) out.push_back(mask);
    for (std::uint32_t mask : index.or_sets[m]) out.push_back(mask | (1u << 31));
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---- Traces ---------------------------------------------------------------

std::string SampleKey(const ValueTable& table) {
  std::string id = table.Meta(kMetaSample);
  return id.empty() ? table.label : id;
}

void WriteTrace(const Trace& trace, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  Json doc;
  doc["format_version"] = kFormatVersion;
  doc["final"] = trace.final_layer;
  doc["layers"] = Json::array();
  for (const TraceLayer& layer : trace.layers) {
    Json files = Json::array();
    std::filesystem::create_directories(dir / layer.id);
    for (std::size_t i = 0; i < layer.tables.size(); ++i) {
      const std::string name =
          layer.id + "/table_" + std::to_string(i) + ".json";
      WriteTable(layer.tables[i], dir / name);
      files.push_back(name);
    }
    doc["layers"].push_back({{"id", layer.id}, {"tables", files}});
  }
  WriteTextFile(dir / "trace.json", doc.dump(2) + "\n");
}

Trace ReadTrace(const std::filesystem::path& dir) {
  const std::filesystem::path index = dir / "trace.json";
  if (!std::filesystem::exists(index)) {
    throw Error(ErrorKind::kInputNotFound,
                "trace index not found: " + index.string());
  }
  Json doc;
  try {
    doc = Json::parse(ReadTextFile(index));
  } catch (const Json::parse_error& e) {
    throw Error(ErrorKind::kParse, index.string() + ": " + e.what());
  }
  Trace trace;
  try {
    const int version = doc.at("format_version").get<int>();
    if (version != kFormatVersion) {
      throw Error(ErrorKind::kSchema, index.string() +
                                          ": unsupported format_version " +
                                          std::to_string(version));
    }
    trace.final_layer = doc.at("final").get<std::string>();
    for (const Json& entry : doc.at("layers")) {
      TraceLayer layer;
      layer.id = entry.at("id").get<std::string>();
      for (const Json& file : entry.at("tables")) {
        layer.tables.push_back(ReadTable(dir / file.get<std::string>()));
      }
      trace.layers.push_back(std::move(layer));
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::kSchema, index.string() + ": " + e.what());
  }
  return trace;
}

// ---- Tracking -------------------------------------------------------------

TrackReport TrackLayers(const Trace& trace, const TrackOptions& options) {
  const ExtractionConfig& config = options.extraction;
  CheckTauRatio(config.tau_ratio);
  std::set<std::string> ids;
  int final_index = -1;
  for (std::size_t l = 0; l < trace.layers.size(); ++l) {
    if (!ids.insert(trace.layers[l].id).second) {
      throw Error(ErrorKind::kSchema,
                  "duplicate layer id '" + trace.layers[l].id + "'");
    }
    if (trace.layers[l].id == trace.final_layer) {
      final_index = static_cast<int>(l);
    }
  }
  if (final_index < 0) {
    throw Error(ErrorKind::kConfig, "trace has no final layer '" +
                                        trace.final_layer + "'");
  }
  const TraceLayer& final_layer = trace.layers[final_index];
  if (final_layer.tables.empty()) {
    throw Error(ErrorKind::kSchema, "final layer has no tables");
  }

  TrackReport report;
  report.final_layer = trace.final_layer;
  report.n = final_layer.tables.front().n();
  std::map<std::string, int> sample_slot;
  for (const ValueTable& table : final_layer.tables) {
    const std::string key = SampleKey(table);
    if (!sample_slot.emplace(key, static_cast<int>(report.samples.size()))
             .second) {
      throw Error(ErrorKind::kSchema, "duplicate sample '" + key +
                                          "' in layer " + final_layer.id);
    }
    report.samples.push_back(key);
  }
  const int num_layers = static_cast<int>(trace.layers.size());
  const int num_samples = static_cast<int>(report.samples.size());

  // tables[l][s] in final-layer sample order.
  std::vector<std::vector<const ValueTable*>> tables(
      num_layers, std::vector<const ValueTable*>(num_samples, nullptr));
  for (int l = 0; l < num_layers; ++l) {
    const TraceLayer& layer = trace.layers[l];
    if (static_cast<int>(layer.tables.size()) != num_samples) {
      throw Error(ErrorKind::kSchema,
                  "layer " + layer.id + " has " +
                      std::to_string(layer.tables.size()) +
                      " tables, the final layer has " +
                      std::to_string(num_samples));
    }
    for (const ValueTable& table : layer.tables) {
      const auto it = sample_slot.find(SampleKey(table));
      if (it == sample_slot.end()) {
        throw Error(ErrorKind::kSchema, "layer " + layer.id + ": sample '" +
                                            SampleKey(table) +
                                            "' is not in the final layer");
      }
      if (tables[l][it->second] != nullptr) {
        throw Error(ErrorKind::kSchema, "duplicate sample '" + it->first +
                                            "' in layer " + layer.id);
      }
      if (table.n() != report.n) {
        throw Error(ErrorKind::kSchema,
                    "layer " + layer.id + ": n=" + std::to_string(table.n()) +
                        " differs from n=" + std::to_string(report.n));
      }
      CheckComparable(table, final_layer.tables.front(),
                      "layer " + layer.id + " sample " + it->first);
      tables[l][it->second] = &table;
    }
  }

  std::vector<InteractionSpectrum> raw(num_layers * num_samples);
  ParallelFor(num_layers * num_samples, options.workers, [&](int i) {
    const int l = i / num_samples;
    const bool residuals = l != final_index || options.delta_on_final;
    raw[i] = Decompose(*tables[l][i % num_samples], config, residuals)
                 .result.spectrum;
  });

  std::vector<double> scale(num_layers, 0.0);
  std::vector<InteractionSpectrum> normalized(raw.size());
  std::vector<InteractionSpectrum> merged(raw.size());
  double global_max = 0.0;
  for (int l = 0; l < num_layers; ++l) {
    for (int s = 0; s < num_samples; ++s) {
      const LatticeArray& v = tables[l][s]->values;
      scale[l] += std::abs(v.full_value() - v.empty_value());
    }
    scale[l] /= num_samples;
    if (!(scale[l] > 0.0)) scale[l] = 1.0;
    for (int s = 0; s < num_samples; ++s) {
      const int i = l * num_samples + s;
      normalized[i] = Normalize(raw[i], scale[l]);
      merged[i] = config.merge_first_order ? MergeFirstOrder(normalized[i])
                                           : normalized[i];
      global_max = std::max(global_max,
                            MaxEffectMagnitude(ThresholdBasis(
                                normalized[i], merged[i], config)));
    }
  }

  std::vector<Selected> selected(raw.size());
  std::vector<double> tau_sum(num_layers, 0.0);
  for (int l = 0; l < num_layers; ++l) {
    for (int s = 0; s < num_samples; ++s) {
      const int i = l * num_samples + s;
      const double tau =
          options.tau_scope == TauScope::kGlobal
              ? config.tau_ratio * global_max
              : config.tau_ratio * MaxEffectMagnitude(ThresholdBasis(
                                       normalized[i], merged[i], config));
      tau_sum[l] += tau;
      selected[i] =
          SelectWithMerge(normalized[i], tau, config, trace.layers[l].id);
    }
  }

  for (int l = 0; l < num_layers; ++l) {
    LayerReport layer;
    layer.layer_id = trace.layers[l].id;
    layer.scale = scale[l];
    layer.tau = options.tau_scope == TauScope::kGlobal
                    ? config.tau_ratio * global_max
                    : tau_sum[l] / num_samples;
    std::vector<TrackTable> per_sample;
    per_sample.reserve(num_samples);
    for (int s = 0; s < num_samples; ++s) {
      const Selected& here = selected[l * num_samples + s];
      const Selected& last = selected[final_index * num_samples + s];
      per_sample.push_back(
          Track(here.spectrum, here.index, last.spectrum, last.index));
      layer.identity_error =
          std::max(layer.identity_error, IdentityError(per_sample.back()));
    }
    layer.mean = MeanTrack(per_sample);
    layer.identity_error =
        std::max(layer.identity_error, IdentityError(layer.mean));
    report.identity_error = std::max(report.identity_error, layer.identity_error);
    report.layers.push_back(std::move(layer));
  }
  report.identity_ok = report.identity_error <= options.identity_tolerance;
  return report;
}

// ---- IoU ------------------------------------------------------------------

IouReport IouFromIndices(const std::vector<SalientIndex>& a,
                         const std::vector<SalientIndex>& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorKind::kDimension, "IoU needs paired salient indices");
  }
  IouReport report;
  report.n = a.empty() ? 0 : a.front().n;
  for (auto& cells : report.cells) cells.assign(report.n + 1, IouCell{});
  for (int f = 0; f < 2; ++f) {
    const Family family = f == 0 ? Family::kAnd : Family::kOr;
    for (int m = 0; m <= report.n; ++m) {
      double sum = 0.0;
      int count = 0;
      for (std::size_t k = 0; k < a.size(); ++k) {
        if (a[k].n != report.n || b[k].n != report.n) {
          throw Error(ErrorKind::kDimension, "IoU over mixed n");
        }
        const std::optional<double> iou =
            Iou(a[k].set(family, m), b[k].set(family, m));
        if (iou) {
          sum += *iou;
          ++count;
        }
      }
      IouCell& cell = report.cells[f][m];
      cell.samples = count;
      if (count > 0) cell.mean = sum / count;
    }
  }
  return report;
}

IouReport CompareModels(const std::vector<ValueTable>& a,
                        const std::vector<ValueTable>& b,
                        const ExtractionConfig& config, int workers) {
  std::map<std::string, const ValueTable*> by_key;
  for (const ValueTable& table : b) by_key.emplace(SampleKey(table), &table);
  std::vector<std::pair<const ValueTable*, const ValueTable*>> pairs;
  std::vector<std::string> keys;
  for (const ValueTable& table : a) {
    const auto it = by_key.find(SampleKey(table));
    if (it == by_key.end()) continue;
    CheckComparable(table, *it->second, "sample " + it->first);
    pairs.emplace_back(&table, it->second);
    keys.push_back(it->first);
  }
  if (pairs.empty()) {
    throw Error(ErrorKind::kComparability,
                "the two table sets share no sample");
  }
  const int count = static_cast<int>(pairs.size());
  std::vector<SalientIndex> left(count), right(count);
  ParallelFor(2 * count, workers, [&](int i) {
    const int k = i / 2;
    if (i % 2 == 0) {
      left[k] = ExtractInteractions(*pairs[k].first, config).salient;
    } else {
      right[k] = ExtractInteractions(*pairs[k].second, config).salient;
    }
  });
  IouReport report = IouFromIndices(left, right);
  report.samples = std::move(keys);
  return report;
}

// ---- Stability ------------------------------------------------------------

StabilityReport MeasureStability(const std::vector<StabilitySample>& samples,
                                 const ExtractionConfig& config, double sigma,
                                 int workers) {
  if (samples.empty()) {
    throw Error(ErrorKind::kConfig, "stability needs at least one sample");
  }
  StabilityReport report;
  report.sigma = sigma;
  report.n = samples.front().clean.n();
  report.ensemble_size = static_cast<int>(samples.front().perturbed.size());
  for (const StabilitySample& sample : samples) {
    if (sample.perturbed.size() < 2) {
      throw Error(ErrorKind::kConfig,
                  "stability needs K >= 2 perturbed tables per sample, got " +
                      std::to_string(sample.perturbed.size()));
    }
    report.ensemble_size =
        std::min(report.ensemble_size, static_cast<int>(sample.perturbed.size()));
    CheckComparable(sample.clean, samples.front().clean, "stability sample");
    for (const ValueTable& table : sample.perturbed) {
      CheckComparable(sample.clean, table, "perturbed table");
    }
  }

  // Flattened jobs: per sample, the clean table then its perturbed tables.
  std::vector<std::pair<int, int>> jobs;
  for (int s = 0; s < static_cast<int>(samples.size()); ++s) {
    for (int k = -1; k < static_cast<int>(samples[s].perturbed.size()); ++k) {
      jobs.emplace_back(s, k);
    }
  }
  std::vector<SalientIndex> clean(samples.size());
  std::vector<std::vector<InteractionSpectrum>> ensembles(samples.size());
  for (std::size_t s = 0; s < samples.size(); ++s) {
    ensembles[s].resize(samples[s].perturbed.size());
  }
  ParallelFor(static_cast<int>(jobs.size()), workers, [&](int i) {
    const auto [s, k] = jobs[i];
    if (k < 0) {
      clean[s] = ExtractInteractions(samples[s].clean, config).salient;
    } else {
      ensembles[s][k] =
          ExtractInteractions(samples[s].perturbed[k], config).spectrum;
    }
  });

  for (int f = 0; f < 2; ++f) {
    const Family family = f == 0 ? Family::kAnd : Family::kOr;
    report.values[f].assign(report.n + 1, std::nullopt);
    report.samples[f].assign(report.n + 1, 0);
    for (int m = 0; m <= report.n; ++m) {
      double sum = 0.0;
      int count = 0;
      for (std::size_t s = 0; s < samples.size(); ++s) {
        const std::optional<double> value =
            Stability(ensembles[s], clean[s].set(family, m), family);
        if (value) {
          sum += *value;
          ++count;
        }
      }
      report.samples[f][m] = count;
      if (count > 0) report.values[f][m] = sum / count;
    }
  }
  return report;
}

std::vector<std::vector<double>> PerturbedInputs(std::span<const double> x,
                                                 double sigma, int count,
                                                 std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw Error(ErrorKind::kDomain, "sigma must be >= 0");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<std::vector<double>> out(count,
                                       std::vector<double>(x.begin(), x.end()));
  for (auto& row : out) {
    for (double& value : row) value += sigma * noise(rng);
  }
  return out;
}

// ---- Kappa sweep ----------------------------------------------------------

KappaSweep SweepKappa(const ValueTable& table, const std::vector<double>& ratios,
                      const ExtractionConfig& config) {
  KappaSweep sweep;
  sweep.ratios = ratios;
  for (double ratio : ratios) {
    if (!(ratio > 0.0)) {
      throw Error(ErrorKind::kDomain, "kappa ratios must be > 0");
    }
    ExtractionConfig run = config;
    run.kappa_ratio = ratio;
    sweep.salient.push_back(ExtractInteractions(table, run).salient);
  }
  std::vector<MaskSet> flat;
  for (const SalientIndex& index : sweep.salient) {
    flat.push_back(FlatSalientSet(index));
  }
  sweep.agreement.assign(ratios.size(),
                         std::vector<std::optional<double>>(ratios.size()));
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    for (std::size_t j = 0; j < ratios.size(); ++j) {
      sweep.agreement[i][j] = Iou(flat[i], flat[j]);
    }
  }
  return sweep;
}

// ---- Toy traces -----------------------------------------------------------

Trace BuildToyTrace(const ToyModel& model, const Dataset& train,
                    const std::vector<TraceSample>& samples,
                    const MaskingSpec& spec, const ToyTraceConfig& config) {
  spec.Validate();
  const int n = spec.n();
  const int hidden = model.hidden_layers();
  const std::string digest = spec.Digest();
  Trace trace;
  trace.final_layer = "output";
  trace.layers.resize(hidden + 1);

  std::vector<ProbeModel> probes(hidden);
  ParallelFor(hidden, config.workers, [&](int k) {
    FeatureDump dump;
    dump.layer_id = "hidden" + std::to_string(k);
    dump.num_classes = model.output_dim() == 1 ? 2 : model.output_dim();
    for (std::size_t r = 0; r < train.inputs.size(); ++r) {
      const Eigen::VectorXd h = model.Trace(train.inputs[r])[k];
      dump.rows.push_back({"train" + std::to_string(r), std::nullopt,
                           train.labels[r],
                           std::vector<double>(h.data(), h.data() + h.size())});
    }
    dump.dim = static_cast<int>(dump.rows.front().features.size());
    probes[k] = TrainProbe(dump, config.probe).probe;
  });

  for (int k = 0; k <= hidden; ++k) {
    TraceLayer& layer = trace.layers[k];
    layer.id = k < hidden ? "hidden" + std::to_string(k) : "output";
    layer.tables.resize(samples.size());
  }
  const int count = static_cast<int>(samples.size());
  ParallelFor(count * (hidden + 1), config.workers, [&](int i) {
    const int k = i / count;
    const TraceSample& sample = samples[i % count];
    ValueTable table;
    if (k < hidden) {
      FeatureDump dump;
      dump.layer_id = trace.layers[k].id;
      dump.rows = MaskedFeatureRows(model, k, sample.x, sample.id,
                                    sample.label, spec);
      dump.dim = static_cast<int>(dump.rows.front().features.size());
      dump.num_classes = probes[k].num_classes();
      table = ProbeTable(probes[k], dump, sample.id, sample.label, n,
                         config.link);
    } else {
      table = TableFromModel(model, sample.x, sample.label, spec, config.link);
    }
    table.label = sample.id;
    table.metadata[std::string(kMetaSample)] = sample.id;
    table.metadata[std::string(kMetaLayer)] = trace.layers[k].id;
    table.metadata[std::string(kMetaMaskingDigest)] = digest;
    trace.layers[k].tables[i % count] = std::move(table);
  });
  return trace;
}

}  // namespace andor
