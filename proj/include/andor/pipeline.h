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

#ifndef ANDOR_PIPELINE_H_
#define ANDOR_PIPELINE_H_

// End-to-end drivers: extraction of salient interactions from a value table,
// layer-wise tracking over a trace of tables, cross-model IoU, stability
// under perturbed inputs and kappa sweeps.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "andor/decomposition.h"
#include "andor/masking.h"
#include "andor/metrics.h"
#include "andor/probe.h"
#include "andor/spectrum.h"
#include "andor/toy_model.h"
#include "andor/value_table.h"

namespace andor {

inline constexpr double kDefaultTauRatio = 0.05;
inline constexpr double kDefaultSigma = 0.02;

enum class TauScope { kLayer, kGlobal };
std::string_view TauScopeName(TauScope scope);
// Throws kConfig for names other than "layer" and "global".
TauScope ParseTauScope(std::string_view name);

struct ExtractionConfig {
  // kappa = kappa_ratio * |v(N) - v({})|; 0 disables the residuals.
  double kappa_ratio = kDefaultKappaRatio;
  double tau_ratio = kDefaultTauRatio;
  bool merge_first_order = true;
  // Merge before selecting salient effects; otherwise select on the raw
  // spectrum and move salient singletons to the AND family afterwards.
  bool merge_before_threshold = true;
  OptimizerConfig optimizer;
};

struct Extraction {
  DecompositionResult decomposition;
  double kappa = 0.0;
  // After the optional first-order merge.
  InteractionSpectrum spectrum;
  SalientIndex salient;
};

Extraction ExtractInteractions(const ValueTable& table,
                               const ExtractionConfig& config);

// max_T |reconstruction(T) - (v(T) - delta_T)| / max(1, |v(T)|).
double ReconstructionError(const LatticeArray& v, const Extraction& extraction);

struct SparsityPoint {
  std::uint32_t mask;
  Family family;
  double magnitude;
  bool salient;
};

// Non-empty effects of both families by decreasing magnitude (ties by
// family, then mask).
std::vector<SparsityPoint> SparsityCurve(const InteractionSpectrum& spectrum,
                                         double tau);

// One flat set over both families: OR masks carry bit 31.
MaskSet FlatSalientSet(const SalientIndex& index);

// ---- Layer tracking -------------------------------------------------------

struct TraceLayer {
  std::string id;
  // One table per sample, matched across layers by sample id.
  std::vector<ValueTable> tables;
};

struct Trace {
  std::vector<TraceLayer> layers;
  std::string final_layer;
};

// trace.json: {"format_version", "final", "layers": [{"id", "tables": [...]}]}
// with table paths relative to the directory.
void WriteTrace(const Trace& trace, const std::filesystem::path& dir);
Trace ReadTrace(const std::filesystem::path& dir);

// Sample key of a table: the sample_id metadata, or the label.
std::string SampleKey(const ValueTable& table);

struct TrackOptions {
  ExtractionConfig extraction;
  // Learn residuals on the final layer too.
  bool delta_on_final = false;
  TauScope tau_scope = TauScope::kLayer;
  // Parallel sample workers; 0 uses every available thread.
  int workers = 0;
  double identity_tolerance = 1e-10;
};

struct LayerReport {
  std::string layer_id;
  // Mean over samples of |v(N) - v({})|; 1 when that mean is 0.
  double scale = 0.0;
  // The shared tau under the global scope, else the mean per-sample tau.
  double tau = 0.0;
  // Per-sample tables averaged over samples.
  TrackTable mean;
  double identity_error = 0.0;
};

struct TrackReport {
  std::string final_layer;
  std::vector<std::string> samples;
  std::vector<LayerReport> layers;
  // Worst identity error over every sample, layer, order and family.
  double identity_error = 0.0;
  bool identity_ok = true;
  int n = 0;
};

// Throws kConfig when the final layer is missing, kSchema when layers cover
// different samples or n, kComparability on masking digest mismatches.
// identity_ok records whether every identity error is within the tolerance.
TrackReport TrackLayers(const Trace& trace, const TrackOptions& options);

// ---- Cross-model IoU ------------------------------------------------------

struct IouCell {
  std::optional<double> mean;
  int samples = 0;  // samples where the IoU is defined
};

struct IouReport {
  int n = 0;
  std::vector<std::string> samples;
  std::array<std::vector<IouCell>, 2> cells;  // [family][order]

  const IouCell& cell(Family family, int order) const {
    return cells[static_cast<int>(family)][order];
  }
};

// Per-order IoU between paired salient indices, averaged over pairs.
IouReport IouFromIndices(const std::vector<SalientIndex>& a,
                         const std::vector<SalientIndex>& b);

// Extracts both table sets and compares them on their shared samples.
// Throws kComparability on n or masking digest mismatches or when no sample
// is shared.
IouReport CompareModels(const std::vector<ValueTable>& a,
                        const std::vector<ValueTable>& b,
                        const ExtractionConfig& config, int workers = 0);

// ---- Stability ------------------------------------------------------------

struct StabilitySample {
  ValueTable clean;
  std::vector<ValueTable> perturbed;
};

struct StabilityReport {
  int n = 0;
  int ensemble_size = 0;
  double sigma = kDefaultSigma;
  // [family][order], averaged over samples with a non-empty salient set.
  std::array<std::vector<std::optional<double>>, 2> values;
  std::array<std::vector<int>, 2> samples;
};

// Salient sets come from the clean table, the ensemble from the perturbed
// ones. Throws kConfig when any sample has fewer than 2 perturbed tables.
StabilityReport MeasureStability(const std::vector<StabilitySample>& samples,
                                 const ExtractionConfig& config, double sigma,
                                 int workers = 0);

// Perturbed copies x + N(0, sigma^2 I), seeded.
std::vector<std::vector<double>> PerturbedInputs(std::span<const double> x,
                                                 double sigma, int count,
                                                 std::uint64_t seed);

// ---- Kappa sweep ----------------------------------------------------------

struct KappaSweep {
  std::vector<double> ratios;
  std::vector<SalientIndex> salient;
  // Pairwise IoU of the flat salient sets.
  std::vector<std::vector<std::optional<double>>> agreement;
};

// Throws kDomain unless every ratio is > 0.
KappaSweep SweepKappa(const ValueTable& table, const std::vector<double>& ratios,
                      const ExtractionConfig& config);

// ---- Toy model traces -----------------------------------------------------

struct TraceSample {
  std::string id;
  std::vector<double> x;
  int label = 0;
};

struct ToyTraceConfig {
  ProbeConfig probe;
  ProbabilityLink link = ProbabilityLink::kSoftmax;
  int workers = 0;
};

// Probes every hidden layer on the unmasked training features, then emits one
// table per sample for each hidden layer ("hidden<k>") and for the model
// output ("output", the final layer).
Trace BuildToyTrace(const ToyModel& model, const Dataset& train,
                    const std::vector<TraceSample>& samples,
                    const MaskingSpec& spec, const ToyTraceConfig& config);

}  // namespace andor

#endif  // ANDOR_PIPELINE_H_
