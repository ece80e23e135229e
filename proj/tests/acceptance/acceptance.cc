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

// Runs the acceptance criteria and prints one PASS/FAIL line per criterion.
// Exit status is the number of failing criteria that are not listed as known
// deviations; --strict counts every failure.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include "../oracles.h"
#include "andor/lattice.h"
#include "andor/metrics.h"
#include "andor/pipeline.h"
#include "andor/planted.h"
#include "andor/spectrum.h"
#include "andor/toy_model.h"

namespace andor {
namespace {

namespace lit = ::andor::testing;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string name;
  std::function<Outcome()> run;
  // Non-empty when the failure is an analysed, documented deviation.
  std::string known_deviation;
};

LatticeArray Lattice(int n, const lit::Table& t) { return LatticeArray(n, t); }

lit::Table Values(const LatticeArray& a) {
  return lit::Table(a.values().begin(), a.values().end());
}

std::string Format(const char* fmt, auto... args) {
  char buffer[512];
  std::snprintf(buffer, sizeof buffer, fmt, args...);
  return buffer;
}

MaskSet PlantedSet(const std::vector<PlantedTerm>& terms) {
  MaskSet out;
  for (const PlantedTerm& t : terms) {
    out.push_back(t.family == Family::kAnd ? t.mask : t.mask | (1u << 31));
  }
  std::sort(out.begin(), out.end());
  return out;
}

Outcome TransformOracle() {
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    const int n = 4 + k % 7;
    const lit::Table v = lit::RandomValues(n, 1000 + k);
    const LatticeArray a = Lattice(n, v);
    worst = std::max(worst, lit::MaxAbsDiff(Values(ZetaTransform(a)),
                                            lit::LiteralZeta(v, n)));
    worst = std::max(worst, lit::MaxAbsDiff(Values(MoebiusTransform(a)),
                                            lit::LiteralMoebius(v, n)));
  }
  return {worst <= 1e-10, Format("max deviation %.2e over 50 tables", worst)};
}

Outcome Exactness() {
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    const int n = 2 + k % 11;
    ValueTable t{Lattice(n, lit::RandomValues(n, 2000 + k)), "r", {}};
    const Extraction e = ExtractInteractions(t, ExtractionConfig{});
    worst = std::max(worst, ReconstructionError(t.values, e));
  }
  return {worst <= 1e-8,
          Format("max relative reconstruction error %.2e, n in 2..12", worst)};
}

Outcome Duality() {
  double worst = 0.0, oracle = 0.0;
  for (int k = 0; k < 30; ++k) {
    const int n = 1 + k % 10;
    const lit::Table v = lit::RandomValues(n, 3000 + k);
    const LatticeArray a = Lattice(n, v);
    const LatticeArray ior = OrInteractions(a);
    const LatticeArray iand_rev = AndInteractions(ReverseTable(a));
    for (std::size_t s = 1; s < a.size(); ++s) {
      worst = std::max(worst, std::abs(ior[s] + iand_rev[s]));
    }
    oracle = std::max(oracle, lit::MaxAbsDiff(Values(ior), lit::LiteralOr(v, n)));
  }
  return {worst <= 1e-10 && oracle <= 1e-10,
          Format("max |I_or + I_and(reversed)| %.2e, vs literal %.2e", worst,
                 oracle)};
}

Outcome Shapley() {
  double worst = 0.0, efficiency = 0.0;
  for (int k = 0; k < 20; ++k) {
    const int n = 1 + k % 10;
    const lit::Table v = lit::RandomValues(n, 4000 + k);
    ValueTable t{Lattice(n, v), "r", {}};
    ExtractionConfig config;
    config.kappa_ratio = 0.0;
    const Extraction e = ExtractInteractions(t, config);
    const std::vector<double> realloc = ShapleyValues(e.spectrum);
    const std::vector<double> direct = n <= 8 ? lit::PermutationShapley(v, n)
                                              : lit::WeightedShapley(v, n);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      worst = std::max(worst, std::abs(realloc[i] - direct[i]));
      sum += realloc[i];
    }
    efficiency = std::max(efficiency, std::abs(sum - (v.back() - v.front())));
  }
  return {worst <= 1e-8 && efficiency <= 1e-8,
          Format("max |reallocated - enumerated| %.2e, efficiency gap %.2e",
                 worst, efficiency)};
}

Outcome PlantedRecovery() {
  const int n = 8;
  const double noise = 1e-4;
  int recovered = 0;
  double worst = 0.0;
  std::string failures;
  for (int seed = 0; seed < 40; ++seed) {
    const auto terms = RandomAntichainTerms(n, 1 + seed % 8, seed);
    const ValueTable t = PlantedTable(n, terms, noise, seed);
    ExtractionConfig config;
    config.kappa_ratio = 0.0;
    const Extraction e = ExtractInteractions(t, config);
    const SparseApproximation sm = SparseMatch(e.spectrum, e.salient.tau);
    worst = std::max(worst, sm.max_error);
    const bool ok = FlatSalientSet(e.salient) == PlantedSet(terms) &&
                    sm.max_error <= LatticeSize(n) * noise;
    recovered += ok;
    if (!ok) failures += " " + std::to_string(seed);
  }
  return {recovered == 40,
          Format("%d/40 exact (k = 1..8, n = 8, noise 1e-4), max sparse error "
                 "%.2e%s%s",
                 recovered, worst, failures.empty() ? "" : ", failed seeds",
                 failures.c_str())};
}

struct ToyTraceRun {
  Trace trace;
  TrackReport report;
  double seconds = 0.0;
};

const ToyTraceRun& ToyTrace() {
  static const ToyTraceRun run = [] {
    const auto start = std::chrono::steady_clock::now();
    const int n = 8;
    const auto terms = RandomAntichainTerms(n, 4, 77);
    const Dataset train = PlantedDataset(n, terms, 1000, 0.1, 77);
    ToyTrainingConfig tc;
    tc.epochs = 50;
    tc.seed = 3;
    const ToyModel model = TrainToyModel(train, tc);
    const Dataset test = PlantedDataset(n, terms, 10, 0.1, 78);
    std::vector<TraceSample> samples;
    for (int s = 0; s < 10; ++s) {
      samples.push_back({"s" + std::to_string(s), test.inputs[s], test.labels[s]});
    }
    const MaskingSpec spec = ElementwiseSpec(std::vector<double>(n, 0.0));
    ToyTraceRun out;
    out.trace = BuildToyTrace(model, train, samples, spec, ToyTraceConfig{});
    out.report = TrackLayers(out.trace, TrackOptions{});
    out.seconds = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - start)
                      .count();
    return out;
  }();
  return run;
}

Outcome TrackIdentities() {
  const ToyTraceRun& toy = ToyTrace();
  double worst = toy.report.identity_error;
  // Per-sample tables on random spectra as well as the trace means.
  for (int k = 0; k < 20; ++k) {
    const int n = 3 + k % 8;
    const auto spectrum = [n](std::uint64_t seed) {
      return InteractionSpectrum{
          Lattice(n, lit::RandomValues(n, seed)),
          Lattice(n, lit::RandomValues(n, seed + 1))};
    };
    const InteractionSpectrum l = spectrum(5000 + 2 * k);
    const InteractionSpectrum f = spectrum(6000 + 2 * k);
    const TrackTable t =
        Track(l, SelectSalient(l, 0.05), f, SelectSalient(f, 0.05));
    worst = std::max(worst, IdentityError(t));
  }
  const bool layers = toy.report.layers.size() == 3;
  return {worst <= 1e-10 && layers && toy.seconds < 300.0,
          Format("max identity error %.2e; toy MLP trace with %zu layers, "
                 "n = 8, 10 samples in %.1f s",
                 worst, toy.report.layers.size(), toy.seconds)};
}

Outcome SelfTrivia() {
  const ToyTraceRun& toy = ToyTrace();
  const LayerReport* final_layer = nullptr;
  for (const LayerReport& l : toy.report.layers) {
    if (l.layer_id == toy.report.final_layer) final_layer = &l;
  }
  if (final_layer == nullptr) return {false, "final layer missing"};
  double worst = 0.0;
  int cells = 0;
  for (Family f : {Family::kAnd, Family::kOr}) {
    for (int m = 0; m <= toy.report.n; ++m) {
      const Ratios r = CompletenessRedundancy(final_layer->mean.cell(f, m));
      if (!r.completeness) continue;
      ++cells;
      worst = std::max({worst, std::abs(*r.completeness - 1.0),
                        std::abs(*r.redundancy)});
    }
  }
  std::vector<ValueTable> tables;
  for (const TraceLayer& layer : toy.trace.layers) {
    if (layer.id == toy.trace.final_layer) tables = layer.tables;
  }
  const IouReport iou = CompareModels(tables, tables, ExtractionConfig{});
  double iou_gap = 0.0;
  int iou_cells = 0;
  for (Family f : {Family::kAnd, Family::kOr}) {
    for (int m = 0; m <= iou.n; ++m) {
      if (!iou.cell(f, m).mean) continue;
      ++iou_cells;
      iou_gap = std::max(iou_gap, std::abs(*iou.cell(f, m).mean - 1.0));
    }
  }
  return {cells > 0 && iou_cells > 0 && worst == 0.0 && iou_gap == 0.0,
          Format("%d completeness/redundancy cells off by %.2e, %d IoU cells "
                 "off by %.2e",
                 cells, worst, iou_cells, iou_gap)};
}

Outcome StabilityAnalytic() {
  const int n = 4;
  const double sigma = 0.02;
  const std::vector<double> x = {1.0, 0.5, 0.8, 2.0};
  DenseLayer layer{Eigen::MatrixXd::Zero(2, n), Eigen::VectorXd::Zero(2)};
  for (int i = 0; i < n; ++i) layer.weights(1, i) = 1.0;
  const ToyModel model(ToyModelKind::kLinear, {layer});
  const MaskingSpec spec = ElementwiseSpec(std::vector<double>(n, 0.0));
  ExtractionConfig config;
  config.kappa_ratio = 0.0;
  std::vector<InteractionSpectrum> ensemble;
  for (const auto& xp : PerturbedInputs(x, sigma, 1000, 7)) {
    ensemble.push_back(
        ExtractInteractions(TableFromModel(model, xp, 1, spec), config)
            .spectrum);
  }
  const Extraction clean =
      ExtractInteractions(TableFromModel(model, x, 1, spec), config);
  double worst = 0.0;
  std::string values;
  bool salient = true;
  for (int i = 0; i < n; ++i) {
    const std::uint32_t mask = 1u << i;
    salient = salient && clean.salient.Contains(Family::kAnd, mask);
    const double expected = std::abs(x[i]) / sigma;
    const double got = Stability(ensemble, {mask}, Family::kAnd).value_or(0.0);
    worst = std::max(worst, std::abs(got / expected - 1.0));
    values += Format(" %.1f/%.1f", got, expected);
  }
  return {salient && worst <= 0.05,
          Format("K = 1000, sigma = 0.02, measured/analytic%s, worst relative "
                 "gap %.3f",
                 values.c_str(), worst)};
}

Outcome KappaRobustness() {
  const int n = 8;
  const std::vector<double> ratios = {0.03, 0.04, 0.05};
  int identical = 0;
  std::string differing;
  for (int seed = 0; seed < 40; ++seed) {
    const auto terms = RandomAntichainTerms(n, 1 + seed % 8, seed);
    const KappaSweep s =
        SweepKappa(PlantedTable(n, terms, 0.0, seed), ratios, ExtractionConfig{});
    bool same = true;
    for (std::size_t i = 1; i < s.salient.size(); ++i) {
      same = same && FlatSalientSet(s.salient[i]) == FlatSalientSet(s.salient[0]);
    }
    identical += same;
    if (!same) differing += " " + std::to_string(seed);
  }
  int agreeing = 0;
  for (int run = 0; run < 10; ++run) {
    const std::uint64_t seed = 1000 + run;
    const auto terms = RandomAntichainTerms(n, 1 + run % 8, seed);
    const KappaSweep s =
        SweepKappa(PlantedTable(n, terms, 1e-3, seed), ratios, ExtractionConfig{});
    double lowest = 1.0;
    for (const auto& row : s.agreement) {
      for (const auto& v : row) lowest = std::min(lowest, v.value_or(0.0));
    }
    agreeing += lowest >= 0.9;
  }
  return {identical == 40 && agreeing >= 9,
          Format("noiseless identical %d/40%s%s; noisy (1e-3) pairwise IoU >= "
                 "0.9 in %d/10",
                 identical, differing.empty() ? "" : ", differing seeds",
                 differing.c_str(), agreeing)};
}

Outcome OrderTrend() {
  const int n = 8, samples = 10;
  int pass = 0;
  std::string summary;
  for (int rep = 0; rep < 10; ++rep) {
    const auto terms = RandomAntichainTerms(n, 4, 500 + rep);
    const Dataset train = PlantedDataset(n, terms, 2000, 0.1, 500 + rep);
    const Dataset test = PlantedDataset(n, terms, samples, 0.1, 900 + rep);
    ToyTrainingConfig ca;
    ca.epochs = 50;
    ca.seed = 2 * rep + 1;
    ToyTrainingConfig cb = ca;
    cb.seed = 2 * rep + 2;
    const ToyModel ma = TrainToyModel(train, ca);
    const ToyModel mb = TrainToyModel(train, cb);
    const MaskingSpec spec = ElementwiseSpec(std::vector<double>(n, 0.0));
    std::vector<ValueTable> ta, tb;
    for (int s = 0; s < samples; ++s) {
      for (auto [model, out] : {std::pair{&ma, &ta}, std::pair{&mb, &tb}}) {
        ValueTable t =
            TableFromModel(*model, test.inputs[s], test.labels[s], spec);
        t.metadata[std::string(kMetaSample)] = std::to_string(s);
        out->push_back(std::move(t));
      }
    }
    const IouReport r = CompareModels(ta, tb, ExtractionConfig{});
    // Pooled over every (sample, family, order) pair with a defined IoU.
    double low = 0.0, high = 0.0;
    int n_low = 0, n_high = 0;
    for (Family f : {Family::kAnd, Family::kOr}) {
      for (int m = 1; m <= n; ++m) {
        const IouCell& c = r.cell(f, m);
        if (!c.mean) continue;
        if (m <= 2) {
          low += *c.mean * c.samples;
          n_low += c.samples;
        } else if (m >= 4) {
          high += *c.mean * c.samples;
          n_high += c.samples;
        }
      }
    }
    const bool ok = n_low > 0 && n_high > 0 && low / n_low >= high / n_high;
    pass += ok;
    summary += Format(" %.2f/%.2f", n_low ? low / n_low : -1.0,
                      n_high ? high / n_high : -1.0);
  }
  return {pass >= 8, Format("%d/10 repetitions with IoU(order<=2) >= "
                            "IoU(order>=4); per repetition%s",
                            pass, summary.c_str())};
}

}  // namespace
}  // namespace andor

int main(int argc, char** argv) {
  using andor::Criterion;
  bool strict = false;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--strict") == 0) strict = true;
  }
  const std::vector<Criterion> criteria = {
      {"transform-oracle", andor::TransformOracle, ""},
      {"decomposition-exactness", andor::Exactness, ""},
      {"and-or-duality", andor::Duality, ""},
      {"shapley-reallocation", andor::Shapley, ""},
      {"planted-recovery", andor::PlantedRecovery, ""},
      {"tracking-identities", andor::TrackIdentities, ""},
      {"self-comparison", andor::SelfTrivia, ""},
      {"stability-analytic", andor::StabilityAnalytic, ""},
      {"kappa-robustness", andor::KappaRobustness,
       "on some noiseless planted tables the exact optimum itself changes "
       "its salient set as kappa grows"},
      {"order-trend", andor::OrderTrend, ""},
  };
  const double limits[] = {5, 60, 0, 0, 0, 0, 0, 0, 0, 0};
  int passed = 0, unexpected = 0, known = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const Criterion& c = criteria[i];
    const auto start = std::chrono::steady_clock::now();
    andor::Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(
                               std::chrono::steady_clock::now() - start)
                               .count();
    if (limits[i] > 0 && seconds >= limits[i]) {
      outcome.pass = false;
      outcome.detail += andor::Format("; over the %.0f s limit", limits[i]);
    }
    if (outcome.pass) {
      ++passed;
    } else if (!c.known_deviation.empty() && !strict) {
      ++known;
    } else {
      ++unexpected;
    }
    std::printf("%s %-24s %7.2fs  %s\n", outcome.pass ? "PASS" : "FAIL",
                c.name.c_str(), seconds, outcome.detail.c_str());
    if (!outcome.pass && !c.known_deviation.empty()) {
      std::printf("     known deviation: %s\n", c.known_deviation.c_str());
    }
    std::fflush(stdout);
  }
  std::printf("%d passed, %d failed (%d known deviations)\n", passed,
              unexpected + known, known);
  return unexpected;
}
