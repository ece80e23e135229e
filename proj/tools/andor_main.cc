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

// Command-line driver: table synthesis, decomposition, probing, layer
// tracking, IoU, stability, sparsity, Shapley values and kappa sweeps.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "andor/decomposition.h"
#include "andor/error.h"
#include "andor/masking.h"
#include "andor/metrics.h"
#include "andor/pipeline.h"
#include "andor/planted.h"
#include "andor/probe.h"
#include "andor/report.h"
#include "andor/spectrum.h"
#include "andor/toy_model.h"
#include "andor/value_table.h"
#include "json.hpp"

namespace andor {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::json;

constexpr double kReconstructionTolerance = 1e-8;

struct GlobalOptions {
  std::uint64_t seed = 0;
  int workers = 0;
  double tau_ratio = kDefaultTauRatio;
  double kappa_ratio = kDefaultKappaRatio;
  double sigma = kDefaultSigma;
  bool merge_first_order = true;
  bool merge_after_threshold = false;
  std::string tau_scope = "layer";
  int format_version = kFormatVersion;
  std::string optimizer = "auto";
  int max_iters = OptimizerConfig{}.max_iters;
  bool delta_on_final = false;
  std::string link = "softmax";
};

ProbabilityLink ParseLink(const std::string& name) {
  if (name == "softmax") return ProbabilityLink::kSoftmax;
  if (name == "sigmoid") return ProbabilityLink::kSigmoid;
  throw Error(ErrorKind::kConfig, "unknown link '" + name + "'");
}

ExtractionConfig MakeExtraction(const GlobalOptions& g) {
  ExtractionConfig config;
  config.kappa_ratio = g.kappa_ratio;
  config.tau_ratio = g.tau_ratio;
  config.merge_first_order = g.merge_first_order;
  config.merge_before_threshold = !g.merge_after_threshold;
  config.optimizer.method = ParseOptimizerMethod(g.optimizer);
  config.optimizer.max_iters = g.max_iters;
  config.optimizer.seed = g.seed;
  return config;
}

Json GlobalJson(const GlobalOptions& g) {
  return {{"seed", g.seed},
          {"workers", g.workers},
          {"tau_ratio", g.tau_ratio},
          {"kappa_ratio", g.kappa_ratio},
          {"sigma", g.sigma},
          {"merge_first_order", g.merge_first_order},
          {"merge_after_threshold", g.merge_after_threshold},
          {"tau_scope", g.tau_scope},
          {"format_version", g.format_version},
          {"optimizer", g.optimizer},
          {"max_iters", g.max_iters},
          {"delta_on_final", g.delta_on_final},
          {"link", g.link}};
}

std::string Fnv1a(const std::string& text) {
  std::uint64_t hash = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ull;
  }
  char buffer[17];
  std::snprintf(buffer, sizeof buffer, "%016llx",
                static_cast<unsigned long long>(hash));
  return buffer;
}

// Collects the files written by one command and its manifest.
class Run {
 public:
  Run(std::string command, const GlobalOptions& g) : command_(std::move(command)) {
    config_ = GlobalJson(g);
  }

  void SetOutput(const fs::path& dir) { dir_ = dir; }
  const fs::path& output() const { return dir_; }
  Json& config() { return config_; }
  void AddInput(const fs::path& path) { inputs_.push_back(path.string()); }

  void Write(const std::string& name, const std::string& text) {
    if (dir_.empty()) throw Error(ErrorKind::kConfig, "--output is required");
    fs::create_directories(dir_);
    WriteTextFile(dir_ / name, text);
    outputs_.push_back(name);
  }
  void WriteTableFile(const std::string& name, const ValueTable& table) {
    Write(name, SerializeTable(table));
  }

  // Extra manifest fields.
  void Note(const Json& extra) {
    for (auto it = extra.begin(); it != extra.end(); ++it) {
      extra_[it.key()] = it.value();
    }
  }

  void WriteManifest(const Json& extra = Json::object()) {
    if (dir_.empty()) return;
    Note(extra);
    Json doc;
    doc["format_version"] = kFormatVersion;
    doc["command"] = command_;
    doc["config"] = config_;
    doc["config_digest"] = Fnv1a(config_.dump());
    doc["inputs"] = inputs_;
    doc["outputs"] = outputs_;
    for (auto it = extra_.begin(); it != extra_.end(); ++it) {
      doc[it.key()] = it.value();
    }
    fs::create_directories(dir_);
    WriteTextFile(dir_ / "manifest.json", doc.dump(2) + "\n");
  }

  const std::string& command() const { return command_; }

 private:
  std::string command_;
  fs::path dir_;
  Json config_;
  std::vector<std::string> inputs_;
  std::vector<std::string> outputs_;
  Json extra_ = Json::object();
};

std::vector<double> ParseReals(const std::string& text) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorKind::kConfig, "not a number: '" + item + "'");
    }
  }
  return out;
}

std::vector<int> ParseInts(const std::string& text) {
  std::vector<int> out;
  for (double v : ParseReals(text)) out.push_back(static_cast<int>(v));
  return out;
}

// "and:<mask>:<coefficient>" or "or:<mask>:<coefficient>"; masks accept 0x.
PlantedTerm ParseTerm(const std::string& text) {
  const std::size_t a = text.find(':');
  const std::size_t b = text.find(':', a + 1);
  if (a == std::string::npos || b == std::string::npos) {
    throw Error(ErrorKind::kConfig, "term '" + text +
                                        "' is not family:mask:coefficient");
  }
  const std::string family = text.substr(0, a);
  PlantedTerm term{};
  if (family == "and") {
    term.family = Family::kAnd;
  } else if (family == "or") {
    term.family = Family::kOr;
  } else {
    throw Error(ErrorKind::kConfig, "term family must be and/or: " + text);
  }
  try {
    term.mask = static_cast<std::uint32_t>(
        std::stoul(text.substr(a + 1, b - a - 1), nullptr, 0));
    term.coefficient = std::stod(text.substr(b + 1));
  } catch (const std::exception&) {
    throw Error(ErrorKind::kConfig, "malformed term '" + text + "'");
  }
  return term;
}

Json TermsJson(const std::vector<PlantedTerm>& terms) {
  Json out = Json::array();
  for (const PlantedTerm& t : terms) {
    out.push_back({{"family", FamilyName(t.family)},
                   {"mask", t.mask},
                   {"coefficient", t.coefficient}});
  }
  return out;
}

// A table set: a trace directory (one layer), a directory of tables or a
// single table file.
std::vector<ValueTable> LoadTableSet(const fs::path& path,
                                     const std::string& layer) {
  if (!fs::exists(path)) {
    throw Error(ErrorKind::kInputNotFound, "not found: " + path.string());
  }
  if (fs::is_regular_file(path)) return {ReadTable(path)};
  if (fs::exists(path / "trace.json")) {
    Trace trace = ReadTrace(path);
    const std::string want = layer.empty() ? trace.final_layer : layer;
    for (TraceLayer& l : trace.layers) {
      if (l.id == want) return std::move(l.tables);
    }
    throw Error(ErrorKind::kConfig, path.string() + ": no layer '" + want + "'");
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(path)) {
    if (entry.path().extension() == ".json" &&
        entry.path().filename() != "manifest.json") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<ValueTable> tables;
  for (const fs::path& file : files) tables.push_back(ReadTable(file));
  if (tables.empty()) {
    throw Error(ErrorKind::kInputNotFound,
                "no tables found in " + path.string());
  }
  return tables;
}

void CheckReconstruction(const LatticeArray& v, const Extraction& extraction) {
  const double error = ReconstructionError(v, extraction);
  if (!(error <= kReconstructionTolerance)) {
    throw Error(ErrorKind::kIdentityCheck,
                "reconstruction error " + FormatReal(error) +
                    " exceeds " + FormatReal(kReconstructionTolerance));
  }
}

// Table from a file or from a toy model evaluated on one input.
struct TableSource {
  std::string table;
  std::string model;
  std::string spec;
  std::string x;
  int label = 1;
  std::string sample = "sample";

  void Register(CLI::App* cmd) {
    cmd->add_option("--table", table, "Value table file");
    cmd->add_option("--model", model, "Toy model file (with --spec and --x)");
    cmd->add_option("--spec", spec, "Masking spec file");
    cmd->add_option("--x", x, "Comma-separated raw input");
    cmd->add_option("--label", label, "Target class for --model");
    cmd->add_option("--sample", sample, "Sample id for --model");
  }

  ValueTable Load(Run& run, ProbabilityLink link) const {
    if (!table.empty()) {
      run.AddInput(table);
      return ReadTable(table);
    }
    if (model.empty() || spec.empty() || x.empty()) {
      throw Error(ErrorKind::kConfig,
                  "give --table, or --model with --spec and --x");
    }
    run.AddInput(model);
    run.AddInput(spec);
    const MaskingSpec masking = ReadMaskingSpec(spec);
    ValueTable out = TableFromModel(ReadToyModel(model), ParseReals(x), label,
                                    masking, link);
    out.label = sample;
    out.metadata[std::string(kMetaSample)] = sample;
    return out;
  }
};

int ExitCode(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInputNotFound:
      return 2;
    case ErrorKind::kIdentityCheck:
      return 3;
    default:
      return 1;
  }
}

void ReportError(const std::string& command, std::string_view kind,
                 const std::string& message, const fs::path& output) {
  Json doc;
  doc["format_version"] = kFormatVersion;
  doc["command"] = command;
  doc["error"] = {{"kind", kind}, {"message", message}};
  const std::string text = doc.dump(2) + "\n";
  std::cerr << text;
  if (!output.empty()) {
    try {
      fs::create_directories(output);
      WriteTextFile(output / "error.json", text);
    } catch (...) {
    }
  }
}

int Main(int argc, char** argv) {
  CLI::App app{"AND/OR interaction extraction and layer-wise tracking"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions g;
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--workers", g.workers, "Worker threads (0 = all)")
      ->capture_default_str();
  app.add_option("--tau-ratio", g.tau_ratio, "Salience threshold ratio")
      ->capture_default_str();
  app.add_option("--kappa-ratio", g.kappa_ratio, "Residual bound ratio")
      ->capture_default_str();
  app.add_option("--sigma", g.sigma, "Input perturbation scale")
      ->capture_default_str();
  app.add_flag("--merge-first-order,!--no-merge-first-order",
               g.merge_first_order, "Fold first-order OR into AND");
  app.add_flag("--merge-after-threshold", g.merge_after_threshold,
               "Select salient effects before the first-order merge");
  app.add_option("--tau-scope", g.tau_scope, "layer or global")
      ->capture_default_str();
  app.add_option("--format-version", g.format_version, "Output format version")
      ->capture_default_str();
  app.add_option("--optimizer", g.optimizer,
                 "auto, admm, primal-dual or subgradient")
      ->capture_default_str();
  app.add_option("--max-iters", g.max_iters, "Optimizer iteration cap")
      ->capture_default_str();
  app.add_flag("--delta-on-final", g.delta_on_final,
               "Learn residuals on the final layer too");
  app.add_option("--link", g.link, "softmax or sigmoid")->capture_default_str();

  std::string output;
  std::function<void(Run&)> action;
  std::string command;

  auto add = [&](const std::string& name, const std::string& help) {
    CLI::App* cmd = app.add_subcommand(name, help);
    cmd->add_option("-o,--output", output, "Output directory");
    return cmd;
  };

  // synth planted | toy-trace | perturbed
  CLI::App* synth = add("synth", "Generate synthetic tables and traces");
  synth->require_subcommand(1);
  struct {
    int n = 8;
    std::vector<std::string> terms;
    int random_terms = 0;
    double noise = 0.0;
  } planted;
  CLI::App* synth_planted =
      synth->add_subcommand("planted", "Planted AND/OR value table");
  synth_planted->add_option("-o,--output", output, "Output directory");
  synth_planted->add_option("--n", planted.n, "Variables")->capture_default_str();
  synth_planted->add_option("--term", planted.terms,
                            "family:mask:coefficient (repeatable)");
  synth_planted->add_option("--random-terms", planted.random_terms,
                            "Random antichain of k terms");
  synth_planted->add_option("--noise", planted.noise, "Uniform noise amplitude");
  synth_planted->callback([&] {
    command = "synth planted";
    action = [&](Run& run) {
      std::vector<PlantedTerm> terms;
      for (const std::string& t : planted.terms) terms.push_back(ParseTerm(t));
      if (planted.random_terms > 0) {
        for (const PlantedTerm& t :
             RandomAntichainTerms(planted.n, planted.random_terms, g.seed)) {
          terms.push_back(t);
        }
      }
      ValueTable table = PlantedTable(planted.n, terms, planted.noise, g.seed);
      table.metadata[std::string(kMetaSample)] = "planted";
      run.config()["n"] = planted.n;
      run.config()["terms"] = TermsJson(terms);
      run.config()["noise"] = planted.noise;
      run.WriteTableFile("table.json", table);
      run.Write("terms.json", TermsJson(terms).dump(2) + "\n");
    };
  });

  struct {
    int n = 8;
    int terms = 4;
    int train = 1000;
    int samples = 10;
    std::string hidden = "32,32";
    int epochs = 50;
    double jitter = 0.1;
  } toy;
  CLI::App* synth_toy = synth->add_subcommand(
      "toy-trace", "Train a toy MLP on planted data and trace its layers");
  synth_toy->add_option("-o,--output", output, "Output directory");
  synth_toy->add_option("--n", toy.n, "Variables")->capture_default_str();
  synth_toy->add_option("--terms", toy.terms, "Planted terms")
      ->capture_default_str();
  synth_toy->add_option("--train", toy.train, "Training rows")
      ->capture_default_str();
  synth_toy->add_option("--samples", toy.samples, "Traced samples")
      ->capture_default_str();
  synth_toy->add_option("--hidden", toy.hidden, "Hidden widths")
      ->capture_default_str();
  synth_toy->add_option("--epochs", toy.epochs, "Training epochs")
      ->capture_default_str();
  synth_toy->add_option("--jitter", toy.jitter, "Input jitter")
      ->capture_default_str();
  synth_toy->callback([&] {
    command = "synth toy-trace";
    action = [&](Run& run) {
      const auto terms = RandomAntichainTerms(toy.n, toy.terms, g.seed);
      const Dataset train =
          PlantedDataset(toy.n, terms, toy.train, toy.jitter, g.seed);
      const Dataset test =
          PlantedDataset(toy.n, terms, toy.samples, toy.jitter, g.seed + 1);
      ToyTrainingConfig config;
      config.hidden = ParseInts(toy.hidden);
      config.epochs = toy.epochs;
      config.seed = g.seed;
      const ToyModel model = TrainToyModel(train, config);
      const MaskingSpec spec =
          ElementwiseSpec(std::vector<double>(toy.n, 0.0));
      std::vector<TraceSample> samples;
      for (int s = 0; s < toy.samples; ++s) {
        samples.push_back({"s" + std::to_string(s), test.inputs[s],
                           test.labels[s]});
      }
      ToyTraceConfig trace_config;
      trace_config.link = ParseLink(g.link);
      trace_config.workers = g.workers;
      const Trace trace =
          BuildToyTrace(model, train, samples, spec, trace_config);
      run.config()["toy"] = {{"n", toy.n},         {"terms", toy.terms},
                             {"train", toy.train}, {"samples", toy.samples},
                             {"hidden", toy.hidden}, {"epochs", toy.epochs},
                             {"jitter", toy.jitter}};
      run.Write("model.json", SerializeToyModel(model));
      run.Write("spec.json", SerializeMaskingSpec(spec));
      run.Write("terms.json", TermsJson(terms).dump(2) + "\n");
      WriteTrace(trace, run.output() / "trace");
      run.Note({{"accuracy", Accuracy(model, train)}});
    };
  });

  struct {
    std::string model;
    std::string spec;
    std::vector<std::string> xs;
    int label = 1;
    int count = 20;
  } perturbed;
  CLI::App* synth_perturbed = synth->add_subcommand(
      "perturbed", "Clean and noise-perturbed tables of a toy model");
  synth_perturbed->add_option("-o,--output", output, "Output directory");
  synth_perturbed->add_option("--model", perturbed.model, "Toy model file")
      ->required();
  synth_perturbed->add_option("--spec", perturbed.spec, "Masking spec file")
      ->required();
  synth_perturbed->add_option("--x", perturbed.xs,
                              "Comma-separated input (repeatable)")
      ->required();
  synth_perturbed->add_option("--label", perturbed.label, "Target class")
      ->capture_default_str();
  synth_perturbed->add_option("--count", perturbed.count,
                              "Perturbed copies per input")
      ->capture_default_str();
  synth_perturbed->callback([&] {
    command = "synth perturbed";
    action = [&](Run& run) {
      run.AddInput(perturbed.model);
      run.AddInput(perturbed.spec);
      const ToyModel model = ReadToyModel(perturbed.model);
      const MaskingSpec spec = ReadMaskingSpec(perturbed.spec);
      const ProbabilityLink link = ParseLink(g.link);
      for (std::size_t s = 0; s < perturbed.xs.size(); ++s) {
        const std::string id = "s" + std::to_string(s);
        const std::vector<double> x = ParseReals(perturbed.xs[s]);
        ValueTable clean = TableFromModel(model, x, perturbed.label, spec, link);
        clean.metadata[std::string(kMetaSample)] = id;
        run.WriteTableFile(id + "/clean.json", clean);
        const auto noisy =
            PerturbedInputs(x, g.sigma, perturbed.count, g.seed + s);
        for (std::size_t k = 0; k < noisy.size(); ++k) {
          ValueTable table =
              TableFromModel(model, noisy[k], perturbed.label, spec, link);
          table.metadata[std::string(kMetaSample)] = id;
          char name[32];
          std::snprintf(name, sizeof name, "/perturbed/%05zu.json", k);
          run.WriteTableFile(id + name, table);
        }
      }
      run.config()["count"] = perturbed.count;
    };
  });

  // extract
  TableSource extract_source;
  CLI::App* extract = add("extract", "Extract salient AND/OR interactions");
  extract_source.Register(extract);
  extract->callback([&] {
    command = "extract";
    action = [&](Run& run) {
      const ValueTable table = extract_source.Load(run, ParseLink(g.link));
      const Extraction e = ExtractInteractions(table, MakeExtraction(g));
      if (extract_source.table.empty()) run.WriteTableFile("table.json", table);
      run.Write("spectrum.json", ExtractionDocument(e));
      run.Write("salient.json", SalientDocument(e.salient));
      run.Write("sparsity.csv",
                SparsityCsv(SparsityCurve(e.spectrum, e.salient.tau)));
      run.Note({{"salient", e.salient.size()},
                         {"reconstruction_error",
                          ReconstructionError(table.values, e)}});
      CheckReconstruction(table.values, e);
    };
  });

  // decompose
  std::string decompose_table;
  std::optional<double> decompose_kappa;
  CLI::App* decompose = add("decompose", "Learn the AND/OR split of a table");
  decompose->add_option("--table", decompose_table, "Value table file")
      ->required();
  decompose->add_option("--kappa", decompose_kappa,
                        "Absolute residual bound (default from --kappa-ratio)");
  decompose->callback([&] {
    command = "decompose";
    action = [&](Run& run) {
      run.AddInput(decompose_table);
      const ValueTable table = ReadTable(decompose_table);
      const double kappa = decompose_kappa
                               ? *decompose_kappa
                               : DefaultKappa(table.values, g.kappa_ratio);
      if (!(kappa >= 0.0)) throw Error(ErrorKind::kDomain, "kappa must be >= 0");
      const ExtractionConfig config = MakeExtraction(g);
      const DecompositionResult result =
          Optimize(table.values, kappa, config.optimizer);
      run.config()["kappa"] = kappa;
      run.Write("decomposition.json", DecompositionDocument(result));
      Extraction e;
      e.decomposition = result;
      e.spectrum = result.spectrum;
      run.Note(
          {{"reconstruction_error", ReconstructionError(table.values, e)}});
      CheckReconstruction(table.values, e);
    };
  });

  // probe-train
  std::string train_dump;
  ProbeConfig probe_config;
  CLI::App* probe_train = add("probe-train", "Train a linear probe");
  probe_train->add_option("--dump", train_dump, "Feature dump")->required();
  probe_train->add_option("--lr", probe_config.learning_rate, "Learning rate")
      ->capture_default_str();
  probe_train->add_option("--epochs", probe_config.epochs, "Epochs")
      ->capture_default_str();
  probe_train->add_flag("--include-masked", probe_config.include_masked_rows,
                        "Train on masked rows too");
  probe_train->callback([&] {
    command = "probe-train";
    action = [&](Run& run) {
      run.AddInput(train_dump);
      const ProbeTraining trained =
          TrainProbe(ReadFeatureDump(train_dump), probe_config);
      run.config()["probe"] = {{"lr", probe_config.learning_rate},
                               {"epochs", probe_config.epochs},
                               {"include_masked",
                                probe_config.include_masked_rows}};
      run.Write("probe.json", SerializeProbe(trained.probe));
      run.Write("losses.json", Json(trained.epoch_losses).dump() + "\n");
      run.Note({{"accuracy", trained.accuracy}});
    };
  });

  // probe-table
  struct {
    std::string probe;
    std::string dump;
    std::string sample;
    int label = 0;
    int n = 0;
  } pt;
  CLI::App* probe_table = add("probe-table", "Value table from a probe");
  probe_table->add_option("--probe", pt.probe, "Probe file")->required();
  probe_table->add_option("--dump", pt.dump, "Masked feature dump")->required();
  probe_table->add_option("--sample", pt.sample, "Sample id")->required();
  probe_table->add_option("--label", pt.label, "Target class")->required();
  probe_table->add_option("--n", pt.n, "Variables")->required();
  probe_table->callback([&] {
    command = "probe-table";
    action = [&](Run& run) {
      run.AddInput(pt.probe);
      run.AddInput(pt.dump);
      const ValueTable table =
          ProbeTable(ReadProbe(pt.probe), ReadFeatureDump(pt.dump), pt.sample,
                     pt.label, pt.n, ParseLink(g.link));
      run.WriteTableFile("table.json", table);
    };
  });

  // track
  std::string trace_dir;
  CLI::App* track = add("track", "Track interactions across layers");
  track->add_option("--trace", trace_dir, "Trace directory")->required();
  track->callback([&] {
    command = "track";
    action = [&](Run& run) {
      run.AddInput(trace_dir);
      TrackOptions options;
      options.extraction = MakeExtraction(g);
      options.delta_on_final = g.delta_on_final;
      options.tau_scope = ParseTauScope(g.tau_scope);
      options.workers = g.workers;
      const TrackReport report = TrackLayers(ReadTrace(trace_dir), options);
      run.Write("track.csv", TrackCsv(report));
      run.Write("track.json", TrackDocument(report));
      run.Note({{"identity_error", report.identity_error},
                         {"identity_ok", report.identity_ok}});
      if (!report.identity_ok) {
        throw Error(ErrorKind::kIdentityCheck,
                    "overlap/forget/new identity error " +
                        FormatReal(report.identity_error));
      }
    };
  });

  // iou
  struct {
    std::string a, b, layer_a, layer_b;
  } iou;
  CLI::App* iou_cmd = add("iou", "Per-order IoU between two table sets");
  iou_cmd->add_option("--a", iou.a, "Trace dir, table dir or table")
      ->required();
  iou_cmd->add_option("--b", iou.b, "Trace dir, table dir or table")
      ->required();
  iou_cmd->add_option("--layer-a", iou.layer_a, "Layer of a trace (final)");
  iou_cmd->add_option("--layer-b", iou.layer_b, "Layer of b trace (final)");
  iou_cmd->callback([&] {
    command = "iou";
    action = [&](Run& run) {
      run.AddInput(iou.a);
      run.AddInput(iou.b);
      const IouReport report =
          CompareModels(LoadTableSet(iou.a, iou.layer_a),
                        LoadTableSet(iou.b, iou.layer_b), MakeExtraction(g),
                        g.workers);
      run.Write("iou.csv",
                IouCsv(report, (iou.layer_a.empty() ? "final" : iou.layer_a) +
                                   "/" +
                                   (iou.layer_b.empty() ? "final" : iou.layer_b)));
      run.Write("iou.json", IouDocument(report));
    };
  });

  // stability
  std::string stability_dir;
  CLI::App* stability =
      add("stability", "Stability of salient effects under input noise");
  stability->add_option("--input", stability_dir,
                        "Directory of <sample>/clean.json + perturbed/*.json")
      ->required();
  stability->callback([&] {
    command = "stability";
    action = [&](Run& run) {
      run.AddInput(stability_dir);
      if (!fs::is_directory(stability_dir)) {
        throw Error(ErrorKind::kInputNotFound,
                    "not a directory: " + stability_dir);
      }
      std::vector<fs::path> dirs;
      for (const auto& entry : fs::directory_iterator(stability_dir)) {
        if (entry.is_directory()) dirs.push_back(entry.path());
      }
      std::sort(dirs.begin(), dirs.end());
      std::vector<StabilitySample> samples;
      for (const fs::path& dir : dirs) {
        StabilitySample sample;
        sample.clean = ReadTable(dir / "clean.json");
        if (fs::is_directory(dir / "perturbed")) {
          sample.perturbed = LoadTableSet(dir / "perturbed", "");
        }
        samples.push_back(std::move(sample));
      }
      ExtractionConfig config = MakeExtraction(g);
      if (!g.delta_on_final) config.kappa_ratio = 0.0;
      const StabilityReport report =
          MeasureStability(samples, config, g.sigma, g.workers);
      run.Write("stability.csv", StabilityCsv(report, "final"));
      run.Write("stability.json", StabilityDocument(report));
    };
  });

  // sparsity
  std::string sparsity_spectrum;
  CLI::App* sparsity = add("sparsity", "Sparsity curve of a spectrum");
  sparsity->add_option("--spectrum", sparsity_spectrum,
                       "spectrum.json from extract")
      ->required();
  sparsity->callback([&] {
    command = "sparsity";
    action = [&](Run& run) {
      run.AddInput(sparsity_spectrum);
      const InteractionSpectrum spectrum =
          ParseSpectrumDocument(ReadTextFile(sparsity_spectrum));
      const SalientIndex index = SelectSalient(spectrum, g.tau_ratio);
      run.Write("sparsity.csv",
                SparsityCsv(SparsityCurve(spectrum, index.tau)));
      run.Note({{"tau", index.tau}, {"salient", index.size()}});
    };
  });

  // shapley
  TableSource shapley_source;
  CLI::App* shapley = add("shapley", "Shapley values by re-allocation");
  shapley_source.Register(shapley);
  shapley->callback([&] {
    command = "shapley";
    action = [&](Run& run) {
      const ValueTable table = shapley_source.Load(run, ParseLink(g.link));
      const Extraction e = ExtractInteractions(table, MakeExtraction(g));
      Json doc;
      doc["format_version"] = kFormatVersion;
      doc["kappa"] = e.kappa;
      doc["reallocated"] = ShapleyValues(e.spectrum);
      if (table.n() <= kMaxShapleyDirectVariables) {
        LatticeArray denoised = table.values;
        for (std::size_t t = 0; t < denoised.size(); ++t) {
          denoised[t] -= e.decomposition.params.delta[t];
        }
        doc["direct"] = ShapleyDirect(denoised);
      }
      doc["total"] = table.values.full_value() - table.values.empty_value();
      run.Write("shapley.json", doc.dump(2) + "\n");
    };
  });

  // kappa-sweep
  std::string sweep_table;
  std::string sweep_ratios = "0.03,0.04,0.05";
  CLI::App* sweep = add("kappa-sweep", "Salient sets across kappa ratios");
  sweep->add_option("--table", sweep_table, "Value table file")->required();
  sweep->add_option("--ratios", sweep_ratios, "Comma-separated kappa ratios")
      ->capture_default_str();
  sweep->callback([&] {
    command = "kappa-sweep";
    action = [&](Run& run) {
      run.AddInput(sweep_table);
      const KappaSweep result = SweepKappa(
          ReadTable(sweep_table), ParseReals(sweep_ratios), MakeExtraction(g));
      run.config()["ratios"] = result.ratios;
      run.Write("kappa_sweep.json", KappaSweepDocument(result));
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    ReportError(command.empty() ? "andor" : command, "config", e.what(),
                output);
    return 1;
  }

  Run run(command, g);
  run.SetOutput(output);
  try {
    if (g.format_version != kFormatVersion) {
      throw Error(ErrorKind::kConfig,
                  "unsupported --format-version " +
                      std::to_string(g.format_version));
    }
    ParseTauScope(g.tau_scope);
    ParseLink(g.link);
    ParseOptimizerMethod(g.optimizer);
    if (output.empty()) throw Error(ErrorKind::kConfig, "--output is required");
    action(run);
    run.WriteManifest({{"status", "ok"}});
  } catch (const Error& e) {
    ReportError(command, ErrorKindName(e.kind()), e.what(), output);
    if (e.kind() == ErrorKind::kIdentityCheck) {
      run.WriteManifest({{"status", "error"}});
    }
    return ExitCode(e.kind());
  } catch (const std::exception& e) {
    ReportError(command, "internal", e.what(), output);
    return 1;
  }
  return 0;
}

}  // namespace
}  // namespace andor

int main(int argc, char** argv) { return andor::Main(argc, argv); }
