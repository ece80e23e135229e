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

#ifndef ANDOR_REPORT_H_
#define ANDOR_REPORT_H_

// Machine-readable emission of spectra and reports.
//
// CSV tables use the columns layer,order,family,metric,value with ABSENT for
// undefined ratios. JSON documents group the same numbers into plot-ready
// panels (one per family, one series per layer and metric, indexed by order)
// with null for absent values.

#include <string>
#include <vector>

#include "andor/pipeline.h"
#include "andor/spectrum.h"

namespace andor {

inline constexpr char kAbsent[] = "ABSENT";

// Effects, salient index, kappa, tau and optimizer summary of an extraction.
std::string ExtractionDocument(const Extraction& extraction);

// Inverse of the "spectrum" part of ExtractionDocument (or a bare
// {"n", "and", "or"} document). Throws kParse / kSchema.
InteractionSpectrum ParseSpectrumDocument(const std::string& text);

std::string SalientDocument(const SalientIndex& index);

std::string DecompositionDocument(const DecompositionResult& result);

std::string SparsityCsv(const std::vector<SparsityPoint>& points);

std::string TrackCsv(const TrackReport& report);
std::string TrackDocument(const TrackReport& report);

std::string IouCsv(const IouReport& report, const std::string& label = "");
std::string IouDocument(const IouReport& report);

std::string StabilityCsv(const StabilityReport& report,
                         const std::string& label = "");
std::string StabilityDocument(const StabilityReport& report);

std::string KappaSweepDocument(const KappaSweep& sweep);

}  // namespace andor

#endif  // ANDOR_REPORT_H_
