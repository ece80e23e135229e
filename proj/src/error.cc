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

#include "andor/error.h"

namespace andor {

std::string_view ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument:
      return "invalid-argument";
    case ErrorKind::kDimension:
      return "dimension";
    case ErrorKind::kDomain:
      return "domain";
    case ErrorKind::kParse:
      return "parse";
    case ErrorKind::kSchema:
      return "schema";
    case ErrorKind::kInputNotFound:
      return "input-not-found";
    case ErrorKind::kConfig:
      return "config";
    case ErrorKind::kOptimization:
      return "optimization";
    case ErrorKind::kTraining:
      return "training";
    case ErrorKind::kCompleteness:
      return "completeness";
    case ErrorKind::kComparability:
      return "comparability";
    case ErrorKind::kEnsemble:
      return "ensemble";
    case ErrorKind::kIo:
      return "io";
    case ErrorKind::kIdentityCheck:
      return "identity-check";
  }
  return "unknown";
}

}  // namespace andor
