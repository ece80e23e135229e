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

#ifndef ANDOR_ERROR_H_
#define ANDOR_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace andor {

// Failure categories. The CLI reports them by name in its error document.
enum class ErrorKind {
  kInvalidArgument,
  kDimension,
  kDomain,
  kParse,
  kSchema,
  kInputNotFound,
  kConfig,
  kOptimization,
  kTraining,
  kCompleteness,
  kComparability,
  kEnsemble,
  kIo,
  kIdentityCheck,
};

// Stable kebab-case name, e.g. "input-not-found".
std::string_view ErrorKindName(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace andor

#endif  // ANDOR_ERROR_H_
