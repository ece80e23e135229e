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

#ifndef ANDOR_DECOMPOSITION_H_
#define ANDOR_DECOMPOSITION_H_

// Learning the AND/OR split of a value table.
//
// A table v is explained as v(T) - delta_T = v_and(T) + v_or(T) with
//
//   v_and(T) = 0.5 (v(T) - delta_T) + gamma_T
//   v_or(T)  = 0.5 (v(T) - delta_T) - gamma_T
//
// and gamma_{} pinned so that v_and({}) = v({}) - delta_{} and v_or({}) = 0.
// The split parameters gamma and the bounded residuals |delta_T| <= kappa
// are chosen to minimise the L1 mass of the resulting AND and OR spectra.

#include <cstdint>
#include <string_view>
#include <vector>

#include "andor/error.h"
#include "andor/lattice.h"
#include "andor/spectrum.h"

namespace andor {

inline constexpr double kDefaultKappaRatio = 0.04;

struct DecompositionParams {
  LatticeArray gamma;
  LatticeArray delta;
  double kappa = 0.0;
};

// Even split and zero residuals; gamma_{} is set to its pinned value.
DecompositionParams InitialParams(const LatticeArray& v, double kappa);

// ratio * |v(N) - v({})| on the raw table.
double DefaultKappa(const LatticeArray& v, double ratio = kDefaultKappaRatio);

struct SplitTables {
  LatticeArray v_and;
  LatticeArray v_or;
};

// Applies the split. params.gamma[0] is ignored in favour of the pinned
// value. Throws kDimension when the parameter lattices do not match v.
SplitTables Split(const LatticeArray& v, const DecompositionParams& params);

// Spectrum of Split(v, params).
InteractionSpectrum SpectrumOf(const LatticeArray& v,
                               const DecompositionParams& params);

// sum_S |I_and(S)| + sum_{S != {}} |I_or(S)|.
double L1Loss(const InteractionSpectrum& spectrum);

// Linear part of the affine map (gamma, delta) -> (I_and, I_or), with
// gamma_{} eliminated through its pinned value. Exposed for the optimizers
// and for adjoint tests.
class DecompositionOperator {
 public:
  explicit DecompositionOperator(int n) : n_(n) {}

  int n() const { return n_; }

  InteractionSpectrum Apply(const LatticeArray& gamma,
                            const LatticeArray& delta) const;

  // Writes K^T applied to (dual.and_effects, dual.or_effects); the empty OR
  // entry of `dual` is ignored and gamma_grad[0] is always 0.
  void ApplyAdjoint(const InteractionSpectrum& dual, LatticeArray& gamma_grad,
                    LatticeArray& delta_grad) const;

  // sum_j |K_ij| per output row (OR row {} is reported as 0).
  InteractionSpectrum RowAbsSums() const;
  // sum_i |K_ij| per parameter column (gamma column {} is reported as 0).
  void ColumnAbsSums(LatticeArray& gamma, LatticeArray& delta) const;

 private:
  int n_;
};

enum class OptimizerMethod {
  // kSplitting up to kMaxSplittingVariables, kPrimalDual above.
  kAuto,
  // ADMM on the equivalent basis pursuit problem over the effects, with a
  // cached dense factorisation per n.
  kSplitting,
  // Diagonally preconditioned primal-dual hybrid gradient on the exact L1
  // objective.
  kPrimalDual,
  // Projected descent along the Huber-smoothed L1 gradient, step halving on
  // non-improvement.
  kSubgradient,
};

inline constexpr int kMaxSplittingVariables = 10;

std::string_view OptimizerMethodName(OptimizerMethod method);
// Throws kConfig for unknown names.
OptimizerMethod ParseOptimizerMethod(std::string_view name);

struct OptimizerConfig {
  OptimizerMethod method = OptimizerMethod::kAuto;
  int max_iters = 5000;
  // Base step relative to the diagonal preconditioner; the initial penalty
  // for kSplitting.
  double step = 1.0;
  // Huber transition width relative to the initial loss (kSubgradient only).
  double huber_width = 1e-6;
  // kSplitting stops on relative primal and dual residuals below tol; the
  // other methods once the best loss improved by less than tol (relative)
  // over the last `patience` iterations.
  double tol = 1e-6;
  int patience = 500;
  std::uint64_t seed = 0;
  // Weight of 0.5 * |delta|^2 (on v scaled to max |v| = 1) added to the
  // objective by kSplitting.
  double residual_penalty = 1e-2;
  // Extra runs from seeded random gamma initialisations; the best is kept.
  // Ignored by kSplitting.
  int restarts = 0;
};

struct DecompositionResult {
  DecompositionParams params;
  InteractionSpectrum spectrum;
  // Loss of every accepted iterate, starting with the initial point.
  std::vector<double> loss_history;
  int iterations = 0;
  bool converged = false;
};

// Raised when the loss stops being finite; carries the last finite iterate.
class OptimizationError : public Error {
 public:
  OptimizationError(const std::string& message, DecompositionResult last)
      : Error(ErrorKind::kOptimization, message), last_(std::move(last)) {}

  const DecompositionResult& last_stable() const { return last_; }

 private:
  DecompositionResult last_;
};

// Minimises L1Loss(SpectrumOf(v, params)) over gamma and delta subject to
// |delta_T| <= kappa. kappa = 0 disables the residuals. Deterministic given
// (v, kappa, config).
DecompositionResult Optimize(const LatticeArray& v, double kappa,
                             const OptimizerConfig& config = {});

}  // namespace andor

#endif  // ANDOR_DECOMPOSITION_H_
