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

#include "andor/decomposition.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace andor {
namespace {

void CheckParams(const LatticeArray& v, const DecompositionParams& params) {
  if (params.gamma.n() != v.n() || params.delta.n() != v.n()) {
    throw Error(ErrorKind::kDimension,
                "decomposition parameters do not match table size n=" +
                    std::to_string(v.n()));
  }
}

double Pow2(int k) { return std::ldexp(1.0, k); }

// Best-so-far bookkeeping shared by both optimizers. Reports convergence once
// the best loss improved by less than tol (relative) over `patience`
// iterations.
class Progress {
 public:
  Progress(double initial_loss, const OptimizerConfig& config)
      : config_(config), best_(initial_loss) {
    best_by_iteration_.push_back(initial_loss);
  }

  double best() const { return best_; }

  // Returns true if `loss` is a new incumbent.
  bool Offer(double loss) {
    const bool improved = loss < best_;
    if (improved) best_ = loss;
    best_by_iteration_.push_back(best_);
    return improved;
  }

  bool Converged() const {
    const int k = static_cast<int>(best_by_iteration_.size()) - 1;
    if (best_ == 0.0) return true;
    if (k < config_.patience) return false;
    const double before = best_by_iteration_[k - config_.patience];
    return before - best_ <= config_.tol * std::abs(before);
  }

 private:
  const OptimizerConfig& config_;
  double best_;
  std::vector<double> best_by_iteration_;
};

struct Preconditioner {
  LatticeArray gamma_step;
  LatticeArray delta_step;
  InteractionSpectrum dual_step;
};

Preconditioner MakePreconditioner(const DecompositionOperator& op) {
  const int n = op.n();
  Preconditioner p{LatticeArray(n), LatticeArray(n), op.RowAbsSums()};
  op.ColumnAbsSums(p.gamma_step, p.delta_step);
  for (double& x : p.gamma_step.mutable_values()) x = x > 0 ? 1.0 / x : 0.0;
  for (double& x : p.delta_step.mutable_values()) x = x > 0 ? 1.0 / x : 0.0;
  for (double& x : p.dual_step.and_effects.mutable_values()) {
    x = x > 0 ? 1.0 / x : 0.0;
  }
  for (double& x : p.dual_step.or_effects.mutable_values()) {
    x = x > 0 ? 1.0 / x : 0.0;
  }
  return p;
}

// Primal update x <- P_box(x - step * tau * g), shared by both methods.
void PrimalStep(const LatticeArray& gamma_grad, const LatticeArray& delta_grad,
                const Preconditioner& pre, double step,
                DecompositionParams& params) {
  const double kappa = params.kappa;
  for (std::size_t t = 1; t < params.gamma.size(); ++t) {
    params.gamma[t] -= step * pre.gamma_step[t] * gamma_grad[t];
  }
  if (kappa > 0.0) {
    for (std::size_t t = 0; t < params.delta.size(); ++t) {
      const double moved =
          params.delta[t] - step * pre.delta_step[t] * delta_grad[t];
      params.delta[t] = std::clamp(moved, -kappa, kappa);
    }
  }
}

void PinGamma(const LatticeArray& v, DecompositionParams& params) {
  params.gamma[0] = 0.5 * (v[0] - params.delta[0]);
}

struct RunState {
  DecompositionParams params;
  double loss;
  std::vector<double> history;
  int iterations = 0;
  bool converged = false;
};

[[noreturn]] void ThrowNonFinite(const LatticeArray& v, const RunState& last,
                                 double scale) {
  DecompositionResult result;
  DecompositionParams params = last.params;
  for (double& g : params.gamma.mutable_values()) g *= scale;
  for (double& d : params.delta.mutable_values()) d *= scale;
  params.kappa *= scale;
  LatticeArray raw = v;
  for (double& x : raw.mutable_values()) x *= scale;
  result.spectrum = SpectrumOf(raw, params);
  result.params = std::move(params);
  result.loss_history = last.history;
  result.iterations = last.iterations;
  throw OptimizationError("decomposition loss became non-finite",
                          std::move(result));
}

RunState RunPrimalDual(const LatticeArray& v, DecompositionParams start,
                       const OptimizerConfig& config, double scale) {
  const int n = v.n();
  const DecompositionOperator op(n);
  const Preconditioner pre = MakePreconditioner(op);

  RunState state{std::move(start), 0.0, {}};
  InteractionSpectrum spectrum = SpectrumOf(v, state.params);
  state.loss = L1Loss(spectrum);
  state.history.push_back(state.loss * scale);
  Progress progress(state.loss, config);

  DecompositionParams x = state.params;
  InteractionSpectrum dual{LatticeArray(n), LatticeArray(n)};
  LatticeArray gamma_grad(n);
  LatticeArray delta_grad(n);
  const double primal_step = config.step;
  const double dual_scale = 1.0 / config.step;

  for (int iter = 0; iter < config.max_iters; ++iter) {
    op.ApplyAdjoint(dual, gamma_grad, delta_grad);
    PrimalStep(gamma_grad, delta_grad, pre, primal_step, x);
    PinGamma(v, x);
    InteractionSpectrum next = SpectrumOf(v, x);
    const double loss = L1Loss(next);
    if (!std::isfinite(loss)) ThrowNonFinite(v, state, scale);

    for (Family family : {Family::kAnd, Family::kOr}) {
      const bool is_and = family == Family::kAnd;
      LatticeArray& y = is_and ? dual.and_effects : dual.or_effects;
      const LatticeArray& sigma = pre.dual_step.effects(family);
      const LatticeArray& now = next.effects(family);
      const LatticeArray& before = spectrum.effects(family);
      for (std::size_t s = is_and ? 0 : 1; s < y.size(); ++s) {
        const double extrapolated = 2.0 * now[s] - before[s];
        y[s] = std::clamp(y[s] + dual_scale * sigma[s] * extrapolated, -1.0,
                          1.0);
      }
    }
    spectrum = std::move(next);
    state.iterations = iter + 1;

    if (progress.Offer(loss)) {
      state.params = x;
      state.loss = loss;
      state.history.push_back(loss * scale);
    }
    if (progress.Converged()) {
      state.converged = true;
      break;
    }
  }
  return state;
}

// The effects themselves as unknowns: w = (a, o) with a the AND effects and
// o the OR effects. A w = v_and + v_or, so the decomposition is the basis
// pursuit problem  min |w|_1  s.t.  A w + delta = v,  |delta| <= kappa.
class EffectBasis {
 public:
  explicit EffectBasis(int n) : n_(n), size_(LatticeSize(n)) {}

  // out[T] = sum_{S subset T} a_S + sum_{S meets T} o_S.
  void Apply(const Eigen::VectorXd& w, Eigen::VectorXd& out) const {
    std::vector<double> a(w.data(), w.data() + size_);
    std::vector<double> o(w.data() + size_, w.data() + 2 * size_);
    o[0] = 0.0;
    double total = 0.0;
    for (double x : o) total += x;
    kernels::SubsetSumInPlace(a, n_);
    kernels::SubsetSumInPlace(o, n_);
    const std::size_t full = size_ - 1;
    out.resize(static_cast<Eigen::Index>(size_));
    for (std::size_t t = 0; t < size_; ++t) {
      out[t] = a[t] + total - o[full ^ t];
    }
  }

  void ApplyTranspose(const Eigen::VectorXd& y, Eigen::VectorXd& out) const {
    std::vector<double> up(y.data(), y.data() + size_);
    std::vector<double> down = up;
    const double total = y.sum();
    kernels::SupersetSumInPlace(up, n_);
    kernels::SubsetSumInPlace(down, n_);
    const std::size_t full = size_ - 1;
    out.resize(static_cast<Eigen::Index>(2 * size_));
    for (std::size_t s = 0; s < size_; ++s) {
      out[s] = up[s];
      out[size_ + s] = s == 0 ? 0.0 : total - down[full ^ s];
    }
  }

  // Cholesky factor of A A^T (+ I when the residuals are free), shared
  // between calls.
  static std::shared_ptr<const Eigen::LLT<Eigen::MatrixXd>> Gram(
      int n, bool with_residual) {
    static std::mutex mu;
    static std::map<std::pair<int, bool>,
                    std::shared_ptr<const Eigen::LLT<Eigen::MatrixXd>>>
        cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[{n, with_residual}];
    if (slot) return slot;
    const Eigen::Index size = static_cast<Eigen::Index>(LatticeSize(n));
    Eigen::MatrixXd gram(size, size);
    for (Eigen::Index t = 0; t < size; ++t) {
      const int ct = std::popcount(static_cast<std::uint32_t>(t));
      for (Eigen::Index u = 0; u < size; ++u) {
        const int cu = std::popcount(static_cast<std::uint32_t>(u));
        const auto both = static_cast<std::uint32_t>(t & u);
        const auto either = static_cast<std::uint32_t>(t | u);
        gram(t, u) = Pow2(std::popcount(both)) + Pow2(n) - Pow2(n - ct) -
                     Pow2(n - cu) + Pow2(n - std::popcount(either));
      }
    }
    if (with_residual) gram.diagonal().array() += 1.0;
    slot = std::make_shared<const Eigen::LLT<Eigen::MatrixXd>>(gram);
    return slot;
  }

 private:
  int n_;
  std::size_t size_;
};

DecompositionParams ParamsFromEffects(const LatticeArray& v,
                                      const Eigen::VectorXd& w,
                                      const Eigen::VectorXd& delta,
                                      double kappa) {
  const int n = v.n();
  LatticeArray v_and(n, std::vector<double>(w.data(), w.data() + v.size()));
  kernels::SubsetSumInPlace(v_and.mutable_values(), n);
  DecompositionParams params{LatticeArray(n), LatticeArray(n), kappa};
  for (std::size_t t = 0; t < v.size(); ++t) {
    params.delta[t] = std::clamp(delta[static_cast<Eigen::Index>(t)], -kappa,
                                 kappa);
  }
  for (std::size_t t = 1; t < v.size(); ++t) {
    params.gamma[t] = v_and[t] - 0.5 * (v[t] - params.delta[t]);
  }
  PinGamma(v, params);
  return params;
}

// ADMM on the basis pursuit form, with residual balancing of the penalty.
// The small quadratic term on delta picks the least-norm residual among the
// L1 minimisers.
constexpr int kLossInterval = 10;

RunState RunSplitting(const LatticeArray& v, double kappa,
                      const OptimizerConfig& config, double scale) {
  const int n = v.n();
  const Eigen::Index size = static_cast<Eigen::Index>(v.size());
  const bool free_residual = kappa > 0.0;
  const EffectBasis basis(n);
  const auto gram = EffectBasis::Gram(n, free_residual);
  const Eigen::Map<const Eigen::VectorXd> target(v.values().data(), size);

  RunState state{InitialParams(v, kappa), 0.0, {}};
  state.loss = L1Loss(SpectrumOf(v, state.params));
  state.history.push_back(state.loss * scale);
  Progress progress(state.loss, config);

  Eigen::VectorXd w = Eigen::VectorXd::Zero(2 * size);
  Eigen::VectorXd d = Eigen::VectorXd::Zero(size);
  Eigen::VectorXd uw = w, ud = d, z = w, e = d;
  Eigen::VectorXd residual, lambda, back;
  double rho = config.step;

  for (int iter = 0; iter < config.max_iters; ++iter) {
    // Projection onto {(z, e) : A z + e = v}.
    const Eigen::VectorXd p = w - uw;
    const Eigen::VectorXd q = d - ud;
    basis.Apply(p, residual);
    residual -= target;
    if (free_residual) residual += q;
    lambda = gram->solve(residual);
    basis.ApplyTranspose(lambda, back);
    z = p - back;
    z[size] = 0.0;
    if (free_residual) e = q - lambda;

    const Eigen::VectorXd w_before = w;
    const Eigen::VectorXd d_before = d;
    const double shrink = 1.0 / rho;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      const double a = z[i] + uw[i];
      w[i] = std::copysign(std::max(std::abs(a) - shrink, 0.0), a);
    }
    d = ((e + ud) * (rho / (rho + config.residual_penalty)))
            .cwiseMax(-kappa)
            .cwiseMin(kappa);
    uw += z - w;
    ud += e - d;

    state.iterations = iter + 1;
    const double primal = std::sqrt((z - w).squaredNorm() +
                                    (e - d).squaredNorm());
    const double dual = rho * std::sqrt((w - w_before).squaredNorm() +
                                        (d - d_before).squaredNorm());
    const double reference = std::max(
        1.0, std::sqrt(z.squaredNorm() + e.squaredNorm()));
    const bool converged =
        primal <= config.tol * reference && dual <= config.tol * reference;
    if (converged || iter % kLossInterval == kLossInterval - 1 ||
        iter + 1 == config.max_iters) {
      DecompositionParams params = ParamsFromEffects(v, z, d, kappa);
      const double loss = L1Loss(SpectrumOf(v, params));
      if (!std::isfinite(loss)) ThrowNonFinite(v, state, scale);
      if (progress.Offer(loss)) {
        state.params = std::move(params);
        state.loss = loss;
        state.history.push_back(loss * scale);
      }
    }
    if (converged) {
      state.converged = true;
      break;
    }
    if (iter % 10 == 9) {
      if (primal > 10.0 * dual) {
        rho *= 2.0;
        uw *= 0.5;
        ud *= 0.5;
      } else if (dual > 10.0 * primal) {
        rho *= 0.5;
        uw *= 2.0;
        ud *= 2.0;
      }
    }
  }
  return state;
}

RunState RunSubgradient(const LatticeArray& v, DecompositionParams start,
                        const OptimizerConfig& config, double scale) {
  const int n = v.n();
  const DecompositionOperator op(n);
  const Preconditioner pre = MakePreconditioner(op);

  RunState state{std::move(start), 0.0, {}};
  InteractionSpectrum spectrum = SpectrumOf(v, state.params);
  state.loss = L1Loss(spectrum);
  state.history.push_back(state.loss * scale);
  Progress progress(state.loss, config);

  double width = config.huber_width * state.loss;
  if (!(width > 0.0)) width = 1e-12;
  double step = config.step;
  InteractionSpectrum slope{LatticeArray(n), LatticeArray(n)};
  LatticeArray gamma_grad(n);
  LatticeArray delta_grad(n);

  for (int iter = 0; iter < config.max_iters; ++iter) {
    for (Family family : {Family::kAnd, Family::kOr}) {
      LatticeArray& out =
          family == Family::kAnd ? slope.and_effects : slope.or_effects;
      const LatticeArray& effects = spectrum.effects(family);
      for (std::size_t s = 0; s < out.size(); ++s) {
        out[s] = std::clamp(effects[s] / width, -1.0, 1.0);
      }
    }
    slope.or_effects[0] = 0.0;
    op.ApplyAdjoint(slope, gamma_grad, delta_grad);

    DecompositionParams trial = state.params;
    PrimalStep(gamma_grad, delta_grad, pre, step, trial);
    PinGamma(v, trial);
    InteractionSpectrum next = SpectrumOf(v, trial);
    const double loss = L1Loss(next);
    if (!std::isfinite(loss)) ThrowNonFinite(v, state, scale);
    state.iterations = iter + 1;

    if (progress.Offer(loss)) {
      state.params = std::move(trial);
      state.loss = loss;
      state.history.push_back(loss * scale);
      spectrum = std::move(next);
    } else {
      step *= 0.5;
      if (step < 1e-12 * config.step) {
        state.converged = true;
        break;
      }
    }
    if (progress.Converged()) {
      state.converged = true;
      break;
    }
  }
  return state;
}

// Maps a run on v / scale back to the units of v.
DecompositionResult Finish(const LatticeArray& v, double kappa, RunState best,
                           double scale) {
  DecompositionResult result;
  result.params = std::move(best.params);
  for (double& g : result.params.gamma.mutable_values()) g *= scale;
  for (double& d : result.params.delta.mutable_values()) d *= scale;
  result.params.kappa = kappa;
  // Clamp again in original units so |delta| <= kappa holds exactly.
  for (double& d : result.params.delta.mutable_values()) {
    d = std::clamp(d, -kappa, kappa);
  }
  PinGamma(v, result.params);
  result.spectrum = SpectrumOf(v, result.params);
  result.loss_history = std::move(best.history);
  result.iterations = best.iterations;
  result.converged = best.converged;
  return result;
}

}  // namespace

DecompositionParams InitialParams(const LatticeArray& v, double kappa) {
  DecompositionParams params{LatticeArray(v.n()), LatticeArray(v.n()), kappa};
  PinGamma(v, params);
  return params;
}

double DefaultKappa(const LatticeArray& v, double ratio) {
  return ratio * std::abs(v.full_value() - v.empty_value());
}

SplitTables Split(const LatticeArray& v, const DecompositionParams& params) {
  CheckParams(v, params);
  SplitTables out{LatticeArray(v.n()), LatticeArray(v.n())};
  for (std::size_t t = 1; t < v.size(); ++t) {
    const double clean = v[t] - params.delta[t];
    out.v_and[t] = 0.5 * clean + params.gamma[t];
    out.v_or[t] = 0.5 * clean - params.gamma[t];
  }
  out.v_and[0] = v[0] - params.delta[0];
  out.v_or[0] = 0.0;
  return out;
}

InteractionSpectrum SpectrumOf(const LatticeArray& v,
                               const DecompositionParams& params) {
  const SplitTables split = Split(v, params);
  return ComputeSpectrum(split.v_and, split.v_or);
}

double L1Loss(const InteractionSpectrum& spectrum) {
  double loss = 0.0;
  for (double e : spectrum.and_effects.values()) loss += std::abs(e);
  for (std::size_t s = 1; s < spectrum.or_effects.size(); ++s) {
    loss += std::abs(spectrum.or_effects[s]);
  }
  return loss;
}

InteractionSpectrum DecompositionOperator::Apply(
    const LatticeArray& gamma, const LatticeArray& delta) const {
  const LatticeArray zero(n_);
  DecompositionParams params{gamma, delta, 0.0};
  return SpectrumOf(zero, params);
}

void DecompositionOperator::ApplyAdjoint(const InteractionSpectrum& dual,
                                         LatticeArray& gamma_grad,
                                         LatticeArray& delta_grad) const {
  const LatticeArray and_grad = SupersetMoebiusTransform(dual.and_effects);
  LatticeArray or_rows = dual.or_effects;
  or_rows[0] = 0.0;
  // d I_or / d v_or = -M R, so the adjoint is -R M^T.
  const LatticeArray or_grad = ReverseTable(SupersetMoebiusTransform(or_rows));
  for (std::size_t t = 1; t < and_grad.size(); ++t) {
    gamma_grad[t] = and_grad[t] + or_grad[t];
    delta_grad[t] = -0.5 * (and_grad[t] - or_grad[t]);
  }
  gamma_grad[0] = 0.0;
  delta_grad[0] = -and_grad[0];
}

InteractionSpectrum DecompositionOperator::RowAbsSums() const {
  InteractionSpectrum rows{LatticeArray(n_), LatticeArray(n_)};
  const std::uint32_t full = FullBits(n_);
  for (std::size_t s = 0; s < rows.and_effects.size(); ++s) {
    const double subsets = Pow2(std::popcount(static_cast<std::uint32_t>(s)));
    rows.and_effects[s] = 1.0 + 1.5 * (subsets - 1.0);
    if (s != 0) {
      rows.or_effects[s] = 1.5 * (subsets - (s == full ? 1.0 : 0.0));
    }
  }
  return rows;
}

void DecompositionOperator::ColumnAbsSums(LatticeArray& gamma,
                                          LatticeArray& delta) const {
  const std::uint32_t full = FullBits(n_);
  for (std::size_t t = 1; t < gamma.size(); ++t) {
    const int order = std::popcount(static_cast<std::uint32_t>(t));
    const double count =
        Pow2(n_ - order) + Pow2(order) - (t == full ? 1.0 : 0.0);
    gamma[t] = count;
    delta[t] = 0.5 * count;
  }
  gamma[0] = 0.0;
  delta[0] = Pow2(n_);
}

std::string_view OptimizerMethodName(OptimizerMethod method) {
  switch (method) {
    case OptimizerMethod::kAuto:
      return "auto";
    case OptimizerMethod::kSplitting:
      return "admm";
    case OptimizerMethod::kPrimalDual:
      return "primal-dual";
    case OptimizerMethod::kSubgradient:
      return "subgradient";
  }
  return "unknown";
}

OptimizerMethod ParseOptimizerMethod(std::string_view name) {
  if (name == "auto") return OptimizerMethod::kAuto;
  if (name == "admm") return OptimizerMethod::kSplitting;
  if (name == "primal-dual") return OptimizerMethod::kPrimalDual;
  if (name == "subgradient") return OptimizerMethod::kSubgradient;
  throw Error(ErrorKind::kConfig,
              "unknown optimizer method '" + std::string(name) + "'");
}

DecompositionResult Optimize(const LatticeArray& v, double kappa,
                             const OptimizerConfig& config) {
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) {
    throw Error(ErrorKind::kDomain, "kappa must be finite and >= 0");
  }
  if (config.max_iters < 0 || config.patience < 1 || !(config.step > 0.0) ||
      !(config.residual_penalty >= 0.0)) {
    throw Error(ErrorKind::kConfig, "invalid optimizer configuration");
  }
  v.CheckFinite();

  // Work on v / scale so that step sizes and tolerances are scale-free.
  double scale = 0.0;
  for (double x : v.values()) scale = std::max(scale, std::abs(x));
  if (scale == 0.0) scale = 1.0;
  LatticeArray unit = v;
  for (double& x : unit.mutable_values()) x /= scale;
  const double unit_kappa = kappa / scale;

  OptimizerMethod method = config.method;
  if (method == OptimizerMethod::kAuto) {
    method = v.n() <= kMaxSplittingVariables ? OptimizerMethod::kSplitting
                                             : OptimizerMethod::kPrimalDual;
  }
  if (method == OptimizerMethod::kSplitting) {
    return Finish(v, kappa, RunSplitting(unit, unit_kappa, config, scale),
                  scale);
  }
  auto run = [&](DecompositionParams start) {
    return method == OptimizerMethod::kPrimalDual
               ? RunPrimalDual(unit, std::move(start), config, scale)
               : RunSubgradient(unit, std::move(start), config, scale);
  };

  RunState best = run(InitialParams(unit, unit_kappa));
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> jitter(-0.5, 0.5);
  for (int r = 0; r < config.restarts; ++r) {
    DecompositionParams start = InitialParams(unit, unit_kappa);
    for (std::size_t t = 1; t < unit.size(); ++t) {
      start.gamma[t] = jitter(rng) * std::abs(unit[t]);
    }
    RunState candidate = run(std::move(start));
    if (candidate.loss < best.loss) best = std::move(candidate);
  }

  return Finish(v, kappa, std::move(best), scale);
}

}  // namespace andor
