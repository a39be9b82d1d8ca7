#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

#include "fgcsp/factor_graph.hpp"
#include "fgcsp/outcome.hpp"
#include "fgcsp/rng.hpp"
#include "fgcsp/sum_product.hpp"

namespace fgcsp {

// Weight of the sampled δ term at sweep t of T (1-based): (t-1)/(T-1).
// The BP term gets 1 - gamma_at(t, T), so sweep 1 is pure BP and sweep T is
// pure Gibbs.
double gamma_at(std::size_t t, std::size_t T);

struct SweepReport {
  Assignment particle;           // x̂_i for every variable visited
  VarId contradiction = kNoVar;  // first variable with an all-zero belief
};

// One sequential sweep. Each variable's outgoing messages become
// (1 - delta_weight) * BP + delta_weight * δ(x_i, x̂_i), with x̂_i drawn from
// its BP marginal (one uniform per variable, drawn even when delta_weight is 0).
SweepReport perturbed_sweep(const FactorGraph& g, MessageSet& m, double delta_weight, Rng& rng,
                            BPWorkspace& ws, MarginalTable& marginals, std::uint64_t& updates);

// Convenience overload with its own workspace and scratch marginals.
SweepReport perturbed_sweep(const FactorGraph& g, MessageSet& m, double delta_weight, Rng& rng);

// T sweeps from uniform messages; the last sweep's samples are the candidate.
SolveOutcome solve_perturbed_bp(const FactorGraph& g, std::size_t T, Rng& rng);

struct PerturbedBPParams {
  std::size_t initial_T = 10;
  double growth = 2.0;
  std::size_t max_attempts = 10;
  std::uint64_t seed = 0;
};

// T used by the given 1-based attempt.
std::size_t attempt_T(const PerturbedBPParams& p, std::size_t attempt);

// Runs `attempt(T, rng)` with T growing per failure and a fresh substream of
// `rng` per attempt. Stats accumulate over all attempts.
SolveOutcome retry_with_growth(const PerturbedBPParams& params, const Rng& rng,
                               const std::function<SolveOutcome(std::size_t, Rng&)>& attempt);

SolveOutcome solve_with_retries(const FactorGraph& g, const PerturbedBPParams& params, const Rng& rng);

}  // namespace fgcsp
