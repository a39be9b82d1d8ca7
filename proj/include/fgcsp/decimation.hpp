#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fgcsp/factor_graph.hpp"
#include "fgcsp/outcome.hpp"
#include "fgcsp/sum_product.hpp"

namespace fgcsp {

// Biases closer than this are ties.
inline constexpr double kBiasTieTolerance = 1e-9;

// Lowest index whose entry is within kBiasTieTolerance of the row maximum.
Value argmax_value(std::span<const double> row);

// Picks ⌈rho·|free|⌉ variables by bias max_x μ̂(x) - 1/|X_i|, ties to the lower
// index, each paired with its arg-max value. |X_i| is the row length.
std::vector<Fix> select_most_biased(const MarginalTable& marginals, std::span<const VarId> free,
                                    double rho);
// Same, with |X_i| taken as the number of allowed values in g.
std::vector<Fix> select_most_biased(const FactorGraph& g, const MarginalTable& marginals,
                                    std::span<const VarId> free, double rho);

// Order in which `count` of the scored candidates are taken: highest score
// first, ties (within kBiasTieTolerance) to the lower position.
std::vector<std::size_t> top_by_score(std::span<const double> scores, std::size_t count);

// Variables whose domain still allows more than one value.
std::vector<VarId> free_variables(const FactorGraph& g);

struct DecimationParams {
  double rho = 0.01;
  BPParams bp;
  double rho_divisor = 2.0;
  std::size_t max_attempts = 1;
  bool sample_values = false;       // draw x̂_i ~ μ̂ instead of the arg-max
  bool strict_convergence = false;  // treat a BP MaxIters round as failure
  // Per failed attempt, the first round's BP iteration cap is multiplied by
  // this (later rounds keep bp.max_iters). 1 leaves it unchanged.
  double first_round_growth = 1.0;
  std::uint64_t seed = 0;
};

struct DecimationRound {
  std::size_t attempt = 1;
  double rho = 0.0;
  std::vector<Fix> fixed;
  BPStatus bp_status;
  std::vector<double> biases;  // bias of each fixed variable, same order
  MarginalTable marginals;     // BP marginals the choice was made from
};

struct DecimationTrace {
  std::vector<DecimationRound> rounds;
};

struct DecimationResult {
  SolveOutcome outcome;
  DecimationTrace trace;
};

DecimationResult solve_bp_dec(const FactorGraph& g, const DecimationParams& params);

}  // namespace fgcsp
