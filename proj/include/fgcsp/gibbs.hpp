#pragma once

#include <cstddef>
#include <vector>

#include "fgcsp/factor_graph.hpp"
#include "fgcsp/outcome.hpp"
#include "fgcsp/rng.hpp"
#include "fgcsp/sum_product.hpp"

namespace fgcsp {

class ContradictoryConditional : public Error {
 public:
  explicit ContradictoryConditional(VarId var);
  VarId variable() const { return var_; }

 private:
  VarId var_;
};

// The single-site conditional is all-zero: the chain cannot move from here.
class StuckState : public Error {
 public:
  explicit StuckState(VarId site);
  VarId site() const { return site_; }

 private:
  VarId site_;
};

struct GibbsDraw {
  Message conditional;  // normalized μ̂(x_i)
  Value value = kUnset;
};

// Recomputes the incoming μ_{I→i} from the current μ_{j→I}, forms the BP
// marginal, samples x̂_i from it with one uniform and overwrites every
// outgoing μ_{i→I} with the one-hot δ(x_i, x̂_i).
GibbsDraw gs_message(const FactorGraph& g, MessageSet& m, VarId i, Rng& rng);

// Unnormalized p(x_i | x̂_{mb(i)}): the product of C_I over ∂i with every other
// scope variable held at its particle value, times the domain mask.
std::vector<double> gibbs_conditional(const FactorGraph& g, const Assignment& particle, VarId i);

// Uniform over each variable's allowed values, one draw per variable.
Assignment random_particle(const FactorGraph& g, Rng& rng);

struct GibbsResult {
  MarginalTable empirical;
  Assignment particle;
};

// L systematic-scan sweeps from a uniform particle; empirical marginals
// average the particle over sweeps burn_in+1..L.
GibbsResult run_gibbs(const FactorGraph& g, std::size_t sweeps, std::size_t burn_in, Rng& rng);

// Gibbs as a solver: stops at the first sweep whose particle is a solution.
// A stuck site is reported as Contradiction; running out of sweeps as Exhausted.
SolveOutcome solve_gibbs(const FactorGraph& g, std::size_t sweeps, Rng& rng);

}  // namespace fgcsp
