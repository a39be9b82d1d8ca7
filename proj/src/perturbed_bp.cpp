#include "fgcsp/perturbed_bp.hpp"

#include <cmath>
#include <numeric>

namespace fgcsp {

double gamma_at(std::size_t t, std::size_t T) {
  if (T < 2) throw Error("T must be at least 2");
  if (t < 1 || t > T) throw Error("sweep index out of range");
  return static_cast<double>(t - 1) / static_cast<double>(T - 1);
}

SweepReport perturbed_sweep(const FactorGraph& g, MessageSet& m, double delta_weight, Rng& rng,
                            BPWorkspace& ws, MarginalTable& marginals, std::uint64_t& updates) {
  if (!(delta_weight >= 0.0 && delta_weight <= 1.0)) throw Error("mixing weight outside [0, 1]");
  SweepReport rep;
  rep.particle = Assignment(g.num_variables());
  const double keep = 1.0 - delta_weight;
  for (std::size_t v = 0; v < g.num_variables(); ++v) {
    const VarId i = static_cast<VarId>(v);
    if (!ws.update_variable(g, m, i, marginals[i], updates)) {
      rep.contradiction = i;
      return rep;
    }
    const Value x = static_cast<Value>(sample_index(marginals[i], rng.uniform()));
    rep.particle[i] = x;
    if (delta_weight == 0.0) continue;
    for (EdgeId e : g.var_edges(i)) {
      auto out = m.to_factor(e);
      for (double& p : out) p *= keep;
      out[x] += delta_weight;
    }
  }
  return rep;
}

SweepReport perturbed_sweep(const FactorGraph& g, MessageSet& m, double delta_weight, Rng& rng) {
  BPWorkspace ws;
  MarginalTable marginals = uniform_marginals(g);
  std::uint64_t updates = 0;
  return perturbed_sweep(g, m, delta_weight, rng, ws, marginals, updates);
}

SolveOutcome solve_perturbed_bp(const FactorGraph& g, std::size_t T, Rng& rng) {
  if (T < 2) throw Error("T must be at least 2");
  SolveOutcome out;
  out.stats.attempts = 1;
  MessageSet m(g);
  BPWorkspace ws;
  MarginalTable marginals = uniform_marginals(g);
  SweepReport rep;
  for (std::size_t t = 1; t <= T; ++t) {
    rep = perturbed_sweep(g, m, gamma_at(t, T), rng, ws, marginals, out.stats.message_updates);
    out.stats.iterations = t;
    if (rep.contradiction != kNoVar) {
      out.result = Contradiction{1, t, rep.contradiction};
      return out;
    }
  }
  if (!evaluate(g, rep.particle)) {
    out.result = Contradiction{1, T, kNoVar};
    return out;
  }
  out.result = Satisfied{std::move(rep.particle), T, 1};
  return out;
}

std::size_t attempt_T(const PerturbedBPParams& p, std::size_t attempt) {
  return static_cast<std::size_t>(
      std::llround(static_cast<double>(p.initial_T) * std::pow(p.growth, static_cast<double>(attempt - 1))));
}

SolveOutcome retry_with_growth(const PerturbedBPParams& params, const Rng& rng,
                               const std::function<SolveOutcome(std::size_t, Rng&)>& attempt) {
  if (params.initial_T < 2) throw Error("initial T must be at least 2");
  if (!(params.growth > 1.0)) throw Error("growth factor must exceed 1");
  if (params.max_attempts < 1) throw Error("max_attempts must be at least 1");
  SolveOutcome total;
  for (std::size_t a = 1; a <= params.max_attempts; ++a) {
    Rng sub = rng.substream(a);
    SolveOutcome one = attempt(attempt_T(params, a), sub);
    total.stats += one.stats;
    if (auto* s = std::get_if<Satisfied>(&one.result)) {
      s->attempts = a;
      s->iterations = total.stats.iterations;
      total.result = std::move(*s);
      return total;
    }
    if (params.max_attempts == 1) {
      total.result = one.result;
      return total;
    }
  }
  total.result = Exhausted{params.max_attempts};
  return total;
}

SolveOutcome solve_with_retries(const FactorGraph& g, const PerturbedBPParams& params, const Rng& rng) {
  return retry_with_growth(params, rng,
                           [&](std::size_t T, Rng& r) { return solve_perturbed_bp(g, T, r); });
}

}  // namespace fgcsp
