#include "fgcsp/gibbs.hpp"

#include <string>

namespace fgcsp {

ContradictoryConditional::ContradictoryConditional(VarId var)
    : Error("conditional of variable " + std::to_string(var) + " is all-zero"), var_(var) {}

StuckState::StuckState(VarId site)
    : Error("Gibbs chain stuck at site " + std::to_string(site)), site_(site) {}

GibbsDraw gs_message(const FactorGraph& g, MessageSet& m, VarId i, Rng& rng) {
  for (EdgeId e : g.var_edges(i)) {
    const Edge& ed = g.edge(e);
    Message in = factor_to_var(g, m, ed.factor, i);
    std::copy(in.entries.begin(), in.entries.end(), m.to_var(e).begin());
  }
  GibbsDraw d;
  d.conditional = marginal(g, m, i);
  if (d.conditional.contradictory) throw ContradictoryConditional(i);
  d.value = static_cast<Value>(sample_index(d.conditional.entries, rng.uniform()));
  for (EdgeId e : g.var_edges(i)) {
    auto out = m.to_factor(e);
    std::fill(out.begin(), out.end(), 0.0);
    out[d.value] = 1.0;
  }
  return d;
}

std::vector<double> gibbs_conditional(const FactorGraph& g, const Assignment& particle, VarId i) {
  const Domain& dom = g.domain(i);
  std::vector<double> w(dom.size());
  for (std::size_t x = 0; x < w.size(); ++x) w[x] = dom.allows(static_cast<Value>(x)) ? 1.0 : 0.0;
  for (EdgeId e : g.var_edges(i)) {
    const Edge& ed = g.edge(e);
    const auto& c = g.constraint(ed.factor);
    auto strides = g.strides(ed.factor);
    std::size_t base = 0;
    for (std::size_t k = 0; k < c.scope.size(); ++k)
      if (k != ed.slot) base += particle[c.scope[k]] * strides[k];
    for (std::size_t x = 0; x < w.size(); ++x)
      if (!c.table[base + x * strides[ed.slot]]) w[x] = 0.0;
  }
  return w;
}

Assignment random_particle(const FactorGraph& g, Rng& rng) {
  Assignment a(g.num_variables());
  for (std::size_t i = 0; i < g.num_variables(); ++i) {
    auto allowed = g.domain(i).allowed_values();
    if (allowed.empty()) throw StuckState(static_cast<VarId>(i));
    a[i] = allowed[rng.below(allowed.size())];
  }
  return a;
}

namespace {

// One systematic sweep; throws StuckState.
void gibbs_sweep(const FactorGraph& g, Assignment& particle, Rng& rng) {
  for (std::size_t i = 0; i < g.num_variables(); ++i) {
    auto w = gibbs_conditional(g, particle, static_cast<VarId>(i));
    bool any = false;
    for (double x : w) any = any || x > 0.0;
    if (!any) throw StuckState(static_cast<VarId>(i));
    particle[i] = static_cast<Value>(sample_index(w, rng.uniform()));
  }
}

}  // namespace

GibbsResult run_gibbs(const FactorGraph& g, std::size_t sweeps, std::size_t burn_in, Rng& rng) {
  if (burn_in >= sweeps) throw Error("burn-in must be smaller than the number of sweeps");
  GibbsResult r;
  r.particle = random_particle(g, rng);
  r.empirical.rows.resize(g.num_variables());
  for (std::size_t i = 0; i < g.num_variables(); ++i) r.empirical.rows[i].assign(g.domain(i).size(), 0.0);

  for (std::size_t t = 1; t <= sweeps; ++t) {
    gibbs_sweep(g, r.particle, rng);
    if (t <= burn_in) continue;
    for (std::size_t i = 0; i < g.num_variables(); ++i) r.empirical.rows[i][r.particle[i]] += 1.0;
  }
  const double kept = static_cast<double>(sweeps - burn_in);
  for (auto& row : r.empirical.rows)
    for (double& p : row) p /= kept;
  return r;
}

SolveOutcome solve_gibbs(const FactorGraph& g, std::size_t sweeps, Rng& rng) {
  SolveOutcome out;
  out.stats.attempts = 1;
  Assignment particle;
  try {
    particle = random_particle(g, rng);
    for (std::size_t t = 1; t <= sweeps; ++t) {
      out.stats.iterations = t;
      out.stats.message_updates += 2 * g.num_edges();
      gibbs_sweep(g, particle, rng);
      if (evaluate(g, particle)) {
        out.result = Satisfied{particle, t, 1};
        return out;
      }
    }
  } catch (const StuckState& s) {
    out.result = Contradiction{1, out.stats.iterations, s.site()};
    return out;
  }
  out.result = Exhausted{1};
  return out;
}

}  // namespace fgcsp
