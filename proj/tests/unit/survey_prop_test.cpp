#include <gtest/gtest.h>

#include <cmath>

#include "fgcsp/instances.hpp"
#include "fgcsp/survey_prop.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace fgcsp;

namespace {

std::vector<std::vector<double>> to_factor_table(const FactorGraph& g, const SurveySet& s) {
  std::vector<std::vector<double>> out;
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    auto v = s.to_factor(static_cast<EdgeId>(e));
    out.emplace_back(v.begin(), v.end());
  }
  return out;
}

std::vector<std::vector<double>> to_var_table(const FactorGraph& g, const SurveySet& s) {
  std::vector<std::vector<double>> out;
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    auto v = s.to_var(static_cast<EdgeId>(e));
    out.emplace_back(v.begin(), v.end());
  }
  return out;
}

void expect_near(std::span<const double> a, std::span<const double> b, double tol) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k], b[k], tol) << "entry " << k;
}

// Random instance, sometimes with one domain narrowed, and random surveys.
FactorGraph sp_case(Rng& rng) {
  auto g = fixture::random_sp_instance(rng, 3 + rng.below(3), 3 + rng.below(3));
  if (rng.below(2) == 0) {
    const auto v = static_cast<VarId>(rng.below(g.num_variables()));
    if (g.domain(v).size() == 3) g = restrict_domain(g, v, std::vector<Value>{0, 2});
  }
  return g;
}

WarningSet warnings_from(const FactorGraph& g, const std::vector<SubsetMask>& value_sets) {
  WarningSet w(g);
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    const VarId i = g.edge(static_cast<EdgeId>(e)).var;
    for (std::size_t x = 0; x < g.domain(i).size(); ++x) {
      const std::uint8_t a = (value_sets[i] >> x) & 1;
      w.to_factor(static_cast<EdgeId>(e))[x] = a;
      w.to_var(static_cast<EdgeId>(e))[x] = a;
    }
  }
  return w;
}

}  // namespace

TEST(SurveyProp, MaskHelpers) {
  EXPECT_EQ(allowed_mask(Domain(3)), 0b111u);
  EXPECT_EQ(mask_values(0b101), (std::vector<Value>{0, 2}));
  auto g = restrict_domain(fixture::free_variables(1, 3), 0, std::vector<Value>{1, 2});
  EXPECT_EQ(allowed_mask(g.domain(0)), 0b110u);
}

TEST(SurveyProp, ProjectToValues) {
  // {0}: .2, {1}: .3, {0,1}: .5 over a binary domain.
  const std::vector<double> w{0.0, 0.2, 0.3, 0.5};
  auto p = project_to_values(w, 2);
  EXPECT_NEAR(p[0], 0.7 / 1.5, 1e-15);
  EXPECT_NEAR(p[1], 0.8 / 1.5, 1e-15);
}

TEST(SurveyProp, FactorUpdateMatchesBruteForce) {
  Rng rng(21);
  for (int rep = 0; rep < 60; ++rep) {
    auto g = sp_case(rng);
    const SurveySet s = SurveySet::random(g, rng);
    const auto table = to_factor_table(g, s);
    for (double m : {0.0, 0.5, 1.0}) {
      SPParams p;
      p.m = m;
      for (std::size_t e = 0; e < g.num_edges(); ++e) {
        const Edge& ed = g.edge(static_cast<EdgeId>(e));
        auto fast = sp_factor_to_var(g, s, ed.factor, ed.var, p);
        auto slow = oracle::sp_factor_to_var(g, table, ed.factor, ed.var, m);
        expect_near(fast.weights, slow, 1e-12);
      }
    }
  }
}

TEST(SurveyProp, VariableUpdateMatchesBruteForce) {
  Rng rng(22);
  for (int rep = 0; rep < 60; ++rep) {
    auto g = sp_case(rng);
    const SurveySet s = SurveySet::random(g, rng);
    const auto table = to_var_table(g, s);
    for (double m : {0.0, 0.5, 1.0}) {
      SPParams p;
      p.m = m;
      for (std::size_t i = 0; i < g.num_variables(); ++i) {
        auto cm = sp_cluster_marginal(g, s, static_cast<VarId>(i), p);
        auto slow = oracle::sp_var_product(g, table, static_cast<VarId>(i), kNoVar, m);
        expect_near(cm.over_subsets, slow, 1e-12);
        for (EdgeId e : g.var_edges(static_cast<VarId>(i))) {
          auto fast = sp_var_to_factor(g, s, static_cast<VarId>(i), g.edge(e).factor, p);
          auto slow_msg = oracle::sp_var_to_factor(g, table, static_cast<VarId>(i), g.edge(e).factor, m);
          expect_near(fast.weights, slow_msg, 1e-12);
        }
      }
    }
  }
}

TEST(SurveyProp, UpdateVariableComposesBothSides) {
  Rng rng(23);
  for (int rep = 0; rep < 30; ++rep) {
    auto g = sp_case(rng);
    SurveySet s = SurveySet::random(g, rng);
    SPParams p;
    p.m = 0.5;
    SPWorkspace ws(g, p);
    for (std::size_t v = 0; v < g.num_variables(); ++v) {
      const auto i = static_cast<VarId>(v);
      SurveySet expected = s;
      const auto before = to_factor_table(g, s);
      for (EdgeId e : g.var_edges(i)) {
        auto w = oracle::sp_factor_to_var(g, before, g.edge(e).factor, i, p.m);
        std::copy(w.begin(), w.end(), expected.to_var(e).begin());
      }
      const auto incoming = to_var_table(g, expected);
      auto cm_slow = oracle::sp_var_product(g, incoming, i, kNoVar, p.m);
      ClusterMarginal cm;
      std::uint64_t updates = 0;
      const bool ok = ws.update_variable(s, i, cm, updates);
      const bool slow_ok = std::any_of(cm_slow.begin(), cm_slow.end(), [](double x) { return x > 0.0; });
      ASSERT_EQ(ok, slow_ok);
      if (!ok) break;
      EXPECT_EQ(updates, 2 * g.var_edges(i).size());
      expect_near(cm.over_subsets, cm_slow, 1e-12);
      for (EdgeId e : g.var_edges(i)) {
        expect_near(s.to_var(e), expected.to_var(e), 1e-12);
        auto out = oracle::sp_var_to_factor(g, incoming, i, g.edge(e).factor, p.m);
        expect_near(s.to_factor(e), out, 1e-12);
      }
    }
  }
}

// With m = 1 the variable update, read through Σ_{y∋x} μ̃(y)/|y|, is the BP
// product of the incoming surveys projected by Σ_{y∋x}.
TEST(SurveyProp, SizeWeightedVariableSideReducesToBP) {
  Rng rng(24);
  for (int rep = 0; rep < 40; ++rep) {
    auto g = sp_case(rng);
    const SurveySet s = SurveySet::random(g, rng);
    SPParams p;
    p.m = 1.0;
    for (std::size_t e = 0; e < g.num_edges(); ++e) {
      const Edge& ed = g.edge(static_cast<EdgeId>(e));
      auto sp = sp_var_to_factor(g, s, ed.var, ed.factor, p);
      if (sp.contradictory) continue;
      const std::size_t q = g.domain(ed.var).size();
      std::vector<double> lhs(q, 0.0);
      for (std::size_t y = 1; y < sp.weights.size(); ++y)
        for (std::size_t x = 0; x < q; ++x)
          if ((y >> x) & 1) lhs[x] += sp.weights[y] / std::popcount(y);
      normalize(lhs);
      std::vector<double> rhs(q, 1.0);
      for (std::size_t x = 0; x < q; ++x)
        if (!g.domain(ed.var).allows(static_cast<Value>(x))) rhs[x] = 0.0;
      for (EdgeId other : g.var_edges(ed.var)) {
        if (other == static_cast<EdgeId>(e)) continue;
        auto proj = project_to_values(s.to_var(other), q);
        for (std::size_t x = 0; x < q; ++x) rhs[x] *= proj[x];
      }
      normalize(rhs);
      expect_near(lhs, rhs, 1e-12);
    }
  }
}

// With m = 1 and singleton incoming surveys, the factor update read through
// Σ_{y∋x} μ̃(y)/|y| is the BP factor message.
TEST(SurveyProp, SizeWeightedFactorSideReducesToBPOnSingletons) {
  Rng rng(25);
  for (int rep = 0; rep < 40; ++rep) {
    auto g = sp_case(rng);
    SurveySet s(g);
    MessageSet bp(g);
    for (std::size_t e = 0; e < g.num_edges(); ++e) {
      auto out = s.to_factor(static_cast<EdgeId>(e));
      auto msg = bp.to_factor(static_cast<EdgeId>(e));
      std::fill(out.begin(), out.end(), 0.0);
      for (std::size_t x = 0; x < msg.size(); ++x) {
        msg[x] = msg[x] > 0.0 ? rng.uniform() + 0.01 : 0.0;
        out[std::size_t{1} << x] = msg[x];
      }
      normalize(msg);
      normalize(out);
    }
    SPParams p;
    p.m = 1.0;
    for (std::size_t e = 0; e < g.num_edges(); ++e) {
      const Edge& ed = g.edge(static_cast<EdgeId>(e));
      auto sp = sp_factor_to_var(g, s, ed.factor, ed.var, p);
      auto want = factor_to_var(g, bp, ed.factor, ed.var);
      // BP does not apply the target's domain mask on the factor side.
      for (std::size_t x = 0; x < want.entries.size(); ++x)
        if (!g.domain(ed.var).allows(static_cast<Value>(x))) want.entries[x] = 0.0;
      want.contradictory = !normalize(want.entries);
      ASSERT_EQ(sp.contradictory, want.contradictory);
      if (sp.contradictory) continue;
      std::vector<double> lhs(want.entries.size(), 0.0);
      for (std::size_t y = 1; y < sp.weights.size(); ++y)
        for (std::size_t x = 0; x < lhs.size(); ++x)
          if ((y >> x) & 1) lhs[x] += sp.weights[y] / std::popcount(y);
      normalize(lhs);
      expect_near(lhs, want.entries, 1e-12);
    }
  }
}

// Seeded at TTT, one sweep lands on a fixed point whose marginals are all {T}.
TEST(SurveyProp, MaxProductFixedPointAtSolutionTTT) {
  auto g = fixture::three_var_formula();
  auto w = warnings_from(g, {0b01, 0b01, 0b01});
  ASSERT_EQ(maxprod_sweep(g, w), kNoVar);
  const WarningSet settled = w;
  EXPECT_EQ(maxprod_sweep(g, w), kNoVar);
  EXPECT_EQ(w, settled);
  for (VarId i = 0; i < 3; ++i) EXPECT_EQ(maxprod_marginal(g, w, i).allowed, (std::vector<std::uint8_t>{1, 0}));
  // x1 = False is excluded by one clause alone, so its message to that clause
  // stays open.
  EXPECT_NE(w, warnings_from(g, {0b01, 0b01, 0b01}));
}

// Warnings ({F}, {F}, {T,F}) are not stable: ruling out x1 = True needs two
// clauses together, so every factor message comes back as the full set.
TEST(SurveyProp, ExampleClusterWarningsAreNotAFixedPoint) {
  auto g = fixture::three_var_formula();
  auto w = warnings_from(g, {0b10, 0b10, 0b11});
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    const Edge& ed = g.edge(static_cast<EdgeId>(e));
    auto msg = maxprod_factor_to_var(g, w, ed.factor, ed.var);
    EXPECT_EQ(msg.allowed, (std::vector<std::uint8_t>{1, 1})) << "edge " << e;
  }
  EXPECT_EQ(maxprod_sweep(g, w), kNoVar);
  EXPECT_EQ(w, WarningSet(g));
}

TEST(SurveyProp, MaxProductDetectsConflict) {
  auto g = fixture::conflicting_units();
  WarningSet w(g);
  EXPECT_EQ(maxprod_sweep(g, w), VarId{0});
}

TEST(SurveyProp, UnconstrainedVariablesConvergeAtOnce) {
  auto g = fixture::free_variables(3, 3);
  auto r = run_sp(g, {});
  EXPECT_EQ(r.status.kind, BPStatusKind::Converged);
  EXPECT_EQ(r.status.iterations, 1u);
  // No incoming surveys: all mass on the full domain (m = 0).
  for (const auto& cm : r.marginals) {
    EXPECT_DOUBLE_EQ(cm.over_subsets[0b111], 1.0);
    EXPECT_NEAR(cm.over_values[0], 1.0 / 3.0, 1e-15);
  }
}

TEST(SurveyProp, ConflictIsAContradiction) {
  auto r = run_sp(fixture::conflicting_units(), {});
  EXPECT_EQ(r.status.kind, BPStatusKind::Contradiction);
  EXPECT_EQ(r.status.variable, VarId{0});
}

TEST(SurveyProp, Limits) {
  auto g = fixture::qcol_cycle(4, 6);
  EXPECT_THROW(run_sp(g, {}), DomainCapExceeded);
  SPParams wide;
  wide.domain_cap = 6;
  EXPECT_NO_THROW(run_sp(g, wide));
  SPParams tight;
  tight.factor_budget = 2;
  EXPECT_THROW(run_sp(fixture::three_var_formula(), tight), FactorBudgetExceeded);
  SPParams bad_m;
  bad_m.m = 1.5;
  EXPECT_THROW(run_sp(fixture::three_var_formula(), bad_m), Error);
}

TEST(SurveyProp, ZeroMixingIsAPlainSweep) {
  Rng rng(26);
  for (int rep = 0; rep < 20; ++rep) {
    auto g = sp_case(rng);
    SPParams p;
    SPWorkspace wa(g, p), wb(g, p);
    SurveySet a = SurveySet::random(g, rng);
    SurveySet b = a;
    std::vector<ClusterMarginal> ma(g.num_variables()), mb(g.num_variables());
    std::uint64_t ua = 0, ub = 0;
    VarId bad = kNoVar;
    for (std::size_t v = 0; v < g.num_variables() && bad == kNoVar; ++v)
      if (!wa.update_variable(a, static_cast<VarId>(v), ma[v], ua)) bad = static_cast<VarId>(v);
    Rng draw(3);
    auto rep2 = perturbed_sp_sweep(wb, b, 0.0, draw, mb, ub);
    EXPECT_EQ(rep2.contradiction, bad);
    EXPECT_EQ(a, b);
    EXPECT_EQ(ua, ub);
  }
}

TEST(SurveyProp, FullMixingGivesPointMasses) {
  Rng rng(27);
  auto g = fixture::three_var_formula();
  SPWorkspace ws(g, {});
  SurveySet s(g);
  std::vector<ClusterMarginal> marg(g.num_variables());
  std::uint64_t updates = 0;
  auto rep = perturbed_sp_sweep(ws, s, 1.0, rng, marg, updates);
  ASSERT_EQ(rep.contradiction, kNoVar);
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    const Edge& ed = g.edge(static_cast<EdgeId>(e));
    auto out = s.to_factor(static_cast<EdgeId>(e));
    for (std::size_t y = 0; y < out.size(); ++y)
      EXPECT_EQ(out[y], y == (std::size_t{1} << rep.particle[ed.var]) ? 1.0 : 0.0);
  }
}

TEST(SurveyProp, PerturbedSPSolvesSmallFormula) {
  auto g = fixture::three_var_formula();
  PerturbedBPParams sched;
  sched.initial_T = 20;
  sched.max_attempts = 4;
  auto out = solve_perturbed_sp_with_retries(g, sched, {}, Rng(5));
  ASSERT_TRUE(out.satisfied()) << out.kind();
  EXPECT_TRUE(evaluate(g, out.solution().assignment));
}

TEST(SurveyProp, DecimationSolvesSmallFormula) {
  auto g = fixture::three_var_formula();
  for (auto variant : {SPDecVariant::S, SPDecVariant::C}) {
    SPDecParams p;
    auto r = solve_sp_dec(g, variant, p);
    ASSERT_TRUE(r.outcome.satisfied()) << r.outcome.kind();
    EXPECT_TRUE(evaluate(g, r.outcome.solution().assignment));
  }
}

TEST(SurveyProp, DecimationOnRandomSat) {
  std::size_t solved_s = 0, solved_c = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto g = generate(spec_for_alpha(GeneratorKind::KSat, 60, 3.0, 3, seed));
    SPDecParams p;
    p.rho = 0.05;
    p.seed = seed;
    auto s = solve_sp_dec(g, SPDecVariant::S, p);
    auto c = solve_sp_dec(g, SPDecVariant::C, p);
    if (s.outcome.satisfied()) {
      ++solved_s;
      EXPECT_TRUE(evaluate(g, s.outcome.solution().assignment));
    }
    if (c.outcome.satisfied()) {
      ++solved_c;
      EXPECT_TRUE(evaluate(g, c.outcome.solution().assignment));
    }
    for (const auto& round : c.trace.rounds)
      for (auto [v, y] : round.restricted) EXPECT_NE(std::popcount(y), 0);
  }
  EXPECT_GE(solved_s, 4u);
  EXPECT_GE(solved_c, 4u);
}

TEST(SurveyProp, DecimationRejectsBadParameters) {
  SPDecParams p;
  p.rho = 0.0;
  EXPECT_THROW(solve_sp_dec(fixture::three_var_formula(), SPDecVariant::S, p), Error);
}
