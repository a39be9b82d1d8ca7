#include <gtest/gtest.h>

#include "fgcsp/gibbs.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace fgcsp;

TEST(Gibbs, DeltaConditionalAlwaysPicksIt) {
  auto g = FactorGraph::build({Domain(2)}, {{{0}, {1, 0}}});
  MessageSet m(g);
  Rng rng(1);
  for (int k = 0; k < 20; ++k) {
    auto d = gs_message(g, m, 0, rng);
    EXPECT_EQ(d.value, 0u);
    EXPECT_DOUBLE_EQ(m.to_factor(0)[0], 1.0);
    EXPECT_DOUBLE_EQ(m.to_factor(0)[1], 0.0);
  }
}

TEST(Gibbs, SeededDrawIsReproducible) {
  auto g1 = FactorGraph::build({Domain(2)}, {{{0}, {1, 1}}});
  MessageSet a(g1), b(g1);
  Rng r1(42), r2(42);
  for (int k = 0; k < 50; ++k) EXPECT_EQ(gs_message(g1, a, 0, r1).value, gs_message(g1, b, 0, r2).value);
}

TEST(Gibbs, EmpiricalFrequencyMatchesConditional) {
  // Unary factor (1,1) on x0 and a pairwise factor that, with x1 pinned by a
  // delta, leaves x0's conditional at (0.3, 0.7) via a weighted message.
  auto g = FactorGraph::build({Domain(2), Domain(2)}, {{{0, 1}, {1, 0, 1, 1}}});
  MessageSet m(g);
  Rng rng(9);
  std::size_t zeros = 0;
  const std::size_t n = 100000;
  const EdgeId from_x1 = g.find_edge(0, 1);
  for (std::size_t k = 0; k < n; ++k) {
    // μ_{x1→I} = (3/7, 4/7) makes μ_{I→x0} ∝ (1·3/7, 1) ∝ (0.3, 0.7).
    m.to_factor(from_x1)[0] = 3.0 / 7;
    m.to_factor(from_x1)[1] = 4.0 / 7;
    zeros += gs_message(g, m, 0, rng).value == 0;
  }
  EXPECT_NEAR(static_cast<double>(zeros) / n, 0.3, 0.01);
}

TEST(Gibbs, ContradictoryConditionalThrows) {
  auto g = fixture::conflicting_units();
  MessageSet m(g);
  Rng rng(1);
  EXPECT_THROW(gs_message(g, m, 0, rng), ContradictoryConditional);
}

TEST(Gibbs, ConditionalMatchesBPMarginalOnDeltas) {
  Rng rng(31);
  for (int rep = 0; rep < 50; ++rep) {
    auto g = fixture::random_small(rng);
    auto particle = random_particle(g, rng);
    MessageSet m(g);
    for (EdgeId e = 0; e < g.num_edges(); ++e) {
      auto out = m.to_factor(e);
      std::fill(out.begin(), out.end(), 0.0);
      out[particle[g.edge(e).var]] = 1.0;
    }
    for (VarId i = 0; i < g.num_variables(); ++i) {
      MessageSet copy = m;
      for (EdgeId e : g.var_edges(i)) {
        auto in = factor_to_var(g, copy, g.edge(e).factor, i);
        std::copy(in.entries.begin(), in.entries.end(), copy.to_var(e).begin());
      }
      auto bp = marginal(g, copy, i);
      MessageSet work = m;
      Rng draw(5);
      try {
        auto d = gs_message(g, work, i, draw);
        EXPECT_EQ(d.conditional.entries, bp.entries);
        for (EdgeId e : g.var_edges(i)) {
          auto out = work.to_factor(e);
          for (std::size_t x = 0; x < out.size(); ++x) EXPECT_EQ(out[x], x == d.value ? 1.0 : 0.0);
        }
        // The particle-based conditional agrees up to normalization.
        auto w = gibbs_conditional(g, particle, i);
        normalize(w);
        for (std::size_t x = 0; x < w.size(); ++x) EXPECT_NEAR(w[x], bp.entries[x], 1e-15);
      } catch (const ContradictoryConditional&) {
        EXPECT_TRUE(bp.contradictory);
      }
    }
  }
}

TEST(Gibbs, FreeBinaryVariable) {
  Rng rng(2);
  auto r = run_gibbs(fixture::free_variables(1), 10000, 1000, rng);
  EXPECT_NEAR(r.empirical[0][0], 0.5, 0.02);
}

TEST(Gibbs, UnaryPinsParticle) {
  auto g = FactorGraph::build({Domain(2)}, {{{0}, {0, 1}}});
  Rng rng(3);
  auto r = run_gibbs(g, 10, 1, rng);
  EXPECT_EQ(r.particle[0], 1u);
  EXPECT_DOUBLE_EQ(r.empirical[0][1], 1.0);
}

TEST(Gibbs, MatchesExactMarginalsOnConnectedSolutionSpace) {
  // 4-coloring of a 5-cycle: the single-site chain is irreducible there
  // (with 3 colors it is not).
  ASSERT_FALSE(oracle::single_flip_connected(fixture::qcol_cycle(5, 3)));
  auto g = fixture::qcol_cycle(5, 4);
  ASSERT_TRUE(oracle::single_flip_connected(g));
  Rng rng(12);
  auto r = run_gibbs(g, 100000, 1000, rng);
  auto exact = exact_marginals(g);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t c = 0; c < 4; ++c) EXPECT_NEAR(r.empirical[i][c], exact[i][c], 0.02);
}

TEST(Gibbs, ThreeVarSolutionSpaceIsNotSingleFlipConnected) {
  EXPECT_FALSE(oracle::single_flip_connected(fixture::three_var_formula()));
}

TEST(Gibbs, Reproducible) {
  auto g = fixture::qcol_cycle(6, 3);
  Rng a(8), b(8);
  auto ra = run_gibbs(g, 500, 50, a);
  auto rb = run_gibbs(g, 500, 50, b);
  EXPECT_EQ(ra.particle, rb.particle);
  EXPECT_EQ(ra.empirical.rows, rb.empirical.rows);
}

TEST(Gibbs, StuckStateReported) {
  // Two unary factors leave no allowed value for variable 0.
  auto g = fixture::conflicting_units();
  Rng rng(1);
  try {
    run_gibbs(g, 10, 1, rng);
    FAIL() << "expected StuckState";
  } catch (const StuckState& s) {
    EXPECT_EQ(s.site(), 0u);
  }
  Rng rng2(1);
  auto out = solve_gibbs(g, 10, rng2);
  EXPECT_EQ(out.kind(), "contradiction");
  // The interrupted sweep still counts.
  EXPECT_EQ(out.stats.iterations, 1u);
  EXPECT_EQ(std::get<Contradiction>(out.result).sweep, 1u);
}

TEST(Gibbs, SolverFindsSolutions) {
  Rng rng(4);
  auto out = solve_gibbs(fixture::qcol_cycle(7, 3), 100, rng);
  ASSERT_TRUE(out.satisfied());
  EXPECT_TRUE(evaluate(fixture::qcol_cycle(7, 3), out.solution().assignment));
}
