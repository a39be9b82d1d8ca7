#pragma once

#include <cstddef>
#include <vector>

#include "fgcsp/factor_graph.hpp"
#include "fgcsp/rng.hpp"

namespace fgcsp::fixture {

// (¬x1∨¬x2∨x3)(¬x1∨x2∨x3)(x1∨¬x2∨x3)(¬x1∨x2∨¬x3)(x1∨¬x2∨¬x3); solutions TTT, FFF, FFT.
FactorGraph three_var_formula();
// x1 ∧ ¬x1 as two unary clauses.
FactorGraph conflicting_units();
FactorGraph qcol_cycle(std::size_t n, std::size_t q);
FactorGraph qcol_triangle(std::size_t q = 3);
FactorGraph free_variables(std::size_t n, std::size_t q = 2);

// Tree-shaped factor graph (acyclic bipartite graph) with ≤ max_vars
// variables, domain sizes 2..max_domain, factor arity 1..3 and random tables
// that keep at least one solution.
FactorGraph random_tree(Rng& rng, std::size_t max_vars = 12, std::size_t max_domain = 3);

// Small loopy instance: k-SAT, q-COL or generic random tables, at most 2^16
// joint assignments. May be unsatisfiable.
FactorGraph random_small(Rng& rng);

// Random instance for SP checks: |X_i| ≤ 3, arity ≤ 3.
FactorGraph random_sp_instance(Rng& rng, std::size_t n = 4, std::size_t factors = 4);

}  // namespace fgcsp::fixture
