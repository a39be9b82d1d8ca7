#include "fixtures.hpp"

#include <algorithm>
#include <array>

#include "fgcsp/instances.hpp"

namespace fgcsp::fixture {

FactorGraph three_var_formula() {
  const std::array<std::array<int, 3>, 5> clauses{{
      {-1, -2, 3},
      {-1, 2, 3},
      {1, -2, 3},
      {-1, 2, -3},
      {1, -2, -3},
  }};
  std::vector<TabularConstraint> cs;
  for (const auto& c : clauses) cs.push_back(make_clause(c));
  return FactorGraph::build(std::vector<Domain>(3, Domain(2)), std::move(cs));
}

FactorGraph conflicting_units() {
  const int pos[] = {1};
  const int neg[] = {-1};
  return FactorGraph::build({Domain(2)}, {make_clause(pos), make_clause(neg)});
}

namespace {

TabularConstraint disequality(VarId a, VarId b, std::size_t q) {
  TabularConstraint c{{a, b}, std::vector<std::uint8_t>(q * q, 1)};
  for (std::size_t x = 0; x < q; ++x) c.table[x * q + x] = 0;
  return c;
}

std::vector<std::uint8_t> random_table(Rng& rng, std::size_t size, double density) {
  std::vector<std::uint8_t> t(size);
  for (auto& e : t) e = rng.uniform() < density ? 1 : 0;
  if (std::find(t.begin(), t.end(), 1) == t.end()) t[rng.below(size)] = 1;
  return t;
}

}  // namespace

FactorGraph qcol_cycle(std::size_t n, std::size_t q) {
  std::vector<TabularConstraint> cs;
  for (std::size_t i = 0; i < n; ++i)
    cs.push_back(disequality(static_cast<VarId>(i), static_cast<VarId>((i + 1) % n), q));
  return FactorGraph::build(std::vector<Domain>(n, Domain(q)), std::move(cs));
}

FactorGraph qcol_triangle(std::size_t q) { return qcol_cycle(3, q); }

FactorGraph free_variables(std::size_t n, std::size_t q) {
  return FactorGraph::build(std::vector<Domain>(n, Domain(q)), {});
}

FactorGraph random_tree(Rng& rng, std::size_t max_vars, std::size_t max_domain) {
  while (true) {
    const std::size_t n = 2 + rng.below(max_vars - 1);
    std::vector<Domain> domains;
    for (std::size_t i = 0; i < n; ++i) domains.emplace_back(2 + rng.below(max_domain - 1));
    std::vector<TabularConstraint> cs;
    // Each new factor joins one existing variable to one or two new ones.
    std::size_t next = 1;
    while (next < n) {
      TabularConstraint c;
      c.scope.push_back(static_cast<VarId>(rng.below(next)));
      const std::size_t fresh = std::min<std::size_t>(1 + rng.below(2), n - next);
      for (std::size_t k = 0; k < fresh; ++k) c.scope.push_back(static_cast<VarId>(next++));
      std::size_t size = 1;
      for (VarId v : c.scope) size *= domains[v].size();
      c.table = random_table(rng, size, 0.6);
      cs.push_back(std::move(c));
    }
    // A few unary factors; they keep the graph a tree.
    for (std::size_t k = rng.below(3); k > 0; --k) {
      const auto v = static_cast<VarId>(rng.below(n));
      cs.push_back(TabularConstraint{{v}, random_table(rng, domains[v].size(), 0.7)});
    }
    FactorGraph g = FactorGraph::build(domains, cs);
    if (count_solutions(g) > 0) return g;
  }
}

FactorGraph random_small(Rng& rng) {
  switch (rng.below(3)) {
    case 0: {
      GeneratorSpec s;
      s.kind = GeneratorKind::KSat;
      s.k = 3;
      s.n = 4 + rng.below(9);
      s.m = static_cast<std::size_t>(static_cast<double>(s.n) * (1.0 + 3.5 * rng.uniform()));
      s.seed = rng.next();
      return gen_random_ksat(s);
    }
    case 1: {
      GeneratorSpec s;
      s.kind = GeneratorKind::QCol;
      s.q = 3;
      s.n = 3 + rng.below(8);
      s.m = static_cast<std::size_t>(static_cast<double>(s.n) * (0.5 + 1.5 * rng.uniform()));
      s.seed = rng.next();
      return gen_random_qcol(s);
    }
    default: {
      const std::size_t n = 3 + rng.below(6);
      std::vector<Domain> domains;
      for (std::size_t i = 0; i < n; ++i) domains.emplace_back(2 + rng.below(2));
      std::vector<TabularConstraint> cs;
      for (std::size_t f = n + rng.below(n); f > 0; --f) {
        TabularConstraint c;
        const std::size_t arity = 1 + rng.below(3);
        while (c.scope.size() < arity) {
          const auto v = static_cast<VarId>(rng.below(n));
          if (std::find(c.scope.begin(), c.scope.end(), v) == c.scope.end()) c.scope.push_back(v);
        }
        std::size_t size = 1;
        for (VarId v : c.scope) size *= domains[v].size();
        c.table = random_table(rng, size, 0.75);
        cs.push_back(std::move(c));
      }
      return FactorGraph::build(std::move(domains), std::move(cs));
    }
  }
}

FactorGraph random_sp_instance(Rng& rng, std::size_t n, std::size_t factors) {
  std::vector<Domain> domains;
  for (std::size_t i = 0; i < n; ++i) domains.emplace_back(2 + rng.below(2));
  std::vector<TabularConstraint> cs;
  for (std::size_t f = 0; f < factors; ++f) {
    TabularConstraint c;
    const std::size_t arity = 2 + rng.below(2);
    while (c.scope.size() < std::min(arity, n)) {
      const auto v = static_cast<VarId>(rng.below(n));
      if (std::find(c.scope.begin(), c.scope.end(), v) == c.scope.end()) c.scope.push_back(v);
    }
    std::size_t size = 1;
    for (VarId v : c.scope) size *= domains[v].size();
    c.table = random_table(rng, size, 0.7);
    cs.push_back(std::move(c));
  }
  return FactorGraph::build(std::move(domains), std::move(cs));
}

}  // namespace fgcsp::fixture
