#include "fgcsp/factor_graph.hpp"

#include <algorithm>
#include <numeric>

namespace fgcsp {

UnsetVariable::UnsetVariable(VarId var)
    : Error("variable " + std::to_string(var) + " is unset"), var_(var) {}

Domain::Domain(std::size_t size) : allowed_(size, 1), count_(size) {
  if (size == 0) throw Error("domain size must be positive");
}

Domain Domain::restricted(std::size_t size, std::span<const Value> allowed) {
  Domain d(size);
  std::fill(d.allowed_.begin(), d.allowed_.end(), 0);
  for (Value v : allowed) {
    if (v >= size) throw Error("restricted value " + std::to_string(v) + " outside domain");
    d.allowed_[v] = 1;
  }
  d.count_ = static_cast<std::size_t>(std::count(d.allowed_.begin(), d.allowed_.end(), 1));
  return d;
}

Value Domain::first_allowed() const {
  for (std::size_t v = 0; v < allowed_.size(); ++v)
    if (allowed_[v]) return static_cast<Value>(v);
  return kUnset;
}

std::vector<Value> Domain::allowed_values() const {
  std::vector<Value> out;
  out.reserve(count_);
  for (std::size_t v = 0; v < allowed_.size(); ++v)
    if (allowed_[v]) out.push_back(static_cast<Value>(v));
  return out;
}

Domain Domain::intersect(std::span<const Value> values) const {
  std::vector<Value> keep;
  for (Value v : values)
    if (allows(v)) keep.push_back(v);
  return restricted(size(), keep);
}

FactorGraph FactorGraph::build(std::vector<Domain> domains,
                               std::vector<TabularConstraint> constraints,
                               const BuildLimits& limits) {
  FactorGraph g;
  const std::size_t n = domains.size();
  g.factor_edge_offset_.reserve(constraints.size() + 1);
  g.factor_edge_offset_.push_back(0);

  for (std::size_t f = 0; f < constraints.size(); ++f) {
    const auto& c = constraints[f];
    if (c.scope.empty())
      throw InvalidScope("constraint " + std::to_string(f) + " has an empty scope");
    std::size_t expected = 1;
    for (std::size_t k = 0; k < c.scope.size(); ++k) {
      VarId v = c.scope[k];
      if (v >= n)
        throw InvalidScope("constraint " + std::to_string(f) + " references variable " +
                           std::to_string(v) + " (only " + std::to_string(n) + " exist)");
      for (std::size_t k2 = 0; k2 < k; ++k2)
        if (c.scope[k2] == v)
          throw InvalidScope("constraint " + std::to_string(f) + " repeats variable " +
                             std::to_string(v));
      expected *= domains[v].size();
      if (expected > limits.max_table_entries)
        throw TableSizeMismatch("constraint " + std::to_string(f) + " exceeds the table size limit of " +
                                std::to_string(limits.max_table_entries) + " entries");
    }
    if (c.table.size() != expected)
      throw TableSizeMismatch("constraint " + std::to_string(f) + " has " +
                              std::to_string(c.table.size()) + " entries, expected " +
                              std::to_string(expected));
    for (auto entry : c.table)
      if (entry > 1) throw TableSizeMismatch("constraint " + std::to_string(f) + " has a non-0/1 entry");

    std::vector<std::size_t> strides(c.scope.size());
    std::size_t stride = 1;
    for (std::size_t k = c.scope.size(); k-- > 0;) {
      strides[k] = stride;
      stride *= domains[c.scope[k]].size();
    }
    for (std::size_t k = 0; k < c.scope.size(); ++k) {
      g.edges_.push_back(Edge{static_cast<FactorId>(f), static_cast<std::uint32_t>(k), c.scope[k]});
      g.strides_.push_back(strides[k]);
    }
    g.factor_edge_offset_.push_back(g.edges_.size());
  }

  std::vector<std::size_t> degree(n, 0);
  for (const auto& e : g.edges_) ++degree[e.var];
  g.var_edge_offset_.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) g.var_edge_offset_[i + 1] = g.var_edge_offset_[i] + degree[i];
  g.var_edge_ids_.resize(g.edges_.size());
  std::vector<std::size_t> cursor(g.var_edge_offset_.begin(), g.var_edge_offset_.end() - 1);
  for (std::size_t e = 0; e < g.edges_.size(); ++e)
    g.var_edge_ids_[cursor[g.edges_[e].var]++] = static_cast<EdgeId>(e);

  g.domains_ = std::move(domains);
  g.constraints_ = std::move(constraints);
  return g;
}

std::vector<FactorId> FactorGraph::var_adjacency(VarId i) const {
  std::vector<FactorId> out;
  for (EdgeId e : var_edges(i)) out.push_back(edges_[e].factor);
  return out;
}

EdgeId FactorGraph::find_edge(FactorId f, VarId i) const {
  const auto& scope = constraints_[f].scope;
  for (std::size_t k = 0; k < scope.size(); ++k)
    if (scope[k] == i) return edge_id(f, k);
  throw InvalidScope("variable " + std::to_string(i) + " is not in the scope of constraint " +
                     std::to_string(f));
}

bool Assignment::complete() const {
  return std::none_of(values.begin(), values.end(), [](Value v) { return v == kUnset; });
}

std::size_t table_index(const FactorGraph& g, FactorId f, const Assignment& a) {
  const auto& scope = g.constraint(f).scope;
  auto strides = g.strides(f);
  std::size_t idx = 0;
  for (std::size_t k = 0; k < scope.size(); ++k) idx += a[scope[k]] * strides[k];
  return idx;
}

bool evaluate(const FactorGraph& g, const Assignment& a) {
  if (a.size() != g.num_variables()) throw Error("assignment size does not match the graph");
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a.is_set(i)) throw UnsetVariable(static_cast<VarId>(i));
    if (a[i] >= g.domain(i).size()) throw Error("value out of range for variable " + std::to_string(i));
  }
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!g.domain(i).allows(a[i])) return false;
  for (std::size_t f = 0; f < g.num_factors(); ++f)
    if (!g.constraint(f).table[table_index(g, static_cast<FactorId>(f), a)]) return false;
  return true;
}

namespace {

// Removes every scope variable whose domain is a singleton, keeping the table
// entries consistent with the pinned values.
void slice_constraint(const FactorGraph& g, const std::vector<Domain>& domains, FactorId f,
                      std::vector<TabularConstraint>& out) {
  const auto& c = g.constraint(f);
  auto strides = g.strides(f);
  std::size_t base = 0;
  std::vector<std::size_t> keep;
  for (std::size_t k = 0; k < c.scope.size(); ++k) {
    const Domain& d = domains[c.scope[k]];
    if (d.is_singleton())
      base += d.first_allowed() * strides[k];
    else
      keep.push_back(k);
  }

  if (keep.size() == c.scope.size()) {
    out.push_back(c);
    return;
  }

  if (keep.empty()) {
    if (c.table[base]) return;
    VarId v = c.scope.front();
    out.push_back(TabularConstraint{{v}, std::vector<std::uint8_t>(g.domain(v).size(), 0)});
    return;
  }

  TabularConstraint sliced;
  std::size_t size = 1;
  for (std::size_t k : keep) {
    sliced.scope.push_back(c.scope[k]);
    size *= g.domain(c.scope[k]).size();
  }
  sliced.table.resize(size);
  std::vector<std::size_t> counter(keep.size(), 0);
  for (std::size_t idx = 0; idx < size; ++idx) {
    std::size_t src = base;
    for (std::size_t j = 0; j < keep.size(); ++j) src += counter[j] * strides[keep[j]];
    sliced.table[idx] = c.table[src];
    for (std::size_t j = keep.size(); j-- > 0;) {
      if (++counter[j] < g.domain(sliced.scope[j]).size()) break;
      counter[j] = 0;
    }
  }
  if (std::all_of(sliced.table.begin(), sliced.table.end(), [](auto e) { return e == 1; })) return;
  out.push_back(std::move(sliced));
}

FactorGraph rebuild_with_domains(const FactorGraph& g, std::vector<Domain> domains,
                                 const std::vector<std::uint8_t>& touched) {
  std::vector<TabularConstraint> constraints;
  constraints.reserve(g.num_factors());
  for (std::size_t f = 0; f < g.num_factors(); ++f) {
    const auto& scope = g.constraint(f).scope;
    bool hit = std::any_of(scope.begin(), scope.end(), [&](VarId v) { return touched[v] != 0; });
    if (hit)
      slice_constraint(g, domains, static_cast<FactorId>(f), constraints);
    else
      constraints.push_back(g.constraint(f));
  }
  BuildLimits unlimited{std::numeric_limits<std::size_t>::max()};
  return FactorGraph::build(std::move(domains), std::move(constraints), unlimited);
}

}  // namespace

FactorGraph condition(const FactorGraph& g, std::span<const Fix> fixes) {
  if (fixes.empty()) return g;
  std::vector<Domain> domains(g.domains().begin(), g.domains().end());
  std::vector<std::uint8_t> touched(g.num_variables(), 0);
  std::vector<VarId> conflicts;
  for (const Fix& fx : fixes) {
    if (fx.var >= g.num_variables()) throw InvalidScope("fix references unknown variable");
    if (fx.value >= g.domain(fx.var).size()) throw Error("fix value outside domain");
    if (touched[fx.var]) throw InvalidScope("variable fixed twice in one conditioning");
    touched[fx.var] = 1;
    const Value v = fx.value;
    if (!g.domain(fx.var).allows(v)) conflicts.push_back(fx.var);
    domains[fx.var] = Domain::restricted(g.domain(fx.var).size(), std::span<const Value>(&v, 1));
  }
  FactorGraph out = rebuild_with_domains(g, std::move(domains), touched);
  if (conflicts.empty()) return out;
  // Pinning outside the current domain is legal; it shows up as an all-zero unary table.
  std::vector<Domain> ds(out.domains().begin(), out.domains().end());
  std::vector<TabularConstraint> cs(out.constraints().begin(), out.constraints().end());
  for (VarId v : conflicts) cs.push_back(TabularConstraint{{v}, std::vector<std::uint8_t>(ds[v].size(), 0)});
  BuildLimits unlimited{std::numeric_limits<std::size_t>::max()};
  return FactorGraph::build(std::move(ds), std::move(cs), unlimited);
}

FactorGraph restrict_domain(const FactorGraph& g, VarId var, std::span<const Value> allowed) {
  if (var >= g.num_variables()) throw InvalidScope("restriction references unknown variable");
  Domain narrowed = g.domain(var).intersect(allowed);
  if (narrowed.is_singleton()) {
    Fix fx{var, narrowed.first_allowed()};
    return condition(g, std::span<const Fix>(&fx, 1));
  }
  std::vector<Domain> domains(g.domains().begin(), g.domains().end());
  domains[var] = std::move(narrowed);
  std::vector<TabularConstraint> constraints(g.constraints().begin(), g.constraints().end());
  BuildLimits unlimited{std::numeric_limits<std::size_t>::max()};
  return FactorGraph::build(std::move(domains), std::move(constraints), unlimited);
}

Assignment fixed_values(const FactorGraph& g) {
  Assignment a(g.num_variables());
  for (std::size_t i = 0; i < g.num_variables(); ++i)
    if (g.domain(i).is_singleton()) a[i] = g.domain(i).first_allowed();
  return a;
}

namespace {

// Depth-first enumeration in lexicographic order (variable 0 most significant).
// A constraint is checked once its highest-index scope variable is assigned.
template <typename Visit>
void for_each_solution(const FactorGraph& g, Visit&& visit) {
  const std::size_t n = g.num_variables();
  std::vector<std::vector<FactorId>> closing(n);
  for (std::size_t f = 0; f < g.num_factors(); ++f) {
    const auto& scope = g.constraint(f).scope;
    closing[*std::max_element(scope.begin(), scope.end())].push_back(static_cast<FactorId>(f));
  }
  if (n == 0) {
    Assignment empty;
    visit(empty);
    return;
  }
  std::vector<std::vector<Value>> choices(n);
  for (std::size_t i = 0; i < n; ++i) {
    choices[i] = g.domain(i).allowed_values();
    if (choices[i].empty()) return;
  }
  Assignment a(n);
  std::vector<std::size_t> pos(n, 0);
  std::size_t depth = 0;
  while (true) {
    if (pos[depth] == choices[depth].size()) {
      pos[depth] = 0;
      a[depth] = kUnset;
      if (depth == 0) return;
      --depth;
      ++pos[depth];
      continue;
    }
    a[depth] = choices[depth][pos[depth]];
    bool ok = true;
    for (FactorId f : closing[depth])
      if (!g.constraint(f).table[table_index(g, f, a)]) {
        ok = false;
        break;
      }
    if (!ok) {
      ++pos[depth];
      continue;
    }
    if (depth + 1 == n) {
      if (!visit(a)) return;
      ++pos[depth];
    } else {
      ++depth;
    }
  }
}

}  // namespace

std::vector<Assignment> enumerate_solutions(const FactorGraph& g, std::size_t cap) {
  std::vector<Assignment> out;
  if (cap == 0) return out;
  for_each_solution(g, [&](const Assignment& a) {
    out.push_back(a);
    return out.size() < cap;
  });
  return out;
}

std::size_t count_solutions(const FactorGraph& g) {
  std::size_t count = 0;
  for_each_solution(g, [&](const Assignment&) {
    ++count;
    return true;
  });
  return count;
}

MarginalTable exact_marginals(const FactorGraph& g) {
  MarginalTable m;
  m.rows.resize(g.num_variables());
  for (std::size_t i = 0; i < g.num_variables(); ++i) m.rows[i].assign(g.domain(i).size(), 0.0);
  std::size_t count = 0;
  for_each_solution(g, [&](const Assignment& a) {
    for (std::size_t i = 0; i < a.size(); ++i) m.rows[i][a[i]] += 1.0;
    ++count;
    return true;
  });
  if (count == 0) throw NoSolutions();
  for (auto& row : m.rows)
    for (double& p : row) p /= static_cast<double>(count);
  return m;
}

}  // namespace fgcsp
