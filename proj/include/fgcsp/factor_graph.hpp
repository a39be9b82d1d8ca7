#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fgcsp {

using VarId = std::uint32_t;
using FactorId = std::uint32_t;
using EdgeId = std::uint32_t;
using Value = std::uint32_t;

inline constexpr Value kUnset = std::numeric_limits<Value>::max();
inline constexpr VarId kNoVar = std::numeric_limits<VarId>::max();

// Boolean variables store True at index 0 and False at index 1.
inline constexpr Value kTrue = 0;
inline constexpr Value kFalse = 1;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidScope : public Error {
 public:
  using Error::Error;
};

class TableSizeMismatch : public Error {
 public:
  using Error::Error;
};

class UnsetVariable : public Error {
 public:
  explicit UnsetVariable(VarId var);
  VarId variable() const { return var_; }

 private:
  VarId var_;
};

class NoSolutions : public Error {
 public:
  NoSolutions() : Error("instance has no solutions") {}
};

// Finite domain {0, ..., size-1} with an allowed-value mask. Conditioning
// narrows the mask; value indices never change.
class Domain {
 public:
  explicit Domain(std::size_t size);

  static Domain restricted(std::size_t size, std::span<const Value> allowed);

  std::size_t size() const { return allowed_.size(); }
  bool allows(Value v) const { return v < allowed_.size() && allowed_[v] != 0; }
  std::size_t allowed_count() const { return count_; }
  bool is_restricted() const { return count_ != allowed_.size(); }
  bool is_singleton() const { return count_ == 1; }
  // Lowest allowed value, or kUnset when nothing is allowed.
  Value first_allowed() const;
  std::vector<Value> allowed_values() const;

  Domain intersect(std::span<const Value> values) const;

  friend bool operator==(const Domain&, const Domain&) = default;

 private:
  std::vector<std::uint8_t> allowed_;
  std::size_t count_ = 0;
};

// 0/1 table over the scope's joint domain, row-major in scope order (the last
// scope variable varies fastest).
struct TabularConstraint {
  std::vector<VarId> scope;
  std::vector<std::uint8_t> table;

  friend bool operator==(const TabularConstraint&, const TabularConstraint&) = default;
};

struct Edge {
  FactorId factor;
  std::uint32_t slot;  // position of the variable within the factor's scope
  VarId var;
};

struct BuildLimits {
  std::size_t max_table_entries = 1'000'000;
};

class FactorGraph {
 public:
  FactorGraph() = default;

  // Validates scopes and table sizes; computes adjacency and edge indexing.
  static FactorGraph build(std::vector<Domain> domains,
                           std::vector<TabularConstraint> constraints,
                           const BuildLimits& limits = {});

  std::size_t num_variables() const { return domains_.size(); }
  std::size_t num_factors() const { return constraints_.size(); }
  std::size_t num_edges() const { return edges_.size(); }

  const Domain& domain(VarId i) const { return domains_[i]; }
  std::span<const Domain> domains() const { return domains_; }
  const TabularConstraint& constraint(FactorId f) const { return constraints_[f]; }
  std::span<const TabularConstraint> constraints() const { return constraints_; }

  // Edges incident to variable i, one per constraint in ∂i (ascending factor id).
  std::span<const EdgeId> var_edges(VarId i) const {
    return {var_edge_ids_.data() + var_edge_offset_[i],
            var_edge_offset_[i + 1] - var_edge_offset_[i]};
  }
  std::vector<FactorId> var_adjacency(VarId i) const;

  EdgeId edge_id(FactorId f, std::size_t slot) const {
    return static_cast<EdgeId>(factor_edge_offset_[f] + slot);
  }
  const Edge& edge(EdgeId e) const { return edges_[e]; }
  EdgeId find_edge(FactorId f, VarId i) const;

  std::span<const std::size_t> strides(FactorId f) const {
    return {strides_.data() + factor_edge_offset_[f], constraints_[f].scope.size()};
  }

  friend bool operator==(const FactorGraph& a, const FactorGraph& b) {
    return a.domains_ == b.domains_ && a.constraints_ == b.constraints_;
  }

 private:
  std::vector<Domain> domains_;
  std::vector<TabularConstraint> constraints_;
  std::vector<Edge> edges_;
  std::vector<std::size_t> factor_edge_offset_;
  std::vector<std::size_t> strides_;
  std::vector<std::size_t> var_edge_offset_;
  std::vector<EdgeId> var_edge_ids_;
};

struct Assignment {
  std::vector<Value> values;

  Assignment() = default;
  explicit Assignment(std::size_t n) : values(n, kUnset) {}
  explicit Assignment(std::vector<Value> v) : values(std::move(v)) {}

  std::size_t size() const { return values.size(); }
  Value operator[](std::size_t i) const { return values[i]; }
  Value& operator[](std::size_t i) { return values[i]; }
  bool is_set(std::size_t i) const { return values[i] != kUnset; }
  bool complete() const;

  friend bool operator==(const Assignment&, const Assignment&) = default;
  friend auto operator<=>(const Assignment&, const Assignment&) = default;
};

// Per-variable normalized vectors over the full domain.
struct MarginalTable {
  std::vector<std::vector<double>> rows;

  std::size_t size() const { return rows.size(); }
  const std::vector<double>& operator[](std::size_t i) const { return rows[i]; }
  std::vector<double>& operator[](std::size_t i) { return rows[i]; }
};

struct Fix {
  VarId var;
  Value value;
  friend bool operator==(const Fix&, const Fix&) = default;
};

// Index of the table entry selected by the assignment (all scope vars set).
std::size_t table_index(const FactorGraph& g, FactorId f, const Assignment& a);

bool evaluate(const FactorGraph& g, const Assignment& a);

// Pins each variable to a single value and slices it out of every scope.
FactorGraph condition(const FactorGraph& g, std::span<const Fix> fixes);

// Narrows a variable's domain mask. A singleton restriction conditions.
FactorGraph restrict_domain(const FactorGraph& g, VarId var, std::span<const Value> allowed);

// Assignment where every singleton-domain variable holds its value.
Assignment fixed_values(const FactorGraph& g);

std::vector<Assignment> enumerate_solutions(const FactorGraph& g,
                                            std::size_t cap = std::numeric_limits<std::size_t>::max());
std::size_t count_solutions(const FactorGraph& g);
MarginalTable exact_marginals(const FactorGraph& g);

}  // namespace fgcsp
