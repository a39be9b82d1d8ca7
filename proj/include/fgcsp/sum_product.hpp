#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fgcsp/factor_graph.hpp"
#include "fgcsp/rng.hpp"

namespace fgcsp {

// A normalized nonnegative vector over one variable's domain. When every
// entry was zero before normalization the message is flagged contradictory
// and left all-zero.
struct Message {
  std::vector<double> entries;
  bool contradictory = false;
};

// Normalizes in place; returns false (and zeroes the vector) when the sum is
// below 1e-300.
bool normalize(std::span<double> v);

// One vector per directed edge: variable-to-factor and factor-to-variable.
class MessageSet {
 public:
  MessageSet() = default;
  // Uniform over each variable's allowed values.
  explicit MessageSet(const FactorGraph& g);
  static MessageSet random(const FactorGraph& g, Rng& rng);

  std::size_t num_edges() const { return offset_.empty() ? 0 : offset_.size() - 1; }

  std::span<double> to_factor(EdgeId e) { return {to_factor_.data() + offset_[e], width(e)}; }
  std::span<const double> to_factor(EdgeId e) const { return {to_factor_.data() + offset_[e], width(e)}; }
  std::span<double> to_var(EdgeId e) { return {to_var_.data() + offset_[e], width(e)}; }
  std::span<const double> to_var(EdgeId e) const { return {to_var_.data() + offset_[e], width(e)}; }

  friend bool operator==(const MessageSet&, const MessageSet&) = default;

 private:
  std::size_t width(EdgeId e) const { return offset_[e + 1] - offset_[e]; }

  std::vector<std::size_t> offset_;
  std::vector<double> to_factor_;
  std::vector<double> to_var_;
};

enum class InitKind { Uniform, Random };
enum class UpdateOrder { Fixed, Shuffled };

struct BPParams {
  double epsilon = 1e-3;
  std::size_t max_iters = 1000;
  InitKind init = InitKind::Uniform;
  UpdateOrder order = UpdateOrder::Fixed;
  std::uint64_t seed = 0;
};

enum class BPStatusKind { Converged, MaxIters, Contradiction };

struct BPStatus {
  BPStatusKind kind = BPStatusKind::MaxIters;
  std::size_t iterations = 0;
  VarId variable = kNoVar;  // set for Contradiction
};

struct BPResult {
  MessageSet messages;
  MarginalTable marginals;
  BPStatus status;
  std::uint64_t message_updates = 0;
};

// Sum over the factor's table of C_I times the product of the other scope
// variables' incoming messages.
Message factor_to_var(const FactorGraph& g, const MessageSet& m, FactorId f, VarId i);

// Product of μ_{J→i} over J ∈ ∂i \ I (and the domain mask), computed directly.
Message var_to_factor(const FactorGraph& g, const MessageSet& m, VarId i, FactorId f);

// Same message via belief / μ_{I→i}; falls back to the direct product when any
// divisor entry is below 1e-12.
Message var_to_factor_from_belief(const FactorGraph& g, const MessageSet& m, VarId i, FactorId f);

// Normalized product of all incoming factor-to-variable messages. Uses the
// stored μ_{I→i}; does not recompute them.
Message marginal(const FactorGraph& g, const MessageSet& m, VarId i);

// Reusable buffers for the per-variable update.
class BPWorkspace {
 public:
  // Recomputes every μ_{I→i}, the belief of i (written to `belief`), and every
  // μ_{i→I}. Returns false when the belief is all-zero, in which case the
  // outgoing messages are left untouched. `updates` counts message
  // computations.
  bool update_variable(const FactorGraph& g, MessageSet& m, VarId i, std::span<double> belief,
                       std::uint64_t& updates);

 private:
  std::vector<double> product_;
  std::vector<double> prefix_;
  std::vector<std::size_t> counter_;
};

// Fills row sizes to match the graph, each uniform over the allowed values.
MarginalTable uniform_marginals(const FactorGraph& g);

double max_abs_change(const MarginalTable& a, const MarginalTable& b);

// Fisher-Yates with Rng::below, so the permutation is seed-stable.
void shuffle_order(std::vector<VarId>& order, Rng& rng);

// One sequential sweep in the given order. Marginal rows are overwritten as
// variables are visited. Returns the first variable whose belief is all-zero,
// or kNoVar.
VarId bp_sweep(const FactorGraph& g, MessageSet& m, MarginalTable& marginals,
               std::span<const VarId> order, BPWorkspace& ws, std::uint64_t& updates);

// Sweeps variables (ascending, or shuffled per sweep) until the largest
// marginal change drops below epsilon, a contradiction appears, or max_iters
// sweeps have run.
BPResult run_bp(const FactorGraph& g, const BPParams& params);

}  // namespace fgcsp
