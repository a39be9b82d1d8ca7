#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fgcsp/decimation.hpp"
#include "fgcsp/factor_graph.hpp"
#include "fgcsp/outcome.hpp"
#include "fgcsp/perturbed_bp.hpp"
#include "fgcsp/rng.hpp"
#include "fgcsp/sum_product.hpp"

namespace fgcsp {

// Subset of a domain as a bitmask, bit v <-> value v.
using SubsetMask = std::uint32_t;

class DomainCapExceeded : public Error {
 public:
  using Error::Error;
};

class FactorBudgetExceeded : public Error {
 public:
  using Error::Error;
};

SubsetMask allowed_mask(const Domain& d);
std::vector<Value> mask_values(SubsetMask y);

// ---- max-product warnings -------------------------------------------------

// 0/1 vector over a variable's domain; all-zero means contradiction.
struct WarningMessage {
  std::vector<std::uint8_t> allowed;

  bool contradictory() const;
  friend bool operator==(const WarningMessage&, const WarningMessage&) = default;
};

class WarningSet {
 public:
  WarningSet() = default;
  // Every message is the variable's allowed mask.
  explicit WarningSet(const FactorGraph& g);

  std::span<std::uint8_t> to_factor(EdgeId e) { return {to_factor_.data() + offset_[e], width(e)}; }
  std::span<const std::uint8_t> to_factor(EdgeId e) const { return {to_factor_.data() + offset_[e], width(e)}; }
  std::span<std::uint8_t> to_var(EdgeId e) { return {to_var_.data() + offset_[e], width(e)}; }
  std::span<const std::uint8_t> to_var(EdgeId e) const { return {to_var_.data() + offset_[e], width(e)}; }

  friend bool operator==(const WarningSet&, const WarningSet&) = default;

 private:
  std::size_t width(EdgeId e) const { return offset_[e + 1] - offset_[e]; }

  std::vector<std::size_t> offset_;
  std::vector<std::uint8_t> to_factor_;
  std::vector<std::uint8_t> to_var_;
};

// allowed[x_i] = max over x_{∂I\i} of C_I(x_I)·∏ ν_{j→I}(x_j).
WarningMessage maxprod_factor_to_var(const FactorGraph& g, const WarningSet& w, FactorId f, VarId i);
// AND of the other incoming warnings (and the domain mask).
WarningMessage maxprod_var_to_factor(const FactorGraph& g, const WarningSet& w, VarId i, FactorId f);
WarningMessage maxprod_marginal(const FactorGraph& g, const WarningSet& w, VarId i);

// Sequential sweep in ascending order, same schedule as BP. Returns the first
// variable whose marginal is all-zero, or kNoVar.
VarId maxprod_sweep(const FactorGraph& g, WarningSet& w);

// ---- SP(m) surveys --------------------------------------------------------

// Per directed edge a distribution over nonempty subsets, indexed by mask
// (entry 0, the empty set, is always 0).
class SurveySet {
 public:
  SurveySet() = default;
  // Uniform over the nonempty subsets of each variable's allowed set.
  explicit SurveySet(const FactorGraph& g);
  static SurveySet random(const FactorGraph& g, Rng& rng);

  std::size_t num_edges() const { return offset_.empty() ? 0 : offset_.size() - 1; }

  std::span<double> to_factor(EdgeId e) { return {to_factor_.data() + offset_[e], width(e)}; }
  std::span<const double> to_factor(EdgeId e) const { return {to_factor_.data() + offset_[e], width(e)}; }
  std::span<double> to_var(EdgeId e) { return {to_var_.data() + offset_[e], width(e)}; }
  std::span<const double> to_var(EdgeId e) const { return {to_var_.data() + offset_[e], width(e)}; }

  friend bool operator==(const SurveySet&, const SurveySet&) = default;

 private:
  std::size_t width(EdgeId e) const { return offset_[e + 1] - offset_[e]; }

  std::vector<std::size_t> offset_;
  std::vector<double> to_factor_;
  std::vector<double> to_var_;
};

struct SurveyMessage {
  std::vector<double> weights;  // indexed by mask
  bool contradictory = false;
};

struct ClusterMarginal {
  std::vector<double> over_subsets;  // indexed by mask, entry 0 unused
  std::vector<double> over_values;
  bool contradictory = false;
};

struct SPParams {
  double m = 0.0;
  double epsilon = 1e-3;
  std::size_t max_iters = 1000;
  double paramagnetic_threshold = 0.01;
  std::size_t domain_cap = 5;
  // Largest number of incoming warning combinations a factor update may
  // enumerate.
  std::size_t factor_budget = std::size_t{1} << 20;
  InitKind init = InitKind::Uniform;
  std::uint64_t seed = 0;
};

// Throws DomainCapExceeded / FactorBudgetExceeded when the graph is outside
// what SP handles.
void check_sp_limits(const FactorGraph& g, const SPParams& params);

// Reusable state for SP updates on one graph: per-edge tables of the factor
// output for every combination of incoming warnings, built on first use.
class SPWorkspace {
 public:
  SPWorkspace(const FactorGraph& g, const SPParams& params);

  // Factor side: weight(y) ∝ |y|^m Σ_{combos with output y} ∏ μ̃_{j→I}(y_j).
  void factor_to_var(const SurveySet& s, EdgeId e, std::span<double> out);

  // Recomputes all incoming surveys of i, its cluster marginal and all
  // outgoing surveys. Returns false (outgoing untouched) on contradiction.
  bool update_variable(SurveySet& s, VarId i, ClusterMarginal& marginal, std::uint64_t& updates);

  // Marginal and outgoing surveys from the stored incoming ones.
  ClusterMarginal cluster_marginal(const SurveySet& s, VarId i);
  void var_to_factor(const SurveySet& s, VarId i, EdgeId e, std::span<double> out);

  const FactorGraph& graph() const { return g_; }
  double m() const { return m_; }

 private:
  const std::vector<SubsetMask>& outputs(EdgeId e);
  // Running AND-distributions for variable i: prefix_[k] covers edges < k,
  // suffix_[k] covers edges >= k.
  void running_ands(const SurveySet& s, VarId i);
  void finish(std::span<double> dist, std::span<double> out) const;

  const FactorGraph& g_;
  double m_;
  std::size_t budget_;
  std::vector<std::vector<SubsetMask>> memo_;
  std::vector<std::uint8_t> memo_ready_;
  std::vector<double> prefix_, suffix_, scratch_;
  std::vector<double> size_weight_;  // |y|^m, by popcount
};

SurveyMessage sp_factor_to_var(const FactorGraph& g, const SurveySet& s, FactorId f, VarId i,
                               const SPParams& params);
SurveyMessage sp_var_to_factor(const FactorGraph& g, const SurveySet& s, VarId i, FactorId f,
                               const SPParams& params);
ClusterMarginal sp_cluster_marginal(const FactorGraph& g, const SurveySet& s, VarId i,
                                    const SPParams& params);

// Σ_{y∋x} weights[y], normalized; the BP message a survey implies.
std::vector<double> project_to_values(std::span<const double> weights, std::size_t domain_size);

struct SPResult {
  SurveySet surveys;
  std::vector<ClusterMarginal> marginals;
  BPStatus status;
  std::uint64_t message_updates = 0;
};

// Sequential sweeps until the subset marginals move less than epsilon.
SPResult run_sp(const FactorGraph& g, const SPParams& params);

// max over variables with more than one allowed value of μ̂(x_i) - 1/|X_i|,
// using the value marginals.
double max_value_bias(const FactorGraph& g, const std::vector<ClusterMarginal>& marginals);

enum class SPDecVariant { S, C };

struct SPDecParams {
  SPParams sp;
  double rho = 0.01;
  // BP-dec run on the reduced instance once SP looks paramagnetic.
  DecimationParams local_search;
  bool strict_convergence = false;
  std::size_t max_attempts = 1;
  double first_round_growth = 1.0;
  std::uint64_t seed = 0;
};

struct SPDecRound {
  BPStatus sp_status;
  double max_bias = 0.0;
  // Variable and the subset it was restricted to (a singleton for S).
  std::vector<std::pair<VarId, SubsetMask>> restricted;
};

struct SPDecTrace {
  std::vector<SPDecRound> rounds;
  bool handed_off = false;
  // Variables with a singleton domain when BP-dec took over.
  std::size_t fixed_before_handoff = 0;
  std::size_t local_search_iterations = 0;
};

struct SPDecResult {
  SolveOutcome outcome;
  SPDecTrace trace;
};

SPDecResult solve_sp_dec(const FactorGraph& g, SPDecVariant variant, const SPDecParams& params);

// One Perturbed SP sweep: outgoing surveys become
// (1 - delta_weight)·SP + delta_weight·[mass 1 on {x̂_i}], x̂_i drawn from the
// value marginal.
SweepReport perturbed_sp_sweep(SPWorkspace& ws, SurveySet& s, double delta_weight, Rng& rng,
                               std::vector<ClusterMarginal>& marginals, std::uint64_t& updates);

SolveOutcome solve_perturbed_sp(const FactorGraph& g, std::size_t T, Rng& rng, const SPParams& params = {});

SolveOutcome solve_perturbed_sp_with_retries(const FactorGraph& g, const PerturbedBPParams& schedule,
                                             const SPParams& params, const Rng& rng);

}  // namespace fgcsp
