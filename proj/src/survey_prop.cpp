#include "fgcsp/survey_prop.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

namespace fgcsp {

SubsetMask allowed_mask(const Domain& d) {
  SubsetMask y = 0;
  for (std::size_t v = 0; v < d.size() && v < 32; ++v)
    if (d.allows(static_cast<Value>(v))) y |= SubsetMask{1} << v;
  return y;
}

std::vector<Value> mask_values(SubsetMask y) {
  std::vector<Value> out;
  for (Value v = 0; y != 0; ++v, y >>= 1)
    if (y & 1) out.push_back(v);
  return out;
}

// ---- max-product ----------------------------------------------------------

bool WarningMessage::contradictory() const {
  return std::none_of(allowed.begin(), allowed.end(), [](std::uint8_t a) { return a != 0; });
}

WarningSet::WarningSet(const FactorGraph& g) {
  offset_.assign(g.num_edges() + 1, 0);
  for (std::size_t e = 0; e < g.num_edges(); ++e)
    offset_[e + 1] = offset_[e] + g.domain(g.edge(static_cast<EdgeId>(e)).var).size();
  to_factor_.assign(offset_.back(), 0);
  to_var_.assign(offset_.back(), 0);
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    const Domain& d = g.domain(g.edge(static_cast<EdgeId>(e)).var);
    for (std::size_t x = 0; x < d.size(); ++x) {
      const std::uint8_t a = d.allows(static_cast<Value>(x)) ? 1 : 0;
      to_factor(static_cast<EdgeId>(e))[x] = a;
      to_var(static_cast<EdgeId>(e))[x] = a;
    }
  }
}

namespace {

void maxprod_factor_into(const FactorGraph& g, const WarningSet& w, EdgeId target,
                         std::span<std::uint8_t> out) {
  const Edge& ed = g.edge(target);
  const auto& c = g.constraint(ed.factor);
  const std::size_t arity = c.scope.size();
  const EdgeId base = g.edge_id(ed.factor, 0);
  std::fill(out.begin(), out.end(), 0);
  std::vector<std::size_t> counter(arity, 0);
  for (std::size_t idx = 0; idx < c.table.size(); ++idx) {
    if (c.table[idx] && !out[counter[ed.slot]]) {
      bool ok = true;
      for (std::size_t j = 0; j < arity && ok; ++j)
        if (j != ed.slot) ok = w.to_factor(base + static_cast<EdgeId>(j))[counter[j]] != 0;
      if (ok) out[counter[ed.slot]] = 1;
    }
    for (std::size_t j = arity; j-- > 0;) {
      if (++counter[j] < g.domain(c.scope[j]).size()) break;
      counter[j] = 0;
    }
  }
}

WarningMessage maxprod_product(const FactorGraph& g, const WarningSet& w, VarId i, EdgeId skip) {
  const Domain& d = g.domain(i);
  WarningMessage out;
  out.allowed.resize(d.size());
  for (std::size_t x = 0; x < d.size(); ++x) out.allowed[x] = d.allows(static_cast<Value>(x)) ? 1 : 0;
  for (EdgeId e : g.var_edges(i)) {
    if (e == skip) continue;
    auto in = w.to_var(e);
    for (std::size_t x = 0; x < d.size(); ++x) out.allowed[x] &= in[x];
  }
  return out;
}

}  // namespace

WarningMessage maxprod_factor_to_var(const FactorGraph& g, const WarningSet& w, FactorId f, VarId i) {
  WarningMessage out;
  out.allowed.resize(g.domain(i).size());
  maxprod_factor_into(g, w, g.find_edge(f, i), out.allowed);
  return out;
}

WarningMessage maxprod_var_to_factor(const FactorGraph& g, const WarningSet& w, VarId i, FactorId f) {
  return maxprod_product(g, w, i, g.find_edge(f, i));
}

WarningMessage maxprod_marginal(const FactorGraph& g, const WarningSet& w, VarId i) {
  return maxprod_product(g, w, i, kNoVar);
}

VarId maxprod_sweep(const FactorGraph& g, WarningSet& w) {
  for (std::size_t v = 0; v < g.num_variables(); ++v) {
    const auto i = static_cast<VarId>(v);
    for (EdgeId e : g.var_edges(i)) maxprod_factor_into(g, w, e, w.to_var(e));
    if (maxprod_marginal(g, w, i).contradictory()) return i;
    for (EdgeId e : g.var_edges(i)) {
      auto msg = maxprod_product(g, w, i, e);
      std::copy(msg.allowed.begin(), msg.allowed.end(), w.to_factor(e).begin());
    }
  }
  return kNoVar;
}

// ---- surveys --------------------------------------------------------------

namespace {

std::size_t subset_width(const Domain& d) { return std::size_t{1} << d.size(); }

void fill_uniform_subsets(const Domain& d, std::span<double> out) {
  const SubsetMask full = allowed_mask(d);
  std::size_t count = 0;
  for (std::size_t y = 1; y < out.size(); ++y)
    if ((y & ~full) == 0) ++count;
  for (std::size_t y = 0; y < out.size(); ++y)
    out[y] = (y != 0 && (y & ~full) == 0) ? 1.0 / static_cast<double>(count) : 0.0;
}

}  // namespace

SurveySet::SurveySet(const FactorGraph& g) {
  offset_.assign(g.num_edges() + 1, 0);
  for (std::size_t e = 0; e < g.num_edges(); ++e)
    offset_[e + 1] = offset_[e] + subset_width(g.domain(g.edge(static_cast<EdgeId>(e)).var));
  to_factor_.assign(offset_.back(), 0.0);
  to_var_.assign(offset_.back(), 0.0);
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    const Domain& d = g.domain(g.edge(static_cast<EdgeId>(e)).var);
    fill_uniform_subsets(d, to_factor(static_cast<EdgeId>(e)));
    fill_uniform_subsets(d, to_var(static_cast<EdgeId>(e)));
  }
}

SurveySet SurveySet::random(const FactorGraph& g, Rng& rng) {
  SurveySet s(g);
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    for (auto buf : {s.to_factor(static_cast<EdgeId>(e)), s.to_var(static_cast<EdgeId>(e))}) {
      for (double& p : buf)
        if (p > 0.0) p = rng.uniform() + 1e-3;
      normalize(buf);
    }
  }
  return s;
}

void check_sp_limits(const FactorGraph& g, const SPParams& params) {
  if (!(params.m >= 0.0 && params.m <= 1.0)) throw Error("Parisi parameter m must lie in [0, 1]");
  const std::size_t cap = std::min<std::size_t>(params.domain_cap, 16);
  for (std::size_t i = 0; i < g.num_variables(); ++i)
    if (g.domain(i).size() > cap)
      throw DomainCapExceeded("variable " + std::to_string(i) + " has " + std::to_string(g.domain(i).size()) +
                              " values; survey propagation is limited to " + std::to_string(cap));
  for (std::size_t f = 0; f < g.num_factors(); ++f) {
    const auto& scope = g.constraint(f).scope;
    for (std::size_t k = 0; k < scope.size(); ++k) {
      double combos = 1.0;
      for (std::size_t j = 0; j < scope.size(); ++j)
        if (j != k) combos *= static_cast<double>(subset_width(g.domain(scope[j])) - 1);
      if (combos > static_cast<double>(params.factor_budget))
        throw FactorBudgetExceeded("constraint " + std::to_string(f) + " needs " +
                                   std::to_string(static_cast<long double>(combos)) +
                                   " warning combinations per update");
    }
  }
}

SPWorkspace::SPWorkspace(const FactorGraph& g, const SPParams& params)
    : g_(g), m_(params.m), budget_(params.factor_budget) {
  check_sp_limits(g, params);
  memo_.resize(g.num_edges());
  memo_ready_.assign(g.num_edges(), 0);
  for (std::size_t k = 0; k <= 16; ++k) size_weight_.push_back(std::pow(static_cast<double>(k), m_));
}

const std::vector<SubsetMask>& SPWorkspace::outputs(EdgeId e) {
  if (memo_ready_[e]) return memo_[e];
  const Edge& ed = g_.edge(e);
  const auto& c = g_.constraint(ed.factor);
  const std::size_t arity = c.scope.size();
  const SubsetMask target_mask = allowed_mask(g_.domain(ed.var));

  // Combination index: mixed radix over the other slots in scope order, digit
  // (y_j - 1) with base 2^|X_j| - 1.
  std::vector<std::size_t> radix(arity, 0);
  std::size_t combos = 1;
  for (std::size_t j = arity; j-- > 0;) {
    if (j == ed.slot) continue;
    radix[j] = combos;
    combos *= subset_width(g_.domain(c.scope[j])) - 1;
  }
  if (combos > budget_) throw FactorBudgetExceeded("warning combination budget exceeded");

  std::vector<SubsetMask> out(combos, 0);
  std::vector<std::size_t> row(arity, 0);
  std::vector<std::size_t> digit(arity, 0);
  for (std::size_t idx = 0; idx < c.table.size(); ++idx) {
    const SubsetMask bit = SubsetMask{1} << row[ed.slot];
    if (c.table[idx] && (target_mask & bit)) {
      // Every combination whose y_j all contain row[j] admits this row.
      std::fill(digit.begin(), digit.end(), 0);
      while (true) {
        bool valid = true;
        std::size_t at = 0;
        for (std::size_t j = 0; j < arity; ++j) {
          if (j == ed.slot) continue;
          const SubsetMask y = static_cast<SubsetMask>(digit[j] + 1);
          if (!(y & (SubsetMask{1} << row[j]))) {
            valid = false;
            break;
          }
          at += digit[j] * radix[j];
        }
        if (valid) out[at] |= bit;
        std::size_t j = arity;
        while (j-- > 0) {
          if (j == ed.slot) continue;
          if (++digit[j] < subset_width(g_.domain(c.scope[j])) - 1) break;
          digit[j] = 0;
        }
        if (j == static_cast<std::size_t>(-1)) break;
      }
    }
    for (std::size_t j = arity; j-- > 0;) {
      if (++row[j] < g_.domain(c.scope[j]).size()) break;
      row[j] = 0;
    }
  }
  memo_[e] = std::move(out);
  memo_ready_[e] = 1;
  return memo_[e];
}

void SPWorkspace::finish(std::span<double> dist, std::span<double> out) const {
  out[0] = 0.0;
  for (std::size_t y = 1; y < out.size(); ++y)
    out[y] = dist[y] * size_weight_[static_cast<std::size_t>(std::popcount(static_cast<unsigned>(y)))];
  normalize(out);
}

void SPWorkspace::factor_to_var(const SurveySet& s, EdgeId e, std::span<double> out) {
  const Edge& ed = g_.edge(e);
  const auto& c = g_.constraint(ed.factor);
  const std::size_t arity = c.scope.size();
  const EdgeId base = g_.edge_id(ed.factor, 0);
  const auto& table = outputs(e);

  // Enumerate only combinations with positive incoming weight.
  std::vector<std::size_t> slots;
  std::vector<std::vector<SubsetMask>> support;
  std::vector<std::size_t> radix;
  std::size_t r = 1;
  std::vector<std::size_t> rad(arity, 0);
  for (std::size_t j = arity; j-- > 0;) {
    if (j == ed.slot) continue;
    rad[j] = r;
    r *= subset_width(g_.domain(c.scope[j])) - 1;
  }
  for (std::size_t j = 0; j < arity; ++j) {
    if (j == ed.slot) continue;
    auto in = s.to_factor(base + static_cast<EdgeId>(j));
    std::vector<SubsetMask> nz;
    for (std::size_t y = 1; y < in.size(); ++y)
      if (in[y] > 0.0) nz.push_back(static_cast<SubsetMask>(y));
    slots.push_back(j);
    support.push_back(std::move(nz));
    radix.push_back(rad[j]);
  }

  scratch_.assign(out.size(), 0.0);
  const std::size_t depth = slots.size();
  bool any = true;
  for (const auto& sp : support) any = any && !sp.empty();
  if (any) {
    std::vector<std::size_t> pos(depth, 0);
    std::vector<double> partial(depth + 1, 1.0);
    std::vector<std::size_t> index(depth + 1, 0);
    std::size_t level = 0;
    while (true) {
      if (level == depth) {
        scratch_[table[index[depth]]] += partial[depth];
        // advance
        if (depth == 0) break;
        level = depth - 1;
        ++pos[level];
      }
      if (pos[level] == support[level].size()) {
        if (level == 0) break;
        pos[level] = 0;
        --level;
        ++pos[level];
        continue;
      }
      const SubsetMask y = support[level][pos[level]];
      const double w = s.to_factor(base + static_cast<EdgeId>(slots[level]))[y];
      partial[level + 1] = partial[level] * w;
      index[level + 1] = index[level] + (y - 1) * radix[level];
      ++level;
    }
  }
  finish(scratch_, out);
}

void SPWorkspace::running_ands(const SurveySet& s, VarId i) {
  const std::size_t W = subset_width(g_.domain(i));
  auto edges = g_.var_edges(i);
  const std::size_t d = edges.size();
  prefix_.assign((d + 1) * W, 0.0);
  suffix_.assign((d + 1) * W, 0.0);
  prefix_[allowed_mask(g_.domain(i))] = 1.0;
  suffix_[d * W + (W - 1)] = 1.0;
  for (std::size_t k = 0; k < d; ++k) {
    const double* cur = prefix_.data() + k * W;
    double* next = prefix_.data() + (k + 1) * W;
    auto in = s.to_var(edges[k]);
    for (std::size_t a = 0; a < W; ++a) {
      if (cur[a] == 0.0) continue;
      for (std::size_t y = 1; y < W; ++y)
        if (in[y] != 0.0) next[a & y] += cur[a] * in[y];
    }
  }
  for (std::size_t k = d; k-- > 0;) {
    const double* cur = suffix_.data() + (k + 1) * W;
    double* next = suffix_.data() + k * W;
    auto in = s.to_var(edges[k]);
    for (std::size_t a = 0; a < W; ++a) {
      if (cur[a] == 0.0) continue;
      for (std::size_t y = 1; y < W; ++y)
        if (in[y] != 0.0) next[a & y] += cur[a] * in[y];
    }
  }
}

namespace {

void project_into(std::span<const double> weights, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t y = 1; y < weights.size(); ++y) {
    if (weights[y] == 0.0) continue;
    for (std::size_t x = 0; x < out.size(); ++x)
      if (y & (std::size_t{1} << x)) out[x] += weights[y];
  }
  normalize(out);
}

}  // namespace

std::vector<double> project_to_values(std::span<const double> weights, std::size_t domain_size) {
  std::vector<double> out(domain_size, 0.0);
  project_into(weights, out);
  return out;
}

ClusterMarginal SPWorkspace::cluster_marginal(const SurveySet& s, VarId i) {
  running_ands(s, i);
  const std::size_t W = subset_width(g_.domain(i));
  const std::size_t d = g_.var_edges(i).size();
  ClusterMarginal cm;
  cm.over_subsets.assign(W, 0.0);
  finish(std::span<double>(prefix_.data() + d * W, W), cm.over_subsets);
  cm.over_values.assign(g_.domain(i).size(), 0.0);
  cm.contradictory = cm.over_subsets[0] == 0.0 &&
                     std::all_of(cm.over_subsets.begin(), cm.over_subsets.end(), [](double p) { return p == 0.0; });
  if (!cm.contradictory) project_into(cm.over_subsets, cm.over_values);
  return cm;
}

void SPWorkspace::var_to_factor(const SurveySet& s, VarId i, EdgeId e, std::span<double> out) {
  running_ands(s, i);
  auto edges = g_.var_edges(i);
  const std::size_t k = static_cast<std::size_t>(std::find(edges.begin(), edges.end(), e) - edges.begin());
  if (k == edges.size()) throw InvalidScope("edge is not incident to the variable");
  const std::size_t W = subset_width(g_.domain(i));
  scratch_.assign(W, 0.0);
  const double* p = prefix_.data() + k * W;
  const double* q = suffix_.data() + (k + 1) * W;
  for (std::size_t a = 0; a < W; ++a) {
    if (p[a] == 0.0) continue;
    for (std::size_t b = 0; b < W; ++b)
      if (q[b] != 0.0) scratch_[a & b] += p[a] * q[b];
  }
  finish(scratch_, out);
}

bool SPWorkspace::update_variable(SurveySet& s, VarId i, ClusterMarginal& marginal, std::uint64_t& updates) {
  auto edges = g_.var_edges(i);
  for (EdgeId e : edges) factor_to_var(s, e, s.to_var(e));
  updates += edges.size();

  marginal = cluster_marginal(s, i);  // also fills prefix_/suffix_
  if (marginal.contradictory) return false;

  const std::size_t W = subset_width(g_.domain(i));
  std::vector<double> dist(W);
  for (std::size_t k = 0; k < edges.size(); ++k) {
    std::fill(dist.begin(), dist.end(), 0.0);
    const double* p = prefix_.data() + k * W;
    const double* q = suffix_.data() + (k + 1) * W;
    for (std::size_t a = 0; a < W; ++a) {
      if (p[a] == 0.0) continue;
      for (std::size_t b = 0; b < W; ++b)
        if (q[b] != 0.0) dist[a & b] += p[a] * q[b];
    }
    finish(dist, s.to_factor(edges[k]));
  }
  updates += edges.size();
  return true;
}

SurveyMessage sp_factor_to_var(const FactorGraph& g, const SurveySet& s, FactorId f, VarId i,
                               const SPParams& params) {
  SPWorkspace ws(g, params);
  SurveyMessage out;
  out.weights.assign(subset_width(g.domain(i)), 0.0);
  ws.factor_to_var(s, g.find_edge(f, i), out.weights);
  out.contradictory = std::all_of(out.weights.begin(), out.weights.end(), [](double p) { return p == 0.0; });
  return out;
}

SurveyMessage sp_var_to_factor(const FactorGraph& g, const SurveySet& s, VarId i, FactorId f,
                               const SPParams& params) {
  SPWorkspace ws(g, params);
  SurveyMessage out;
  out.weights.assign(subset_width(g.domain(i)), 0.0);
  ws.var_to_factor(s, i, g.find_edge(f, i), out.weights);
  out.contradictory = std::all_of(out.weights.begin(), out.weights.end(), [](double p) { return p == 0.0; });
  return out;
}

ClusterMarginal sp_cluster_marginal(const FactorGraph& g, const SurveySet& s, VarId i, const SPParams& params) {
  SPWorkspace ws(g, params);
  return ws.cluster_marginal(s, i);
}

namespace {

double max_subset_change(const std::vector<ClusterMarginal>& a, const std::vector<ClusterMarginal>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t y = 0; y < a[i].over_subsets.size(); ++y)
      worst = std::max(worst, std::abs(a[i].over_subsets[y] - b[i].over_subsets[y]));
  return worst;
}

std::vector<ClusterMarginal> initial_marginals(const FactorGraph& g) {
  std::vector<ClusterMarginal> out(g.num_variables());
  for (std::size_t i = 0; i < g.num_variables(); ++i) {
    out[i].over_subsets.assign(subset_width(g.domain(i)), 0.0);
    fill_uniform_subsets(g.domain(i), out[i].over_subsets);
    out[i].over_values.assign(g.domain(i).size(), 0.0);
    project_into(out[i].over_subsets, out[i].over_values);
  }
  return out;
}

}  // namespace

SPResult run_sp(const FactorGraph& g, const SPParams& params) {
  if (!(params.epsilon > 0.0)) throw Error("epsilon must be positive");
  if (params.max_iters < 1) throw Error("max_iters must be at least 1");
  SPWorkspace ws(g, params);
  SPResult r;
  Rng init_rng(mix_seed(params.seed, 1));
  r.surveys = params.init == InitKind::Random ? SurveySet::random(g, init_rng) : SurveySet(g);
  // First sweep is compared with the marginals the initial surveys imply.
  r.marginals.resize(g.num_variables());
  for (std::size_t i = 0; i < g.num_variables(); ++i)
    r.marginals[i] = ws.cluster_marginal(r.surveys, static_cast<VarId>(i));
  auto prev = r.marginals;
  for (std::size_t sweep = 1; sweep <= params.max_iters; ++sweep) {
    for (std::size_t v = 0; v < g.num_variables(); ++v) {
      const auto i = static_cast<VarId>(v);
      if (!ws.update_variable(r.surveys, i, r.marginals[i], r.message_updates)) {
        r.status = {BPStatusKind::Contradiction, sweep, i};
        return r;
      }
    }
    if (max_subset_change(r.marginals, prev) < params.epsilon) {
      r.status = {BPStatusKind::Converged, sweep, kNoVar};
      return r;
    }
    prev = r.marginals;
  }
  r.status = {BPStatusKind::MaxIters, params.max_iters, kNoVar};
  return r;
}

double max_value_bias(const FactorGraph& g, const std::vector<ClusterMarginal>& marginals) {
  double worst = 0.0;
  for (std::size_t i = 0; i < g.num_variables(); ++i) {
    const std::size_t n = g.domain(i).allowed_count();
    if (n < 2) continue;
    const auto& row = marginals[i].over_values;
    worst = std::max(worst, *std::max_element(row.begin(), row.end()) - 1.0 / static_cast<double>(n));
  }
  return worst;
}

namespace {

std::size_t count_fixed(const FactorGraph& g) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < g.num_variables(); ++i) n += g.domain(i).is_singleton() ? 1 : 0;
  return n;
}

// Variables to restrict this round, each with its target subset.
std::vector<std::pair<VarId, SubsetMask>> select_restrictions(const FactorGraph& g,
                                                              const std::vector<ClusterMarginal>& marg,
                                                              SPDecVariant variant, double rho) {
  std::vector<VarId> candidates;
  std::vector<double> scores;
  std::vector<SubsetMask> targets;
  const auto free = free_variables(g);
  for (VarId i : free) {
    const std::size_t n = g.domain(i).allowed_count();
    if (variant == SPDecVariant::S) {
      const auto& row = marg[i].over_values;
      candidates.push_back(i);
      scores.push_back(*std::max_element(row.begin(), row.end()) - 1.0 / static_cast<double>(n));
      targets.push_back(SubsetMask{1} << argmax_value(row));
    } else {
      const auto& row = marg[i].over_subsets;
      const auto y = static_cast<SubsetMask>(argmax_value(row));
      // Restricting to the whole allowed set would change nothing.
      if (y == allowed_mask(g.domain(i))) continue;
      candidates.push_back(i);
      scores.push_back(row[y] - 1.0 / static_cast<double>((std::size_t{1} << n) - 1));
      targets.push_back(y);
    }
  }
  std::vector<std::pair<VarId, SubsetMask>> out;
  if (candidates.empty()) return out;
  const auto count = static_cast<std::size_t>(std::ceil(rho * static_cast<double>(free.size()) - 1e-12));
  for (std::size_t k : top_by_score(scores, std::max<std::size_t>(count, 1)))
    out.emplace_back(candidates[k], targets[k]);
  return out;
}

bool sp_dec_once(const FactorGraph& g, SPDecVariant variant, const SPDecParams& params, std::size_t attempt,
                 Rng& rng, SPDecResult& res, Contradiction& failure) {
  FactorGraph current = g;
  std::size_t round = 0;
  auto hand_off = [&](const FactorGraph& reduced) {
    res.trace.handed_off = true;
    res.trace.fixed_before_handoff = count_fixed(reduced);
    DecimationParams ls = params.local_search;
    ls.seed = mix_seed(params.local_search.seed, rng.next());
    auto dec = solve_bp_dec(reduced, ls);
    res.outcome.stats.iterations += dec.outcome.stats.iterations;
    res.outcome.stats.message_updates += dec.outcome.stats.message_updates;
    res.trace.local_search_iterations += dec.outcome.stats.iterations;
    if (dec.outcome.satisfied() && evaluate(g, dec.outcome.solution().assignment)) {
      res.outcome.result = Satisfied{dec.outcome.solution().assignment, res.outcome.stats.iterations, attempt};
      return true;
    }
    failure = Contradiction{attempt, round, kNoVar};
    if (auto* c = std::get_if<Contradiction>(&dec.outcome.result)) failure.variable = c->variable;
    return false;
  };

  while (true) {
    if (free_variables(current).empty()) {
      Assignment a = fixed_values(current);
      if (a.complete() && evaluate(g, a)) {
        res.outcome.result = Satisfied{std::move(a), res.outcome.stats.iterations, attempt};
        return true;
      }
      failure = Contradiction{attempt, round, kNoVar};
      return false;
    }
    ++round;
    SPParams sp = params.sp;
    sp.seed = mix_seed(params.sp.seed, rng.next());
    if (round == 1 && attempt > 1)
      sp.max_iters = static_cast<std::size_t>(std::llround(
          static_cast<double>(sp.max_iters) * std::pow(params.first_round_growth, static_cast<double>(attempt - 1))));
    SPResult r = run_sp(current, sp);
    res.outcome.stats.iterations += r.status.iterations;
    res.outcome.stats.message_updates += r.message_updates;
    SPDecRound rec;
    rec.sp_status = r.status;
    if (r.status.kind == BPStatusKind::Contradiction) {
      res.trace.rounds.push_back(rec);
      failure = Contradiction{attempt, round, r.status.variable};
      return false;
    }
    if (r.status.kind == BPStatusKind::MaxIters && params.strict_convergence) {
      res.trace.rounds.push_back(rec);
      failure = Contradiction{attempt, round, kNoVar};
      return false;
    }
    rec.max_bias = max_value_bias(current, r.marginals);
    if (rec.max_bias < params.sp.paramagnetic_threshold) {
      res.trace.rounds.push_back(rec);
      return hand_off(current);
    }
    auto picks = select_restrictions(current, r.marginals, variant, params.rho);
    if (picks.empty()) {
      res.trace.rounds.push_back(rec);
      return hand_off(current);
    }
    rec.restricted = picks;
    res.trace.rounds.push_back(rec);
    if (variant == SPDecVariant::S) {
      std::vector<Fix> fixes;
      for (auto [v, y] : picks) fixes.push_back(Fix{v, static_cast<Value>(std::countr_zero(y))});
      current = condition(current, fixes);
    } else {
      for (auto [v, y] : picks) current = restrict_domain(current, v, mask_values(y));
    }
  }
}

}  // namespace

SPDecResult solve_sp_dec(const FactorGraph& g, SPDecVariant variant, const SPDecParams& params) {
  if (!(params.rho > 0.0 && params.rho <= 1.0)) throw Error("rho must lie in (0, 1]");
  if (params.max_attempts < 1) throw Error("max_attempts must be at least 1");
  check_sp_limits(g, params.sp);
  SPDecResult res;
  Rng base(params.seed);
  Contradiction failure;
  for (std::size_t a = 1; a <= params.max_attempts; ++a) {
    Rng rng = base.substream(a);
    res.outcome.stats.attempts = a;
    res.trace = SPDecTrace{};
    if (sp_dec_once(g, variant, params, a, rng, res, failure)) return res;
  }
  if (params.max_attempts == 1)
    res.outcome.result = failure;
  else
    res.outcome.result = Exhausted{params.max_attempts};
  return res;
}

SweepReport perturbed_sp_sweep(SPWorkspace& ws, SurveySet& s, double delta_weight, Rng& rng,
                               std::vector<ClusterMarginal>& marginals, std::uint64_t& updates) {
  if (!(delta_weight >= 0.0 && delta_weight <= 1.0)) throw Error("mixing weight outside [0, 1]");
  const FactorGraph& g = ws.graph();
  SweepReport rep;
  rep.particle = Assignment(g.num_variables());
  const double keep = 1.0 - delta_weight;
  for (std::size_t v = 0; v < g.num_variables(); ++v) {
    const auto i = static_cast<VarId>(v);
    if (!ws.update_variable(s, i, marginals[i], updates)) {
      rep.contradiction = i;
      return rep;
    }
    const auto x = static_cast<Value>(sample_index(marginals[i].over_values, rng.uniform()));
    rep.particle[i] = x;
    if (delta_weight == 0.0) continue;
    for (EdgeId e : g.var_edges(i)) {
      auto out = s.to_factor(e);
      for (double& p : out) p *= keep;
      out[std::size_t{1} << x] += delta_weight;
    }
  }
  return rep;
}

SolveOutcome solve_perturbed_sp(const FactorGraph& g, std::size_t T, Rng& rng, const SPParams& params) {
  if (T < 2) throw Error("T must be at least 2");
  SPWorkspace ws(g, params);
  SolveOutcome out;
  out.stats.attempts = 1;
  SurveySet s(g);
  auto marginals = initial_marginals(g);
  SweepReport rep;
  for (std::size_t t = 1; t <= T; ++t) {
    rep = perturbed_sp_sweep(ws, s, gamma_at(t, T), rng, marginals, out.stats.message_updates);
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

SolveOutcome solve_perturbed_sp_with_retries(const FactorGraph& g, const PerturbedBPParams& schedule,
                                             const SPParams& params, const Rng& rng) {
  check_sp_limits(g, params);
  return retry_with_growth(schedule, rng,
                           [&](std::size_t T, Rng& r) { return solve_perturbed_sp(g, T, r, params); });
}

}  // namespace fgcsp
