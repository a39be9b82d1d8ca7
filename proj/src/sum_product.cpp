#include "fgcsp/sum_product.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fgcsp {

bool normalize(std::span<double> v) {
  double sum = 0.0;
  for (double x : v) sum += x;
  if (!(sum >= 1e-300)) {
    std::fill(v.begin(), v.end(), 0.0);
    return false;
  }
  const double inv = 1.0 / sum;
  for (double& x : v) x *= inv;
  return true;
}

namespace {

void fill_uniform_allowed(const Domain& d, std::span<double> out) {
  const double p = 1.0 / static_cast<double>(d.allowed_count());
  for (std::size_t v = 0; v < out.size(); ++v) out[v] = d.allows(static_cast<Value>(v)) ? p : 0.0;
}

void apply_mask(const Domain& d, std::span<double> v) {
  if (!d.is_restricted()) return;
  for (std::size_t x = 0; x < v.size(); ++x)
    if (!d.allows(static_cast<Value>(x))) v[x] = 0.0;
}

// Keeps long products away from underflow; callers normalize afterwards.
void rescale(std::span<double> v) {
  double mx = 0.0;
  for (double x : v) mx = std::max(mx, x);
  if (mx > 0.0 && mx < 1e-150)
    for (double& x : v) x /= mx;
}

// out[x_k] = sum over table rows with C_I = 1 and x_{slot} = x_k of the product
// of the other scope variables' incoming messages. Unnormalized.
void factor_sum(const FactorGraph& g, const MessageSet& m, FactorId f, std::size_t slot,
                std::span<double> out, std::vector<std::size_t>& counter) {
  const auto& c = g.constraint(f);
  const std::size_t arity = c.scope.size();
  std::fill(out.begin(), out.end(), 0.0);
  counter.assign(arity, 0);
  const EdgeId base = g.edge_id(f, 0);
  for (std::size_t idx = 0; idx < c.table.size(); ++idx) {
    if (c.table[idx]) {
      double prod = 1.0;
      for (std::size_t j = 0; j < arity && prod != 0.0; ++j)
        if (j != slot) prod *= m.to_factor(base + static_cast<EdgeId>(j))[counter[j]];
      out[counter[slot]] += prod;
    }
    for (std::size_t j = arity; j-- > 0;) {
      if (++counter[j] < g.domain(c.scope[j]).size()) break;
      counter[j] = 0;
    }
  }
}

Message direct_var_to_factor(const FactorGraph& g, const MessageSet& m, VarId i, EdgeId skip) {
  Message out;
  out.entries.assign(g.domain(i).size(), 1.0);
  apply_mask(g.domain(i), out.entries);
  for (EdgeId e : g.var_edges(i)) {
    if (e == skip) continue;
    auto in = m.to_var(e);
    for (std::size_t x = 0; x < out.entries.size(); ++x) out.entries[x] *= in[x];
    rescale(out.entries);
  }
  out.contradictory = !normalize(out.entries);
  return out;
}

}  // namespace

MessageSet::MessageSet(const FactorGraph& g) {
  offset_.resize(g.num_edges() + 1, 0);
  for (std::size_t e = 0; e < g.num_edges(); ++e)
    offset_[e + 1] = offset_[e] + g.domain(g.edge(static_cast<EdgeId>(e)).var).size();
  to_factor_.assign(offset_.back(), 0.0);
  to_var_.assign(offset_.back(), 0.0);
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    const Domain& d = g.domain(g.edge(static_cast<EdgeId>(e)).var);
    fill_uniform_allowed(d, to_factor(static_cast<EdgeId>(e)));
    fill_uniform_allowed(d, to_var(static_cast<EdgeId>(e)));
  }
}

MessageSet MessageSet::random(const FactorGraph& g, Rng& rng) {
  MessageSet m(g);
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    const Domain& d = g.domain(g.edge(static_cast<EdgeId>(e)).var);
    for (auto buf : {m.to_factor(static_cast<EdgeId>(e)), m.to_var(static_cast<EdgeId>(e))}) {
      for (std::size_t x = 0; x < buf.size(); ++x)
        buf[x] = d.allows(static_cast<Value>(x)) ? rng.uniform() + 1e-3 : 0.0;
      normalize(buf);
    }
  }
  return m;
}

Message factor_to_var(const FactorGraph& g, const MessageSet& m, FactorId f, VarId i) {
  const EdgeId e = g.find_edge(f, i);
  Message out;
  out.entries.assign(g.domain(i).size(), 0.0);
  std::vector<std::size_t> counter;
  factor_sum(g, m, f, g.edge(e).slot, out.entries, counter);
  out.contradictory = !normalize(out.entries);
  return out;
}

Message var_to_factor(const FactorGraph& g, const MessageSet& m, VarId i, FactorId f) {
  return direct_var_to_factor(g, m, i, g.find_edge(f, i));
}

Message var_to_factor_from_belief(const FactorGraph& g, const MessageSet& m, VarId i, FactorId f) {
  const EdgeId skip = g.find_edge(f, i);
  auto divisor = m.to_var(skip);
  if (std::any_of(divisor.begin(), divisor.end(), [](double d) { return d < 1e-12; }))
    return direct_var_to_factor(g, m, i, skip);
  Message belief = marginal(g, m, i);
  if (belief.contradictory) return belief;
  Message out;
  out.entries.resize(belief.entries.size());
  for (std::size_t x = 0; x < out.entries.size(); ++x) out.entries[x] = belief.entries[x] / divisor[x];
  out.contradictory = !normalize(out.entries);
  return out;
}

Message marginal(const FactorGraph& g, const MessageSet& m, VarId i) {
  return direct_var_to_factor(g, m, i, kNoVar);
}

bool BPWorkspace::update_variable(const FactorGraph& g, MessageSet& m, VarId i,
                                  std::span<double> belief, std::uint64_t& updates) {
  const Domain& dom = g.domain(i);
  const std::size_t q = dom.size();
  auto edges = g.var_edges(i);

  for (EdgeId e : edges) {
    const Edge& ed = g.edge(e);
    auto out = m.to_var(e);
    factor_sum(g, m, ed.factor, ed.slot, out, counter_);
    normalize(out);
  }
  updates += edges.size();

  // product_ holds suffix products: row k is the product over edges k..d-1.
  const std::size_t d = edges.size();
  product_.assign((d + 1) * q, 1.0);
  for (std::size_t k = d; k-- > 0;) {
    std::span<double> row(product_.data() + k * q, q);
    std::span<const double> next(product_.data() + (k + 1) * q, q);
    auto in = m.to_var(edges[k]);
    for (std::size_t x = 0; x < q; ++x) row[x] = next[x] * in[x];
    rescale(row);
  }

  std::copy(product_.begin(), product_.begin() + static_cast<std::ptrdiff_t>(q), belief.begin());
  apply_mask(dom, belief);
  if (!normalize(belief)) return false;

  // Walk forward with a running prefix product (masked).
  std::vector<double>& prefix = prefix_;
  prefix.assign(q, 1.0);
  apply_mask(dom, prefix);
  for (std::size_t k = 0; k < d; ++k) {
    auto out = m.to_factor(edges[k]);
    const double* suffix = product_.data() + (k + 1) * q;
    for (std::size_t x = 0; x < q; ++x) out[x] = prefix[x] * suffix[x];
    normalize(out);
    auto in = m.to_var(edges[k]);
    for (std::size_t x = 0; x < q; ++x) prefix[x] *= in[x];
    rescale(prefix);
  }
  updates += d;
  return true;
}

MarginalTable uniform_marginals(const FactorGraph& g) {
  MarginalTable t;
  t.rows.resize(g.num_variables());
  for (std::size_t i = 0; i < g.num_variables(); ++i) {
    t.rows[i].resize(g.domain(i).size());
    fill_uniform_allowed(g.domain(i), t.rows[i]);
  }
  return t;
}

double max_abs_change(const MarginalTable& a, const MarginalTable& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t x = 0; x < a[i].size(); ++x) worst = std::max(worst, std::abs(a[i][x] - b[i][x]));
  return worst;
}

void shuffle_order(std::vector<VarId>& order, Rng& rng) {
  for (std::size_t k = order.size(); k > 1; --k) std::swap(order[k - 1], order[rng.below(k)]);
}

VarId bp_sweep(const FactorGraph& g, MessageSet& m, MarginalTable& marginals,
               std::span<const VarId> order, BPWorkspace& ws, std::uint64_t& updates) {
  for (VarId i : order)
    if (!ws.update_variable(g, m, i, marginals[i], updates)) return i;
  return kNoVar;
}

BPResult run_bp(const FactorGraph& g, const BPParams& params) {
  if (!(params.epsilon > 0.0)) throw Error("epsilon must be positive");
  if (params.max_iters < 1) throw Error("max_iters must be at least 1");

  BPResult r;
  Rng init_rng(mix_seed(params.seed, 1));
  Rng order_rng(mix_seed(params.seed, 2));
  r.messages = params.init == InitKind::Random ? MessageSet::random(g, init_rng) : MessageSet(g);
  r.marginals = uniform_marginals(g);
  MarginalTable prev = r.marginals;

  std::vector<VarId> order(g.num_variables());
  std::iota(order.begin(), order.end(), VarId{0});
  BPWorkspace ws;

  for (std::size_t sweep = 1; sweep <= params.max_iters; ++sweep) {
    if (params.order == UpdateOrder::Shuffled) shuffle_order(order, order_rng);
    const VarId bad = bp_sweep(g, r.messages, r.marginals, order, ws, r.message_updates);
    if (bad != kNoVar) {
      r.status = {BPStatusKind::Contradiction, sweep, bad};
      return r;
    }
    if (max_abs_change(r.marginals, prev) < params.epsilon) {
      r.status = {BPStatusKind::Converged, sweep, kNoVar};
      return r;
    }
    prev = r.marginals;
  }
  r.status = {BPStatusKind::MaxIters, params.max_iters, kNoVar};
  return r;
}

}  // namespace fgcsp
