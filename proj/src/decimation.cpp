#include "fgcsp/decimation.hpp"

#include <algorithm>
#include <cmath>

namespace fgcsp {

Value argmax_value(std::span<const double> row) {
  double mx = -1.0;
  for (double p : row) mx = std::max(mx, p);
  for (std::size_t x = 0; x < row.size(); ++x)
    if (row[x] >= mx - kBiasTieTolerance) return static_cast<Value>(x);
  return 0;
}

std::vector<std::size_t> top_by_score(std::span<const double> scores, std::size_t count) {
  // Exact sort first, then a greedy pass so near-equal scores resolve by position.
  std::vector<std::size_t> order(scores.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  count = std::min(count, order.size());
  std::vector<std::size_t> picked;
  picked.reserve(count);
  std::size_t head = 0;
  std::vector<std::uint8_t> used(order.size(), 0);
  while (picked.size() < count) {
    while (used[head]) ++head;
    const double best = scores[order[head]];
    std::size_t choice = order[head];
    std::size_t choice_pos = head;
    for (std::size_t p = head + 1; p < order.size() && scores[order[p]] >= best - kBiasTieTolerance; ++p)
      if (!used[p] && order[p] < choice) {
        choice = order[p];
        choice_pos = p;
      }
    used[choice_pos] = 1;
    picked.push_back(choice);
  }
  return picked;
}

namespace {

std::vector<Fix> select_impl(const MarginalTable& marginals, std::span<const VarId> free, double rho,
                             const FactorGraph* g) {
  if (free.empty()) throw Error("no free variables to select from");
  if (!(rho > 0.0 && rho <= 1.0)) throw Error("rho must lie in (0, 1]");
  std::vector<double> bias(free.size());
  for (std::size_t k = 0; k < free.size(); ++k) {
    const auto& row = marginals[free[k]];
    const double width = g ? static_cast<double>(g->domain(free[k]).allowed_count())
                           : static_cast<double>(row.size());
    bias[k] = *std::max_element(row.begin(), row.end()) - 1.0 / width;
  }
  const auto count = static_cast<std::size_t>(std::ceil(rho * static_cast<double>(free.size()) - 1e-12));
  std::vector<Fix> out;
  for (std::size_t k : top_by_score(bias, std::max<std::size_t>(count, 1)))
    out.push_back(Fix{free[k], argmax_value(marginals[free[k]])});
  return out;
}

}  // namespace

std::vector<Fix> select_most_biased(const MarginalTable& marginals, std::span<const VarId> free,
                                    double rho) {
  return select_impl(marginals, free, rho, nullptr);
}

std::vector<Fix> select_most_biased(const FactorGraph& g, const MarginalTable& marginals,
                                    std::span<const VarId> free, double rho) {
  return select_impl(marginals, free, rho, &g);
}

std::vector<VarId> free_variables(const FactorGraph& g) {
  std::vector<VarId> out;
  for (std::size_t i = 0; i < g.num_variables(); ++i)
    if (g.domain(i).allowed_count() > 1) out.push_back(static_cast<VarId>(i));
  return out;
}

namespace {

// One decimation attempt. Returns true with the assignment on success.
bool decimate_once(const FactorGraph& g, const DecimationParams& params, std::size_t attempt, double rho,
                   Rng& rng, SolveOutcome& out, DecimationTrace& trace, Contradiction& failure) {
  FactorGraph current = g;
  std::size_t round = 0;
  while (true) {
    auto free = free_variables(current);
    if (free.empty()) {
      Assignment a = fixed_values(current);
      if (a.complete() && evaluate(g, a)) {
        out.result = Satisfied{std::move(a), out.stats.iterations, attempt};
        return true;
      }
      failure = Contradiction{attempt, round, kNoVar};
      return false;
    }
    ++round;
    BPParams bp = params.bp;
    bp.seed = mix_seed(params.bp.seed, rng.next());
    if (round == 1 && attempt > 1)
      bp.max_iters = static_cast<std::size_t>(std::llround(
          static_cast<double>(bp.max_iters) *
          std::pow(params.first_round_growth, static_cast<double>(attempt - 1))));
    BPResult r = run_bp(current, bp);
    out.stats.iterations += r.status.iterations;
    out.stats.message_updates += r.message_updates;
    if (r.status.kind == BPStatusKind::Contradiction) {
      failure = Contradiction{attempt, round, r.status.variable};
      return false;
    }
    if (r.status.kind == BPStatusKind::MaxIters && params.strict_convergence) {
      failure = Contradiction{attempt, round, kNoVar};
      return false;
    }

    auto fixes = select_most_biased(current, r.marginals, free, rho);
    DecimationRound rec;
    rec.attempt = attempt;
    rec.rho = rho;
    rec.bp_status = r.status;
    for (Fix& fx : fixes) {
      const auto& row = r.marginals[fx.var];
      rec.biases.push_back(*std::max_element(row.begin(), row.end()) -
                           1.0 / static_cast<double>(current.domain(fx.var).allowed_count()));
      if (params.sample_values) fx.value = static_cast<Value>(sample_index(row, rng.uniform()));
    }
    rec.fixed = fixes;
    rec.marginals = std::move(r.marginals);
    trace.rounds.push_back(std::move(rec));
    current = condition(current, fixes);
  }
}

}  // namespace

DecimationResult solve_bp_dec(const FactorGraph& g, const DecimationParams& params) {
  if (!(params.rho > 0.0 && params.rho <= 1.0)) throw Error("rho must lie in (0, 1]");
  if (params.max_attempts < 1) throw Error("max_attempts must be at least 1");
  if (!(params.rho_divisor >= 1.0)) throw Error("rho divisor must be at least 1");
  if (!(params.first_round_growth >= 1.0)) throw Error("first-round growth must be at least 1");
  DecimationResult res;
  Rng base(params.seed);
  Contradiction failure;
  double rho = params.rho;
  for (std::size_t a = 1; a <= params.max_attempts; ++a, rho /= params.rho_divisor) {
    Rng rng = base.substream(a);
    res.outcome.stats.attempts = a;
    if (decimate_once(g, params, a, rho, rng, res.outcome, res.trace, failure)) return res;
  }
  if (params.max_attempts == 1)
    res.outcome.result = failure;
  else
    res.outcome.result = Exhausted{params.max_attempts};
  return res;
}

}  // namespace fgcsp
