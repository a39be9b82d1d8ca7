#include "fgcsp/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "fgcsp/decimation.hpp"
#include "fgcsp/gibbs.hpp"
#include "fgcsp/perturbed_bp.hpp"
#include "fgcsp/survey_prop.hpp"
#include "json.hpp"

namespace fgcsp {

using json = nlohmann::json;

namespace {

const std::vector<std::pair<SolverKind, std::string>>& solver_names() {
  static const std::vector<std::pair<SolverKind, std::string>> names{
      {SolverKind::BPDec, "bp-dec"},           {SolverKind::PerturbedBP, "perturbed-bp"},
      {SolverKind::SPDecS, "sp-dec-s"},        {SolverKind::SPDecC, "sp-dec-c"},
      {SolverKind::PerturbedSP, "perturbed-sp"}, {SolverKind::Gibbs, "gibbs"}};
  return names;
}

bool is_decimation(SolverKind s) {
  return s == SolverKind::BPDec || s == SolverKind::SPDecS || s == SolverKind::SPDecC;
}

bool is_sp(SolverKind s) {
  return s == SolverKind::SPDecS || s == SolverKind::SPDecC || s == SolverKind::PerturbedSP;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

}  // namespace

std::string solver_name(SolverKind s) {
  for (const auto& [k, name] : solver_names())
    if (k == s) return name;
  return "?";
}

SolverKind parse_solver(const std::string& name) {
  for (const auto& [k, n] : solver_names())
    if (n == name) return k;
  throw ConfigError("unknown solver '" + name + "'");
}

SolverParams protocol_defaults(Protocol p, SolverKind s) {
  SolverParams out;
  if (p == Protocol::RCSP) return out;
  out.max_attempts = 11;
  if (is_decimation(s)) {
    out.T = 10240;
    out.growth = 1.0;
    out.rho = 1.0;
    out.rho_divisor = 2.0;
  } else {
    out.T = 10;
    out.growth = 2.0;
  }
  return out;
}

bool verify(const FactorGraph& g, const Assignment& a) {
  if (a.size() != g.num_variables() || !a.complete()) return false;
  for (std::size_t i = 0; i < g.num_variables(); ++i)
    if (!g.domain(i).allows(a[i])) return false;
  return evaluate(g, a);
}

SolveReport solve_instance(const FactorGraph& g, SolverKind solver, const SolverParams& p, std::uint64_t seed) {
  SolveReport rep;
  PerturbedBPParams schedule{p.T, p.growth, p.max_attempts, seed};
  switch (solver) {
    case SolverKind::BPDec: {
      DecimationParams d;
      d.rho = p.rho;
      d.rho_divisor = p.rho_divisor;
      d.bp.epsilon = p.epsilon;
      d.bp.max_iters = p.T;
      d.max_attempts = p.max_attempts;
      d.strict_convergence = p.strict_convergence;
      d.first_round_growth = p.growth;
      d.seed = seed;
      rep.outcome = solve_bp_dec(g, d).outcome;
      break;
    }
    case SolverKind::PerturbedBP:
      rep.outcome = solve_with_retries(g, schedule, Rng(seed));
      break;
    case SolverKind::SPDecS:
    case SolverKind::SPDecC: {
      if (p.rho_divisor != 1.0) throw ConfigError("SP-dec keeps rho fixed across attempts (rho_divisor must be 1)");
      SPDecParams d;
      d.sp.m = p.m;
      d.sp.epsilon = p.epsilon;
      d.sp.max_iters = p.T;
      d.sp.paramagnetic_threshold = p.paramagnetic_threshold;
      d.sp.domain_cap = p.domain_cap;
      d.rho = p.rho;
      d.local_search.rho = p.rho;
      d.local_search.bp.epsilon = p.epsilon;
      d.local_search.bp.max_iters = p.T;
      d.strict_convergence = p.strict_convergence;
      d.max_attempts = p.max_attempts;
      d.first_round_growth = p.growth;
      d.seed = seed;
      auto r = solve_sp_dec(g, solver == SolverKind::SPDecS ? SPDecVariant::S : SPDecVariant::C, d);
      rep.outcome = std::move(r.outcome);
      rep.handed_off = r.trace.handed_off;
      rep.fixed_before_handoff = r.trace.fixed_before_handoff;
      break;
    }
    case SolverKind::PerturbedSP: {
      SPParams sp;
      sp.m = p.m;
      sp.domain_cap = p.domain_cap;
      rep.outcome = solve_perturbed_sp_with_retries(g, schedule, sp, Rng(seed));
      break;
    }
    case SolverKind::Gibbs:
      rep.outcome = retry_with_growth(schedule, Rng(seed),
                                      [&](std::size_t T, Rng& rng) { return solve_gibbs(g, T, rng); });
      break;
  }
  if (rep.outcome.satisfied()) {
    rep.verified = verify(g, rep.outcome.solution().assignment);
    if (!rep.verified) rep.outcome.result = Contradiction{rep.outcome.stats.attempts, 0, kNoVar};
  }
  return rep;
}

// ---- config ---------------------------------------------------------------

namespace {

const std::set<std::string> kParamKeys{"T",   "growth", "max_attempts",           "epsilon",    "rho",
                                       "rho_divisor", "m", "paramagnetic_threshold", "domain_cap",
                                       "strict_convergence"};

void apply_override(SolverParams& p, const std::string& key, double v) {
  if (key == "T") p.T = static_cast<std::size_t>(v);
  else if (key == "growth") p.growth = v;
  else if (key == "max_attempts") p.max_attempts = static_cast<std::size_t>(v);
  else if (key == "epsilon") p.epsilon = v;
  else if (key == "rho") p.rho = v;
  else if (key == "rho_divisor") p.rho_divisor = v;
  else if (key == "m") p.m = v;
  else if (key == "paramagnetic_threshold") p.paramagnetic_threshold = v;
  else if (key == "domain_cap") p.domain_cap = static_cast<std::size_t>(v);
  else if (key == "strict_convergence") p.strict_convergence = v != 0.0;
}

std::uint64_t as_seed(const json& v, const std::string& where) {
  if (!v.is_number_unsigned()) throw ConfigError(where + ": seeds must be nonnegative integers");
  return v.get<std::uint64_t>();
}

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key())) throw ConfigError(where + ": unknown key '" + it.key() + "'");
}

}  // namespace

void validate_params(const SolverParams& p, SolverKind s) {
  const std::string who = solver_name(s) + ": ";
  if (p.T < 2) throw ConfigError(who + "T must be at least 2");
  if (!(p.growth >= 1.0)) throw ConfigError(who + "growth must be at least 1");
  if (!is_decimation(s) && !(p.growth > 1.0)) throw ConfigError(who + "growth must exceed 1");
  if (p.max_attempts < 1) throw ConfigError(who + "max_attempts must be at least 1");
  if (!(p.epsilon > 0.0)) throw ConfigError(who + "epsilon must be positive");
  if (!(p.rho > 0.0 && p.rho <= 1.0)) throw ConfigError(who + "rho must lie in (0, 1]");
  if (!(p.rho_divisor >= 1.0)) throw ConfigError(who + "rho_divisor must be at least 1");
  if (!(p.m >= 0.0 && p.m <= 1.0)) throw ConfigError(who + "m must lie in [0, 1]");
  if (p.domain_cap < 2 || p.domain_cap > 16) throw ConfigError(who + "domain_cap must lie in [2, 16]");
  if ((s == SolverKind::SPDecS || s == SolverKind::SPDecC) && p.rho_divisor != 1.0)
    throw ConfigError(who + "SP-dec keeps rho fixed across attempts (rho_divisor must be 1)");
}

SolverParams ExperimentConfig::params_for(SolverKind s) const {
  SolverParams p = protocol_defaults(protocol, s);
  for (const auto& [k, v] : overrides) apply_override(p, k, v);
  return p;
}

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(j,
             {"generator", "alphas", "input", "solver", "solvers", "protocol", "params", "seeds", "time_budget_s",
              "break_symmetry", "threads"},
             "config");
  ExperimentConfig c;
  try {
    if (j.contains("generator") == j.contains("input"))
      throw ConfigError("config: give exactly one of 'generator' and 'input'");
    if (j.contains("generator")) {
      const json& gen = j["generator"];
      check_keys(gen, {"kind", "n", "k", "q"}, "generator");
      const std::string kind = gen.at("kind").get<std::string>();
      if (kind == "ksat") c.generator = GeneratorKind::KSat;
      else if (kind == "qcol") c.generator = GeneratorKind::QCol;
      else throw ConfigError("generator.kind must be 'ksat' or 'qcol'");
      c.n = gen.at("n").get<std::size_t>();
      c.k = gen.value("k", std::size_t{3});
      c.q = gen.value("q", std::size_t{3});
      if (c.n < 2) throw ConfigError("generator.n must be at least 2");
      if (!j.contains("alphas") || !j["alphas"].is_array() || j["alphas"].empty())
        throw ConfigError("config: 'alphas' must be a nonempty list when using a generator");
      for (const auto& a : j["alphas"]) {
        const double alpha = a.get<double>();
        if (!(alpha > 0.0)) throw ConfigError("alphas: values must be positive");
        c.alphas.push_back(alpha);
      }
    } else {
      if (j.contains("alphas")) throw ConfigError("config: 'alphas' only applies to generated instances");
      std::filesystem::path in = j["input"].get<std::string>();
      c.input = in.is_relative() && !base_dir.empty() ? base_dir / in : in;
    }

    if (j.contains("solver") == j.contains("solvers"))
      throw ConfigError("config: give exactly one of 'solver' and 'solvers'");
    if (j.contains("solver")) {
      c.solvers.push_back(parse_solver(j["solver"].get<std::string>()));
    } else {
      for (const auto& s : j["solvers"]) c.solvers.push_back(parse_solver(s.get<std::string>()));
      if (c.solvers.empty()) throw ConfigError("solvers: list is empty");
    }

    const std::string protocol = j.value("protocol", std::string("rcsp"));
    if (protocol == "rcsp") c.protocol = Protocol::RCSP;
    else if (protocol == "benchmark") c.protocol = Protocol::Benchmark;
    else throw ConfigError("protocol must be 'rcsp' or 'benchmark'");

    if (j.contains("params")) {
      const json& p = j["params"];
      check_keys(p, kParamKeys, "params");
      for (auto it = p.begin(); it != p.end(); ++it) {
        if (it.key() == "strict_convergence")
          c.overrides.emplace_back(it.key(), it.value().get<bool>() ? 1.0 : 0.0);
        else
          c.overrides.emplace_back(it.key(), it.value().get<double>());
      }
    }

    if (!j.contains("seeds")) throw ConfigError("config: 'seeds' is required");
    const json& seeds = j["seeds"];
    if (seeds.is_array()) {
      for (const auto& s : seeds) c.seeds.push_back(as_seed(s, "seeds"));
    } else {
      check_keys(seeds, {"from", "count"}, "seeds");
      const std::uint64_t from = as_seed(seeds.at("from"), "seeds.from");
      const std::uint64_t count = as_seed(seeds.at("count"), "seeds.count");
      for (std::uint64_t s = 0; s < count; ++s) c.seeds.push_back(from + s);
    }
    if (c.seeds.empty()) throw ConfigError("seeds: list is empty");

    c.time_budget_s = j.value("time_budget_s", 0.0);
    if (!(c.time_budget_s >= 0.0)) throw ConfigError("time_budget_s must be nonnegative");
    c.break_symmetry = j.value("break_symmetry", true);
    c.threads = j.value("threads", std::size_t{1});
    if (c.threads < 1) throw ConfigError("threads must be at least 1");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  for (SolverKind s : c.solvers) {
    const SolverParams p = c.params_for(s);
    validate_params(p, s);
    if (is_sp(s) && c.generator == GeneratorKind::QCol && c.q > p.domain_cap)
      throw ConfigError(solver_name(s) + ": " + std::to_string(c.q) + " colors exceed domain_cap " +
                        std::to_string(p.domain_cap));
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

// ---- experiment -----------------------------------------------------------

namespace {

struct Job {
  SolverKind solver;
  double alpha;
  std::uint64_t seed;
};

std::string instance_id(const ExperimentConfig& c, double alpha, std::uint64_t seed) {
  if (c.input) return c.input->filename().string();
  std::ostringstream os;
  if (*c.generator == GeneratorKind::KSat)
    os << c.k << "sat";
  else
    os << c.q << "col";
  os << "-n" << c.n << "-a" << fmt("%g", alpha) << "-s" << seed;
  return os.str();
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
  if (config.seeds.empty()) throw ConfigError("seeds: list is empty");
  if (config.solvers.empty()) throw ConfigError("no solver configured");

  std::optional<FactorGraph> fixed_instance;
  std::vector<double> alphas = config.alphas;
  if (config.input) {
    try {
      fixed_instance = load_instance(*config.input);
    } catch (const Error& e) {
      throw ConfigError("input: " + std::string(e.what()));
    }
    alphas = {static_cast<double>(fixed_instance->num_factors()) /
              static_cast<double>(std::max<std::size_t>(fixed_instance->num_variables(), 1))};
    for (SolverKind s : config.solvers) {
      if (!is_sp(s)) continue;
      SPParams sp;
      sp.domain_cap = config.params_for(s).domain_cap;
      try {
        check_sp_limits(*fixed_instance, sp);
      } catch (const Error& e) {
        throw ConfigError(solver_name(s) + ": " + e.what());
      }
    }
  }

  std::vector<Job> jobs;
  for (SolverKind s : config.solvers)
    for (double a : alphas)
      for (std::uint64_t seed : config.seeds) jobs.push_back({s, a, seed});

  ExperimentResult result;
  result.runs.resize(jobs.size());

  auto run_job = [&](std::size_t idx) {
    const Job& job = jobs[idx];
    FactorGraph g = fixed_instance ? *fixed_instance : FactorGraph{};
    if (!fixed_instance) {
      const std::size_t width = *config.generator == GeneratorKind::KSat ? config.k : config.q;
      g = generate(spec_for_alpha(*config.generator, config.n, job.alpha, width, job.seed));
      if (*config.generator == GeneratorKind::QCol && config.break_symmetry) g = break_symmetry(g);
    }
    const SolverParams p = config.params_for(job.solver);
    const auto start = std::chrono::steady_clock::now();
    SolveReport rep = solve_instance(g, job.solver, p, mix_seed(job.seed, 1));
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    RunRecord& r = result.runs[idx];
    r.instance = instance_id(config, job.alpha, job.seed);
    r.seed = job.seed;
    r.solver = job.solver;
    r.alpha = job.alpha;
    r.n = g.num_variables();
    r.outcome = rep.outcome.kind();
    r.iterations = rep.outcome.stats.iterations;
    r.message_updates = rep.outcome.stats.message_updates;
    r.attempts = rep.outcome.stats.attempts;
    r.time_s = elapsed;
    r.strict_convergence = p.strict_convergence;
    r.fixed_before_handoff = rep.fixed_before_handoff;
    if (config.time_budget_s > 0.0 && elapsed > config.time_budget_s) r.outcome = "timeout";
  };

  const std::size_t workers = std::min(config.threads, jobs.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < jobs.size(); ++i) run_job(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = next++; i < jobs.size(); i = next++) run_job(i);
        } catch (...) {
          errors[w] = std::current_exception();
          next = jobs.size();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  result.aggregate = aggregate(result.runs);
  return result;
}

std::vector<AggregateRow> aggregate(const std::vector<RunRecord>& runs) {
  std::vector<AggregateRow> rows;
  std::map<std::pair<int, double>, std::size_t> index;
  std::vector<double> iter_sum, time_sum;
  std::vector<std::size_t> successes;
  for (const auto& r : runs) {
    const auto key = std::make_pair(static_cast<int>(r.solver), r.alpha);
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, rows.size()).first;
      rows.push_back(AggregateRow{r.solver, r.alpha, r.n, 0, 0.0, {}, {}});
      iter_sum.push_back(0.0);
      time_sum.push_back(0.0);
      successes.push_back(0);
    }
    const std::size_t k = it->second;
    ++rows[k].seeds;
    if (r.satisfied()) {
      ++successes[k];
      iter_sum[k] += static_cast<double>(r.iterations);
      time_sum[k] += r.time_s;
    }
  }
  for (std::size_t k = 0; k < rows.size(); ++k) {
    rows[k].success_rate = static_cast<double>(successes[k]) / static_cast<double>(rows[k].seeds);
    if (successes[k] > 0) {
      rows[k].avg_iters = iter_sum[k] / static_cast<double>(successes[k]);
      rows[k].avg_time_s = time_sum[k] / static_cast<double>(successes[k]);
    }
  }
  return rows;
}

std::string aggregate_csv(const std::vector<AggregateRow>& rows, bool timing) {
  std::ostringstream os;
  os << "solver,alpha,n,seeds,success_rate,avg_iters,avg_time_s\n";
  for (const auto& r : rows) {
    os << solver_name(r.solver) << ',' << fmt("%g", r.alpha) << ',' << r.n << ',' << r.seeds << ','
       << fmt("%.4f", r.success_rate) << ',';
    if (r.avg_iters) os << fmt("%.2f", *r.avg_iters);
    os << ',';
    if (r.avg_time_s) os << (timing ? fmt("%.6f", *r.avg_time_s) : "0");
    os << '\n';
  }
  return os.str();
}

std::string runs_csv(const std::vector<RunRecord>& runs, bool timing) {
  std::ostringstream os;
  os << "instance,seed,solver,alpha,n,outcome,iterations,message_updates,attempts,time_s,strict_convergence,"
        "fixed_before_handoff\n";
  for (const auto& r : runs) {
    os << r.instance << ',' << r.seed << ',' << solver_name(r.solver) << ',' << fmt("%g", r.alpha) << ',' << r.n
       << ',' << r.outcome << ',' << r.iterations << ',' << r.message_updates << ',' << r.attempts << ','
       << (timing ? fmt("%.6f", r.time_s) : "0") << ',' << (r.strict_convergence ? 1 : 0) << ','
       << r.fixed_before_handoff << '\n';
  }
  return os.str();
}

}  // namespace fgcsp
