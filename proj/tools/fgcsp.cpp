// Command-line front end: solve, gen, bench, convert.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "fgcsp/harness.hpp"
#include "fgcsp/instances.hpp"

using namespace fgcsp;

namespace {

constexpr int kExitSatisfied = 0;
constexpr int kExitUnsatisfied = 10;
constexpr int kExitUsage = 2;
constexpr int kExitError = 1;

bool is_cnf(const std::filesystem::path& p) { return p.extension() == ".cnf"; }

bool all_boolean(const FactorGraph& g) {
  for (std::size_t i = 0; i < g.num_variables(); ++i)
    if (g.domain(i).size() != 2) return false;
  return true;
}

// DIMACS-style literals for Boolean instances (value 0 is True), value
// indices otherwise.
std::string format_assignment(const Assignment& a, bool as_literals) {
  std::ostringstream os;
  if (as_literals) {
    os << "v";
    for (std::size_t i = 0; i < a.size(); ++i) os << ' ' << (a[i] == 0 ? "" : "-") << i + 1;
    os << " 0";
  } else {
    for (std::size_t i = 0; i < a.size(); ++i) os << (i ? " " : "") << a[i];
  }
  return os.str();
}

void write_text(const std::optional<std::string>& out, const std::string& text) {
  if (!out) {
    std::cout << text;
    return;
  }
  std::ofstream f(*out, std::ios::binary);
  if (!f) throw Error("cannot write " + *out);
  f << text;
}

struct SolveArgs {
  std::string file;
  std::string solver = "perturbed-bp";
  std::uint64_t seed = 0;
  std::string protocol = "rcsp";
  std::optional<std::size_t> T, max_attempts, domain_cap;
  std::optional<double> growth, epsilon, rho, rho_divisor, m;
  bool strict = false;
  bool stats = false;
};

int cmd_solve(const SolveArgs& a) {
  const SolverKind solver = parse_solver(a.solver);
  const Protocol protocol = a.protocol == "benchmark" ? Protocol::Benchmark : Protocol::RCSP;
  SolverParams p = protocol_defaults(protocol, solver);
  if (a.T) p.T = *a.T;
  if (a.max_attempts) p.max_attempts = *a.max_attempts;
  if (a.domain_cap) p.domain_cap = *a.domain_cap;
  if (a.growth) p.growth = *a.growth;
  if (a.epsilon) p.epsilon = *a.epsilon;
  if (a.rho) p.rho = *a.rho;
  if (a.rho_divisor) p.rho_divisor = *a.rho_divisor;
  if (a.m) p.m = *a.m;
  p.strict_convergence = a.strict;
  validate_params(p, solver);

  const FactorGraph g = load_instance(a.file);
  const SolveReport rep = solve_instance(g, solver, p, a.seed);
  if (a.stats)
    std::cerr << "outcome=" << rep.outcome.kind() << " iterations=" << rep.outcome.stats.iterations
              << " message_updates=" << rep.outcome.stats.message_updates
              << " attempts=" << rep.outcome.stats.attempts << '\n';
  if (!rep.outcome.satisfied()) {
    std::cout << "UNSATISFIED\n";
    return kExitUnsatisfied;
  }
  std::cout << format_assignment(rep.outcome.solution().assignment, is_cnf(a.file) && all_boolean(g)) << '\n';
  return kExitSatisfied;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Message-passing solvers for constraint satisfaction problems"};
  app.require_subcommand(1);

  SolveArgs sa;
  auto* solve = app.add_subcommand("solve", "Solve an instance (.cnf or JSON)");
  solve->add_option("file", sa.file, "Instance file")->required()->check(CLI::ExistingFile);
  solve->add_option("--solver", sa.solver, "bp-dec, perturbed-bp, sp-dec-s, sp-dec-c, perturbed-sp, gibbs")
      ->check(CLI::IsMember({"bp-dec", "perturbed-bp", "sp-dec-s", "sp-dec-c", "perturbed-sp", "gibbs"}));
  solve->add_option("--seed", sa.seed, "Random seed");
  solve->add_option("--protocol", sa.protocol, "Retry schedule defaults")
      ->check(CLI::IsMember({"rcsp", "benchmark"}));
  solve->add_option("--T", sa.T, "Initial sweeps, or BP/SP iteration cap per decimation round");
  solve->add_option("--growth", sa.growth, "T multiplier per failed attempt");
  solve->add_option("--max-attempts", sa.max_attempts, "Total runs including the first");
  solve->add_option("--epsilon", sa.epsilon, "Convergence threshold");
  solve->add_option("--rho", sa.rho, "Fraction of free variables fixed per decimation round");
  solve->add_option("--rho-divisor", sa.rho_divisor, "rho divisor per failed BP-dec attempt");
  solve->add_option("--m", sa.m, "SP(m) parameter in [0, 1]");
  solve->add_option("--domain-cap", sa.domain_cap, "Largest domain SP accepts");
  solve->add_flag("--strict", sa.strict, "Treat a non-converged decimation round as failure");
  solve->add_flag("--stats", sa.stats, "Print solver counters to stderr");

  std::string kind;
  GeneratorSpec gs;
  std::optional<std::string> gen_out;
  std::string gen_format;
  bool gen_break = false;
  auto* gen = app.add_subcommand("gen", "Generate a random instance");
  gen->add_option("--kind", kind, "ksat or qcol")->required()->check(CLI::IsMember({"ksat", "qcol"}));
  gen->add_option("--n", gs.n, "Variables")->required()->check(CLI::PositiveNumber);
  gen->add_option("--m", gs.m, "Constraints")->required();
  gen->add_option("--k", gs.k, "Clause width");
  gen->add_option("--q", gs.q, "Colors");
  gen->add_option("--seed", gs.seed, "Random seed");
  gen->add_option("--out", gen_out, "Output file (.cnf is DIMACS, otherwise JSON); default stdout");
  gen->add_option("--format", gen_format, "Format for stdout: cnf or json")->check(CLI::IsMember({"cnf", "json"}));
  gen->add_flag("--break-symmetry", gen_break, "Pin the first free variable to its lowest value");

  std::string config_path;
  std::optional<std::string> bench_out, runs_out;
  bool no_timing = false;
  std::optional<std::size_t> threads;
  auto* bench = app.add_subcommand("bench", "Run an experiment from a JSON config");
  bench->add_option("--config", config_path, "Experiment config")->required()->check(CLI::ExistingFile);
  bench->add_option("--out", bench_out, "Aggregate CSV file; default stdout");
  bench->add_option("--runs", runs_out, "Per-run CSV file");
  bench->add_flag("--no-timing", no_timing, "Write 0 in every time column");
  bench->add_option("--threads", threads, "Worker threads (overrides the config)")->check(CLI::PositiveNumber);

  std::string conv_in, conv_out;
  auto* convert = app.add_subcommand("convert", "Convert between DIMACS and JSON by extension");
  convert->add_option("in", conv_in, "Input file")->required()->check(CLI::ExistingFile);
  convert->add_option("out", conv_out, "Output file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*solve) return cmd_solve(sa);

    if (*gen) {
      gs.kind = kind == "ksat" ? GeneratorKind::KSat : GeneratorKind::QCol;
      FactorGraph g = generate(gs);
      if (gen_break) g = break_symmetry(g);
      if (gen_out) {
        save_instance(g, *gen_out);
      } else {
        const bool cnf = gen_format.empty() ? gs.kind == GeneratorKind::KSat : gen_format == "cnf";
        std::cout << (cnf ? write_dimacs_cnf(g) : write_csp_json(g));
      }
      return 0;
    }

    if (*bench) {
      ExperimentConfig cfg = load_config(config_path);
      if (threads) cfg.threads = *threads;
      const ExperimentResult r = run_experiment(cfg);
      write_text(bench_out, aggregate_csv(r.aggregate, !no_timing));
      if (runs_out) write_text(runs_out, runs_csv(r.runs, !no_timing));
      return 0;
    }

    if (*convert) {
      save_instance(load_instance(conv_in), conv_out);
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitUsage;
}
