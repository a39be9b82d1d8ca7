#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fgcsp/factor_graph.hpp"
#include "fgcsp/instances.hpp"
#include "fgcsp/outcome.hpp"

namespace fgcsp {

class ConfigError : public Error {
 public:
  using Error::Error;
};

enum class SolverKind { BPDec, PerturbedBP, SPDecS, SPDecC, PerturbedSP, Gibbs };

// "bp-dec", "perturbed-bp", "sp-dec-s", "sp-dec-c", "perturbed-sp", "gibbs".
std::string solver_name(SolverKind s);
SolverKind parse_solver(const std::string& name);  // throws ConfigError

// rcsp: T = 1000 growing ×4 for at most 3 retries, ρ = 1% fixed, only the first
// decimation round's iteration cap grows.
// benchmark: Perturbed BP from T = 10 doubling for 10 retries; BP-dec with
// 10,240 iterations per round and ρ from 100% halving per retry.
enum class Protocol { RCSP, Benchmark };

struct SolverParams {
  std::size_t T = 1000;  // sweeps for perturbed/Gibbs, BP/SP cap per decimation round
  double growth = 4.0;
  std::size_t max_attempts = 4;
  double epsilon = 1e-3;
  double rho = 0.01;
  double rho_divisor = 1.0;
  double m = 0.0;
  double paramagnetic_threshold = 0.01;
  std::size_t domain_cap = 5;
  bool strict_convergence = false;
};

SolverParams protocol_defaults(Protocol p, SolverKind s);
// Throws ConfigError for out-of-range values or an invalid solver pairing.
void validate_params(const SolverParams& p, SolverKind s);

struct SolveReport {
  SolveOutcome outcome;
  bool verified = false;
  // SP-dec only: variables fixed when BP-dec took over (0 if it never did).
  std::size_t fixed_before_handoff = 0;
  bool handed_off = false;
};

// Mandatory gate before any Satisfied result is reported.
bool verify(const FactorGraph& g, const Assignment& a);

// Runs one solver with its retry schedule. A Satisfied outcome that fails
// verification is turned into a Contradiction.
SolveReport solve_instance(const FactorGraph& g, SolverKind solver, const SolverParams& params, std::uint64_t seed);

struct ExperimentConfig {
  std::optional<GeneratorKind> generator;
  std::size_t n = 0;
  std::size_t k = 3;
  std::size_t q = 3;
  std::vector<double> alphas;
  std::optional<std::filesystem::path> input;

  std::vector<SolverKind> solvers;
  Protocol protocol = Protocol::RCSP;
  // Explicit overrides on top of the protocol defaults, as given in the config.
  std::vector<std::pair<std::string, double>> overrides;
  std::vector<std::uint64_t> seeds;
  // Runs slower than this count as failures; 0 disables the check.
  double time_budget_s = 0.0;
  bool break_symmetry = true;  // coloring only
  std::size_t threads = 1;

  SolverParams params_for(SolverKind s) const;
};

// Parses and validates the JSON form. Relative input paths resolve against
// base_dir.
ExperimentConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

struct RunRecord {
  std::string instance;
  std::uint64_t seed = 0;
  SolverKind solver = SolverKind::BPDec;
  double alpha = 0.0;
  std::size_t n = 0;
  std::string outcome;  // satisfied / contradiction / exhausted / timeout
  std::size_t iterations = 0;
  std::uint64_t message_updates = 0;
  std::size_t attempts = 0;
  double time_s = 0.0;
  bool strict_convergence = false;
  std::size_t fixed_before_handoff = 0;

  bool satisfied() const { return outcome == "satisfied"; }
};

struct AggregateRow {
  SolverKind solver = SolverKind::BPDec;
  double alpha = 0.0;
  std::size_t n = 0;
  std::size_t seeds = 0;
  double success_rate = 0.0;
  // Means over successful runs only; empty when nothing succeeded.
  std::optional<double> avg_iters;
  std::optional<double> avg_time_s;
};

struct ExperimentResult {
  std::vector<RunRecord> runs;  // ordered by solver, α, seed
  std::vector<AggregateRow> aggregate;
};

ExperimentResult run_experiment(const ExperimentConfig& config);

std::vector<AggregateRow> aggregate(const std::vector<RunRecord>& runs);

// With timing = false every time column is written as 0.
std::string aggregate_csv(const std::vector<AggregateRow>& rows, bool timing = true);
std::string runs_csv(const std::vector<RunRecord>& runs, bool timing = true);

}  // namespace fgcsp
