#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "fgcsp/harness.hpp"
#include "fgcsp/perturbed_bp.hpp"
#include "support/fixtures.hpp"

using namespace fgcsp;

namespace {

std::filesystem::path data_dir() { return std::filesystem::path(FGCSP_TEST_DATA); }

const char* kSmallSweep = R"({
  "generator": {"kind": "ksat", "n": 60, "k": 3},
  "alphas": [3.0, 3.5],
  "solver": "perturbed-bp",
  "seeds": {"from": 1, "count": 4}
})";

}  // namespace

TEST(Harness, SolverNamesRoundTrip) {
  for (auto s : {SolverKind::BPDec, SolverKind::PerturbedBP, SolverKind::SPDecS, SolverKind::SPDecC,
                 SolverKind::PerturbedSP, SolverKind::Gibbs})
    EXPECT_EQ(parse_solver(solver_name(s)), s);
  EXPECT_THROW(parse_solver("walksat"), ConfigError);
}

TEST(Harness, ProtocolDefaults) {
  auto r = protocol_defaults(Protocol::RCSP, SolverKind::PerturbedBP);
  EXPECT_EQ(r.T, 1000u);
  EXPECT_EQ(r.growth, 4.0);
  EXPECT_EQ(r.max_attempts, 4u);
  EXPECT_EQ(r.rho, 0.01);
  EXPECT_EQ(r.epsilon, 1e-3);
  EXPECT_EQ(attempt_T({r.T, r.growth, r.max_attempts, 0}, r.max_attempts), 64000u);

  auto b = protocol_defaults(Protocol::Benchmark, SolverKind::PerturbedBP);
  EXPECT_EQ(attempt_T({b.T, b.growth, b.max_attempts, 0}, b.max_attempts), 10240u);
  auto d = protocol_defaults(Protocol::Benchmark, SolverKind::BPDec);
  EXPECT_EQ(d.T, 10240u);
  EXPECT_EQ(d.rho, 1.0);
  double rho = d.rho;
  for (std::size_t a = 1; a < d.max_attempts; ++a) rho /= d.rho_divisor;
  EXPECT_NEAR(rho, 1.0 / 1024.0, 1e-15);
}

TEST(Harness, ConfigValidation) {
  EXPECT_NO_THROW(parse_config(kSmallSweep));
  EXPECT_THROW(parse_config("{"), ConfigError);
  EXPECT_THROW(parse_config(R"({"generator":{"kind":"ksat","n":10},"alphas":[3],"solver":"bp-dec","seeds":[]})"),
               ConfigError);
  EXPECT_THROW(parse_config(R"({"generator":{"kind":"ksat","n":10},"alphas":[3],"solver":"bp-dec","seed":[1]})"),
               ConfigError);
  EXPECT_THROW(parse_config(R"({"generator":{"kind":"ksat","n":10},"alphas":[3],"solver":"x","seeds":[1]})"),
               ConfigError);
  EXPECT_THROW(parse_config(R"({"input":"a.cnf","generator":{"kind":"ksat","n":10},"solver":"gibbs","seeds":[1]})"),
               ConfigError);
  EXPECT_THROW(parse_config(R"({"generator":{"kind":"qcol","n":10,"q":6},"alphas":[3],"solver":"sp-dec-c",
                               "seeds":[1]})"),
               ConfigError);
  EXPECT_NO_THROW(parse_config(R"({"generator":{"kind":"qcol","n":10,"q":6},"alphas":[3],"solver":"sp-dec-c",
                                  "params":{"domain_cap":6},"seeds":[1]})"));
  EXPECT_THROW(parse_config(R"({"generator":{"kind":"ksat","n":10},"alphas":[3],"solver":"bp-dec",
                               "params":{"rho":0},"seeds":[1]})"),
               ConfigError);
  EXPECT_THROW(parse_config(R"({"generator":{"kind":"ksat","n":10},"alphas":[3],"solver":"bp-dec",
                               "params":{"iters":5},"seeds":[1]})"),
               ConfigError);
}

TEST(Harness, OverridesApplyOnTopOfProtocol) {
  auto c = parse_config(R"({"generator":{"kind":"ksat","n":10},"alphas":[3],"solver":"bp-dec",
                            "protocol":"benchmark","params":{"T":50,"strict_convergence":true},"seeds":[1]})");
  auto p = c.params_for(SolverKind::BPDec);
  EXPECT_EQ(p.T, 50u);
  EXPECT_TRUE(p.strict_convergence);
  EXPECT_EQ(p.rho, 1.0);
}

TEST(Harness, VerifyMatchesSolutionOracle) {
  auto g = fixture::three_var_formula();
  const auto sols = enumerate_solutions(g);
  for (Value a = 0; a < 2; ++a)
    for (Value b = 0; b < 2; ++b)
      for (Value c = 0; c < 2; ++c) {
        Assignment x(3);
        x[0] = a;
        x[1] = b;
        x[2] = c;
        EXPECT_EQ(verify(g, x), std::find(sols.begin(), sols.end(), x) != sols.end());
      }
  EXPECT_FALSE(verify(g, Assignment(3)));
  EXPECT_TRUE(verify(FactorGraph::build({}, {}), Assignment(0)));
}

TEST(Harness, SweepShape) {
  auto r = run_experiment(parse_config(kSmallSweep));
  ASSERT_EQ(r.runs.size(), 8u);
  ASSERT_EQ(r.aggregate.size(), 2u);
  EXPECT_EQ(r.aggregate[0].alpha, 3.0);
  EXPECT_EQ(r.aggregate[1].alpha, 3.5);
  EXPECT_EQ(r.aggregate[0].seeds, 4u);
  const std::string csv = aggregate_csv(r.aggregate);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "solver,alpha,n,seeds,success_rate,avg_iters,avg_time_s");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  for (const auto& run : r.runs) EXPECT_EQ(run.n, 60u);
}

TEST(Harness, Deterministic) {
  auto c = parse_config(kSmallSweep);
  auto a = run_experiment(c);
  auto b = run_experiment(c);
  c.threads = 3;
  auto t = run_experiment(c);
  EXPECT_EQ(aggregate_csv(a.aggregate, false), aggregate_csv(b.aggregate, false));
  EXPECT_EQ(runs_csv(a.runs, false), runs_csv(b.runs, false));
  EXPECT_EQ(runs_csv(a.runs, false), runs_csv(t.runs, false));
}

TEST(Harness, BPDecOnSmallFormulaFromFile) {
  const std::string cfg = R"({"input":"three_var.cnf","solver":"bp-dec","seeds":[1,2,3]})";
  auto r = run_experiment(parse_config(cfg, data_dir()));
  ASSERT_EQ(r.aggregate.size(), 1u);
  EXPECT_EQ(r.aggregate[0].success_rate, 1.0);
  for (const auto& run : r.runs) EXPECT_EQ(run.outcome, "satisfied");
}

TEST(Harness, MissingInputIsAConfigError) {
  auto c = parse_config(R"({"input":"missing.cnf","solver":"bp-dec","seeds":[1]})", data_dir());
  EXPECT_THROW(run_experiment(c), ConfigError);
}

TEST(Harness, AveragesCoverSuccessesOnly) {
  std::vector<RunRecord> runs(3);
  for (auto& r : runs) {
    r.solver = SolverKind::PerturbedBP;
    r.alpha = 4.0;
    r.n = 10;
  }
  runs[0].outcome = "satisfied";
  runs[0].iterations = 100;
  runs[0].time_s = 1.0;
  runs[1].outcome = "exhausted";
  runs[1].iterations = 100000;
  runs[1].time_s = 50.0;
  runs[2].outcome = "satisfied";
  runs[2].iterations = 300;
  runs[2].time_s = 3.0;
  auto rows = aggregate(runs);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_NEAR(rows[0].success_rate, 2.0 / 3.0, 1e-15);
  EXPECT_EQ(*rows[0].avg_iters, 200.0);
  EXPECT_EQ(*rows[0].avg_time_s, 2.0);
  EXPECT_EQ(aggregate_csv(rows, false), "solver,alpha,n,seeds,success_rate,avg_iters,avg_time_s\n"
                                        "perturbed-bp,4,10,3,0.6667,200.00,0\n");
  runs[0].outcome = runs[2].outcome = "contradiction";
  EXPECT_EQ(aggregate_csv(aggregate(runs)), "solver,alpha,n,seeds,success_rate,avg_iters,avg_time_s\n"
                                            "perturbed-bp,4,10,3,0.0000,,\n");
}

TEST(Harness, TimeBudgetMarksSlowRuns) {
  auto c = parse_config(kSmallSweep);
  c.time_budget_s = 1e-12;
  for (const auto& run : run_experiment(c).runs) EXPECT_EQ(run.outcome, "timeout");
}

TEST(Harness, ColoringInstanceId) {
  auto c = parse_config(R"({"generator":{"kind":"qcol","n":30,"q":3},"alphas":[2.0],"solver":"bp-dec",
                            "seeds":[4]})");
  auto r = run_experiment(c);
  ASSERT_EQ(r.runs.size(), 1u);
  EXPECT_EQ(r.runs[0].instance, "3col-n30-a2-s4");
}
