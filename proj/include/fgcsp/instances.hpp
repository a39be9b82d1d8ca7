#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

#include "fgcsp/factor_graph.hpp"

namespace fgcsp {

enum class GeneratorKind { KSat, QCol };

struct GeneratorSpec {
  GeneratorKind kind = GeneratorKind::KSat;
  std::size_t n = 0;
  std::size_t m = 0;
  std::size_t k = 3;  // clause width, SAT only
  std::size_t q = 3;  // colors, COL only
  std::uint64_t seed = 0;

  // M/N for SAT, 2M/N for coloring.
  double alpha() const;
};

// M chosen as round(alpha·N) for SAT and round(alpha·N/2) for coloring.
GeneratorSpec spec_for_alpha(GeneratorKind kind, std::size_t n, double alpha, std::size_t width,
                             std::uint64_t seed);

// M clauses over k distinct variables (scope sorted ascending), each forbidding
// one uniformly drawn row.
FactorGraph gen_random_ksat(const GeneratorSpec& spec);
// M disequality constraints over uniformly drawn distinct pairs; duplicate
// edges can occur.
FactorGraph gen_random_qcol(const GeneratorSpec& spec);
FactorGraph generate(const GeneratorSpec& spec);

// Pins the lowest-index free variable to its lowest allowed value.
FactorGraph break_symmetry(const FactorGraph& g);

class ParseError : public Error {
 public:
  // `where` is a line number ("line 4") or a JSON path ("$.constraints[2].scope").
  ParseError(std::string where, const std::string& reason);
  const std::string& where() const { return where_; }

 private:
  std::string where_;
};

class NotClauseShaped : public Error {
 public:
  using Error::Error;
};

// Clause over 1-based signed DIMACS literals; forbids the row where every
// literal is false. Literals must name distinct variables.
TabularConstraint make_clause(std::span<const int> literals);

FactorGraph parse_dimacs_cnf(std::string_view text, const BuildLimits& limits = {});
std::string write_dimacs_cnf(const FactorGraph& g);

// {"domains":[...], "restricted":[{"var":i,"allowed":[...]}],
//  "constraints":[{"scope":[...],"allowed":[bits...] or [[tuple]...]}]}
FactorGraph parse_csp_json(std::string_view text, const BuildLimits& limits = {});
std::string write_csp_json(const FactorGraph& g, bool as_tuples = true);

// Dispatch on extension: .cnf is DIMACS, anything else JSON.
FactorGraph load_instance(const std::filesystem::path& path, const BuildLimits& limits = {});
void save_instance(const FactorGraph& g, const std::filesystem::path& path);

}  // namespace fgcsp
