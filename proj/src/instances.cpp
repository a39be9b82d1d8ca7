#include "fgcsp/instances.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "fgcsp/rng.hpp"

namespace fgcsp {

using nlohmann::json;

double GeneratorSpec::alpha() const {
  if (n == 0) return 0.0;
  const double ratio = static_cast<double>(m) / static_cast<double>(n);
  return kind == GeneratorKind::KSat ? ratio : 2.0 * ratio;
}

GeneratorSpec spec_for_alpha(GeneratorKind kind, std::size_t n, double alpha, std::size_t width,
                             std::uint64_t seed) {
  GeneratorSpec s;
  s.kind = kind;
  s.n = n;
  s.seed = seed;
  if (kind == GeneratorKind::KSat) {
    s.k = width;
    s.m = static_cast<std::size_t>(std::llround(alpha * static_cast<double>(n)));
  } else {
    s.q = width;
    s.m = static_cast<std::size_t>(std::llround(alpha * static_cast<double>(n) / 2.0));
  }
  return s;
}

FactorGraph gen_random_ksat(const GeneratorSpec& spec) {
  if (spec.k < 2) throw Error("clause width must be at least 2");
  if (spec.n < spec.k) throw Error("need at least k variables");
  if (spec.k > 20) throw Error("clause width too large for a dense table");
  Rng rng(spec.seed);
  std::vector<Domain> domains(spec.n, Domain(2));
  std::vector<TabularConstraint> constraints;
  constraints.reserve(spec.m);
  const std::size_t rows = std::size_t{1} << spec.k;
  for (std::size_t c = 0; c < spec.m; ++c) {
    TabularConstraint t;
    while (t.scope.size() < spec.k) {
      const auto v = static_cast<VarId>(rng.below(spec.n));
      if (std::find(t.scope.begin(), t.scope.end(), v) == t.scope.end()) t.scope.push_back(v);
    }
    std::sort(t.scope.begin(), t.scope.end());
    t.table.assign(rows, 1);
    t.table[rng.below(rows)] = 0;
    constraints.push_back(std::move(t));
  }
  return FactorGraph::build(std::move(domains), std::move(constraints));
}

FactorGraph gen_random_qcol(const GeneratorSpec& spec) {
  if (spec.q < 2) throw Error("need at least 2 colors");
  if (spec.n < 2) throw Error("need at least 2 vertices");
  Rng rng(spec.seed);
  std::vector<Domain> domains(spec.n, Domain(spec.q));
  std::vector<std::uint8_t> table(spec.q * spec.q, 1);
  for (std::size_t c = 0; c < spec.q; ++c) table[c * spec.q + c] = 0;
  std::vector<TabularConstraint> constraints;
  constraints.reserve(spec.m);
  for (std::size_t c = 0; c < spec.m; ++c) {
    const auto i = static_cast<VarId>(rng.below(spec.n));
    auto j = static_cast<VarId>(rng.below(spec.n - 1));
    if (j >= i) ++j;
    constraints.push_back(TabularConstraint{{i, j}, table});
  }
  return FactorGraph::build(std::move(domains), std::move(constraints));
}

FactorGraph generate(const GeneratorSpec& spec) {
  return spec.kind == GeneratorKind::KSat ? gen_random_ksat(spec) : gen_random_qcol(spec);
}

FactorGraph break_symmetry(const FactorGraph& g) {
  if (g.num_variables() == 0) throw Error("graph has no variables");
  for (std::size_t i = 0; i < g.num_variables(); ++i) {
    if (g.domain(i).allowed_count() > 1) {
      Fix fx{static_cast<VarId>(i), g.domain(i).first_allowed()};
      return condition(g, std::span<const Fix>(&fx, 1));
    }
  }
  return g;
}

ParseError::ParseError(std::string where, const std::string& reason)
    : Error(where + ": " + reason), where_(std::move(where)) {}

TabularConstraint make_clause(std::span<const int> literals) {
  TabularConstraint c;
  std::size_t forbidden = 0;
  for (int lit : literals) {
    if (lit == 0) throw InvalidScope("literal 0 is not a variable");
    const auto v = static_cast<VarId>(std::abs(lit) - 1);
    if (std::find(c.scope.begin(), c.scope.end(), v) != c.scope.end())
      throw InvalidScope("clause repeats variable " + std::to_string(v + 1));
    c.scope.push_back(v);
    // The literal is false at False for +v and at True for -v.
    forbidden = forbidden * 2 + (lit > 0 ? kFalse : kTrue);
  }
  c.table.assign(std::size_t{1} << literals.size(), 1);
  c.table[forbidden] = 0;
  return c;
}

FactorGraph parse_dimacs_cnf(std::string_view text, const BuildLimits& limits) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  long long n = -1, m = -1;
  std::vector<TabularConstraint> clauses;
  std::vector<int> pending;
  std::size_t pending_line = 0;
  long long seen = 0;
  auto where = [&](std::size_t l) { return "line " + std::to_string(l); };

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok)) continue;
    if (tok == "c") continue;
    if (tok == "%") break;
    if (tok == "p") {
      if (n >= 0) throw ParseError(where(lineno), "duplicate problem line");
      std::string fmt;
      if (!(ls >> fmt >> n >> m) || fmt != "cnf" || n < 0 || m < 0)
        throw ParseError(where(lineno), "expected 'p cnf <vars> <clauses>'");
      std::string extra;
      if (ls >> extra) throw ParseError(where(lineno), "trailing text after problem line");
      continue;
    }
    if (n < 0) throw ParseError(where(lineno), "clause before the problem line");
    ls.clear();
    ls.str(line);
    while (ls >> tok) {
      char* end = nullptr;
      const long long lit = std::strtoll(tok.c_str(), &end, 10);
      if (end == tok.c_str() || *end != '\0') throw ParseError(where(lineno), "bad literal '" + tok + "'");
      if (lit == 0) {
        if (pending.empty()) throw ParseError(where(lineno), "empty clause");
        // Repeated literals collapse; a clause with x and -x is always true.
        std::vector<int> lits;
        bool tautology = false;
        for (int l : pending) {
          if (std::find(lits.begin(), lits.end(), -l) != lits.end()) tautology = true;
          if (std::find(lits.begin(), lits.end(), l) == lits.end()) lits.push_back(l);
        }
        if (lits.size() > 24) throw ParseError(where(pending_line), "clause too wide for a dense table");
        if (!tautology) clauses.push_back(make_clause(lits));
        if (++seen > m) throw ParseError(where(lineno), "more clauses than declared");
        pending.clear();
        continue;
      }
      if (std::llabs(lit) > n)
        throw ParseError(where(lineno), "literal " + tok + " exceeds the declared " + std::to_string(n) + " variables");
      if (pending.empty()) pending_line = lineno;
      pending.push_back(static_cast<int>(lit));
    }
  }
  if (n < 0) throw ParseError(where(lineno), "missing problem line");
  if (!pending.empty()) throw ParseError(where(pending_line), "clause not terminated by 0");

  std::vector<Domain> domains(static_cast<std::size_t>(n), Domain(2));
  try {
    return FactorGraph::build(std::move(domains), std::move(clauses), limits);
  } catch (const Error& e) {
    throw ParseError(where(lineno), e.what());
  }
}

std::string write_dimacs_cnf(const FactorGraph& g) {
  for (std::size_t i = 0; i < g.num_variables(); ++i)
    if (g.domain(i).size() != 2 || g.domain(i).is_restricted())
      throw NotClauseShaped("variable " + std::to_string(i) + " is not an unrestricted Boolean");
  std::ostringstream out;
  out << "p cnf " << g.num_variables() << ' ' << g.num_factors() << '\n';
  for (std::size_t f = 0; f < g.num_factors(); ++f) {
    const auto& c = g.constraint(f);
    if (std::count(c.table.begin(), c.table.end(), 0) != 1)
      throw NotClauseShaped("constraint " + std::to_string(f) + " does not forbid exactly one row");
    const auto row = static_cast<std::size_t>(std::find(c.table.begin(), c.table.end(), 0) - c.table.begin());
    const std::size_t arity = c.scope.size();
    for (std::size_t k = 0; k < arity; ++k) {
      const std::size_t bit = (row >> (arity - 1 - k)) & 1;
      const long long v = static_cast<long long>(c.scope[k]) + 1;
      out << (bit == kFalse ? v : -v) << ' ';
    }
    out << "0\n";
  }
  return out.str();
}

namespace {

std::vector<std::uint8_t> table_from_json(const json& allowed, const std::vector<std::size_t>& sizes,
                                          std::size_t table_size, const std::string& path) {
  if (!allowed.is_array()) throw ParseError(path, "expected an array");
  std::vector<std::uint8_t> table(table_size, 0);
  const bool tuples = allowed.empty() || allowed.front().is_array();
  if (!tuples) {
    if (allowed.size() != table_size)
      throw ParseError(path, "expected " + std::to_string(table_size) + " entries, got " +
                                 std::to_string(allowed.size()));
    for (std::size_t k = 0; k < allowed.size(); ++k) {
      const auto& e = allowed[k];
      if (!e.is_number_integer() || (e.get<long long>() != 0 && e.get<long long>() != 1))
        throw ParseError(path + "[" + std::to_string(k) + "]", "expected 0 or 1");
      table[k] = static_cast<std::uint8_t>(e.get<int>());
    }
    return table;
  }
  for (std::size_t k = 0; k < allowed.size(); ++k) {
    const auto& tup = allowed[k];
    const std::string tp = path + "[" + std::to_string(k) + "]";
    if (!tup.is_array() || tup.size() != sizes.size())
      throw ParseError(tp, "expected a tuple of length " + std::to_string(sizes.size()));
    std::size_t idx = 0;
    for (std::size_t j = 0; j < sizes.size(); ++j) {
      const auto& v = tup[j];
      if (!v.is_number_integer() || v.get<long long>() < 0 ||
          static_cast<std::size_t>(v.get<long long>()) >= sizes[j])
        throw ParseError(tp + "[" + std::to_string(j) + "]", "value outside the variable's domain");
      idx = idx * sizes[j] + v.get<std::size_t>();
    }
    table[idx] = 1;
  }
  return table;
}

}  // namespace

FactorGraph parse_csp_json(std::string_view text, const BuildLimits& limits) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("$", e.what());
  }
  if (!doc.is_object()) throw ParseError("$", "expected an object");
  if (!doc.contains("domains")) throw ParseError("$.domains", "missing");
  const auto& jd = doc["domains"];
  if (!jd.is_array()) throw ParseError("$.domains", "expected an array");
  std::vector<Domain> domains;
  for (std::size_t i = 0; i < jd.size(); ++i) {
    if (!jd[i].is_number_integer() || jd[i].get<long long>() < 1)
      throw ParseError("$.domains[" + std::to_string(i) + "]", "expected a positive integer");
    domains.emplace_back(jd[i].get<std::size_t>());
  }

  if (doc.contains("restricted")) {
    const auto& jr = doc["restricted"];
    if (!jr.is_array()) throw ParseError("$.restricted", "expected an array");
    for (std::size_t k = 0; k < jr.size(); ++k) {
      const std::string p = "$.restricted[" + std::to_string(k) + "]";
      const auto& r = jr[k];
      if (!r.is_object() || !r.contains("var") || !r.contains("allowed"))
        throw ParseError(p, "expected {\"var\":..,\"allowed\":[..]}");
      if (!r["var"].is_number_integer() || r["var"].get<long long>() < 0 ||
          r["var"].get<std::size_t>() >= domains.size())
        throw ParseError(p + ".var", "no such variable");
      const auto var = r["var"].get<std::size_t>();
      std::vector<Value> vals;
      if (!r["allowed"].is_array()) throw ParseError(p + ".allowed", "expected an array");
      for (std::size_t j = 0; j < r["allowed"].size(); ++j) {
        const auto& v = r["allowed"][j];
        if (!v.is_number_integer() || v.get<long long>() < 0 ||
            v.get<std::size_t>() >= domains[var].size())
          throw ParseError(p + ".allowed[" + std::to_string(j) + "]", "value outside the domain");
        vals.push_back(v.get<Value>());
      }
      domains[var] = Domain::restricted(domains[var].size(), vals);
    }
  }

  std::vector<TabularConstraint> constraints;
  if (doc.contains("constraints")) {
    const auto& jc = doc["constraints"];
    if (!jc.is_array()) throw ParseError("$.constraints", "expected an array");
    for (std::size_t f = 0; f < jc.size(); ++f) {
      const std::string p = "$.constraints[" + std::to_string(f) + "]";
      const auto& c = jc[f];
      if (!c.is_object()) throw ParseError(p, "expected an object");
      if (!c.contains("scope") || !c["scope"].is_array()) throw ParseError(p + ".scope", "expected an array");
      if (!c.contains("allowed")) throw ParseError(p + ".allowed", "missing");
      TabularConstraint t;
      std::vector<std::size_t> sizes;
      std::size_t table_size = 1;
      for (std::size_t k = 0; k < c["scope"].size(); ++k) {
        const auto& v = c["scope"][k];
        const std::string vp = p + ".scope[" + std::to_string(k) + "]";
        if (!v.is_number_integer() || v.get<long long>() < 0 || v.get<std::size_t>() >= domains.size())
          throw ParseError(vp, "references a missing variable");
        const auto var = v.get<VarId>();
        if (std::find(t.scope.begin(), t.scope.end(), var) != t.scope.end())
          throw ParseError(vp, "repeats a variable");
        t.scope.push_back(var);
        sizes.push_back(domains[var].size());
        table_size *= sizes.back();
        if (table_size > limits.max_table_entries) throw ParseError(p, "table exceeds the size limit");
      }
      if (t.scope.empty()) throw ParseError(p + ".scope", "empty scope");
      t.table = table_from_json(c["allowed"], sizes, table_size, p + ".allowed");
      constraints.push_back(std::move(t));
    }
  }
  try {
    return FactorGraph::build(std::move(domains), std::move(constraints), limits);
  } catch (const Error& e) {
    throw ParseError("$", e.what());
  }
}

std::string write_csp_json(const FactorGraph& g, bool as_tuples) {
  json doc;
  doc["domains"] = json::array();
  json restricted = json::array();
  for (std::size_t i = 0; i < g.num_variables(); ++i) {
    doc["domains"].push_back(g.domain(i).size());
    if (g.domain(i).is_restricted())
      restricted.push_back(json{{"var", i}, {"allowed", g.domain(i).allowed_values()}});
  }
  if (!restricted.empty()) doc["restricted"] = restricted;
  doc["constraints"] = json::array();
  for (std::size_t f = 0; f < g.num_factors(); ++f) {
    const auto& c = g.constraint(f);
    json jc;
    jc["scope"] = c.scope;
    if (!as_tuples) {
      jc["allowed"] = c.table;
    } else {
      json tuples = json::array();
      auto strides = g.strides(static_cast<FactorId>(f));
      for (std::size_t idx = 0; idx < c.table.size(); ++idx) {
        if (!c.table[idx]) continue;
        json tup = json::array();
        for (std::size_t k = 0; k < c.scope.size(); ++k)
          tup.push_back((idx / strides[k]) % g.domain(c.scope[k]).size());
        tuples.push_back(std::move(tup));
      }
      jc["allowed"] = std::move(tuples);
    }
    doc["constraints"].push_back(std::move(jc));
  }
  return doc.dump() + "\n";
}

FactorGraph load_instance(const std::filesystem::path& path, const BuildLimits& limits) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (path.extension() == ".cnf") return parse_dimacs_cnf(buf.str(), limits);
  return parse_csp_json(buf.str(), limits);
}

void save_instance(const FactorGraph& g, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << (path.extension() == ".cnf" ? write_dimacs_cnf(g) : write_csp_json(g));
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace fgcsp
