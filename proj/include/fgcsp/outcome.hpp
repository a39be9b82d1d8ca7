#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <variant>

#include "fgcsp/factor_graph.hpp"

namespace fgcsp {

struct Satisfied {
  Assignment assignment;
  std::size_t iterations = 0;  // sweeps used, failed attempts included
  std::size_t attempts = 1;
};

struct Contradiction {
  std::size_t attempt = 1;
  std::size_t sweep = 0;
  VarId variable = kNoVar;
};

struct Exhausted {
  std::size_t attempts = 0;
};

// Work counters accumulated over every attempt, failed ones included.
struct SolveStats {
  std::size_t iterations = 0;
  std::uint64_t message_updates = 0;
  std::size_t attempts = 0;

  SolveStats& operator+=(const SolveStats& o) {
    iterations += o.iterations;
    message_updates += o.message_updates;
    attempts += o.attempts;
    return *this;
  }
};

struct SolveOutcome {
  std::variant<Satisfied, Contradiction, Exhausted> result;
  SolveStats stats;

  bool satisfied() const { return std::holds_alternative<Satisfied>(result); }
  const Satisfied& solution() const { return std::get<Satisfied>(result); }
  std::string kind() const;
};

}  // namespace fgcsp
