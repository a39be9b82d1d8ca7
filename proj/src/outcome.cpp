#include "fgcsp/outcome.hpp"

namespace fgcsp {

std::string SolveOutcome::kind() const {
  switch (result.index()) {
    case 0: return "satisfied";
    case 1: return "contradiction";
    default: return "exhausted";
  }
}

}  // namespace fgcsp
