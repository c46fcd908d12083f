#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "crashrepro/trace.hpp"

namespace crashrepro {

enum class OutcomeKind { crashed, completed, budget_exceeded };

std::string_view outcome_kind_name(OutcomeKind kind);

struct CoveredLine {
  std::size_t routine = 0;
  int line = 0;

  auto operator<=>(const CoveredLine&) const = default;
};

// Per-statement observation. `reached` means the statement's guard was
// evaluated; `executed` means the guard held and the statement took effect.
// `best_distance` is the smallest guard distance seen while the guard was
// false (infinity if never false).
struct LineProbe {
  std::size_t routine = 0;
  int line = 0;
  bool reached = false;
  bool executed = false;
  double best_distance = 0.0;

  bool operator==(const LineProbe&) const = default;
};

struct ExecutionOutcome {
  OutcomeKind kind = OutcomeKind::completed;
  std::optional<StackTrace> trace;  // present iff crashed
  std::size_t steps_executed = 0;
  std::vector<LineProbe> probes;  // sorted by (routine, line)
  std::vector<bool> entered;      // indexed by routine
  // Distance for flipping the guard that ended execution early (the throw
  // that fired); 1 when no such guard exists.
  double escape_distance = 1.0;
  std::string diagnostic;

  std::vector<CoveredLine> covered_lines() const;
  const LineProbe* find_probe(std::size_t routine, int line) const;

  bool operator==(const ExecutionOutcome&) const = default;
};

}  // namespace crashrepro
