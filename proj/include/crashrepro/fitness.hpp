#pragma once

#include <string>

#include "crashrepro/crash_case.hpp"
#include "crashrepro/outcome.hpp"

namespace crashrepro {

inline constexpr double kLineWeight = 3.0;
inline constexpr double kExceptionWeight = 2.0;
inline constexpr double kTraceWeight = 1.0;
inline constexpr double kMaxFitness = kLineWeight + kExceptionWeight + kTraceWeight;

// Piecewise crash-reproduction fitness. Components are gated: the exception
// check only counts once the target line executes, and the trace check only
// once the exception type matches; a gated component is pinned at 1.
struct FitnessValue {
  double d_line = 1.0;
  double d_exception = 1.0;
  double d_trace = 1.0;
  double total = kMaxFitness;

  static FitnessValue from_components(double d_line, double d_exception, double d_trace);
  static FitnessValue worst() { return {}; }

  bool operator==(const FitnessValue&) const = default;
};

struct ApproachData {
  int approach_level = 0;
  double branch_distance = 0.0;
};

// Where execution got relative to the case's target line:
//   0 + guard distance  the target statement was reached, its guard failed
//   1 + escape distance the target routine ran but stopped before the line
//   2 + escape distance the target routine never ran
ApproachData approach(const CrashCase& crash, const ExecutionOutcome& outcome);

// normalize(approach_level + normalize(branch_distance))
double line_distance(const ApproachData& data);

FitnessValue evaluate(const CrashCase& crash, const ExecutionOutcome& outcome);

// Strict: only an exact 0.0 total counts.
inline bool is_reproduced(const FitnessValue& f) { return f.total == 0.0; }

// Fixed-point text with six fractional digits, as used in run logs.
std::string format_fitness(double value);

}  // namespace crashrepro
