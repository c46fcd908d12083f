#include "crashrepro/fitness.hpp"

#include <fmt/format.h>

namespace crashrepro {

FitnessValue FitnessValue::from_components(double d_line, double d_exception, double d_trace) {
  return {d_line, d_exception, d_trace, kLineWeight * d_line + kExceptionWeight * d_exception + kTraceWeight * d_trace};
}

ApproachData approach(const CrashCase& crash, const ExecutionOutcome& outcome) {
  if (const LineProbe* probe = outcome.find_probe(crash.target_routine, crash.target_line)) {
    if (probe->executed) return {0, 0.0};
    if (probe->reached) return {0, probe->best_distance};
  }
  const bool entered = crash.target_routine < outcome.entered.size() && outcome.entered[crash.target_routine];
  return {entered ? 1 : 2, outcome.escape_distance};
}

double line_distance(const ApproachData& data) {
  return normalize(static_cast<double>(data.approach_level) + normalize(data.branch_distance));
}

FitnessValue evaluate(const CrashCase& crash, const ExecutionOutcome& outcome) {
  const double d_line = line_distance(approach(crash, outcome));
  if (d_line > 0.0) return FitnessValue::from_components(d_line, 1.0, 1.0);
  const bool same_exception = outcome.kind == OutcomeKind::crashed && outcome.trace &&
                              outcome.trace->exception_type == crash.trace.exception_type;
  if (!same_exception) return FitnessValue::from_components(0.0, 1.0, 1.0);
  return FitnessValue::from_components(0.0, 0.0, trace_distance(crash.trace, crash.target_frame_level, *outcome.trace));
}

std::string format_fitness(double value) { return fmt::format("{:.6f}", value); }

}  // namespace crashrepro
