#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "crashrepro/backend.hpp"
#include "crashrepro/crash_case.hpp"
#include "crashrepro/fitness.hpp"
#include "crashrepro/genome.hpp"
#include "crashrepro/operators.hpp"

namespace crashrepro {

inline constexpr int kRunLogSchema = 1;

struct SearchConfig {
  std::size_t initial_population = 50;
  std::size_t population_step = 25;
  std::size_t population_max = 300;
  OperatorConfig operators;
  std::size_t evaluation_budget = 50'000;
  std::optional<std::chrono::milliseconds> wall_clock_budget = std::chrono::minutes(30);
  std::uint64_t seed = 0;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

void validate_config(const SearchConfig& config);

// [initial, initial + step, ...] up to and including population_max.
std::vector<std::size_t> population_schedule(const SearchConfig& config);

// Evaluation budget of each schedule step: an even split, remainder to the last.
std::vector<std::size_t> budget_slices(const SearchConfig& config);

struct GenerationStats {
  std::size_t population_size = 0;
  std::size_t generation = 0;  // within the current population size; 0 = initial
  std::size_t evaluations = 0;  // cumulative at the end of the generation
  double best = kMaxFitness;
  double mean = kMaxFitness;

  bool operator==(const GenerationStats&) const = default;
};

struct RunRecord {
  std::string case_id;
  std::uint64_t seed = 0;
  bool reproduced = false;
  FitnessValue best_fitness;
  std::size_t evaluations_used = 0;
  std::vector<std::size_t> population_sizes_visited;
  std::optional<Genome> witness;
  std::vector<GenerationStats> generation_log;
  bool wall_clock_exhausted = false;

  bool operator==(const RunRecord&) const = default;
};

// Called after every generation; lets callers stream the run log.
using GenerationObserver = std::function<void(const GenerationStats&)>;

RunRecord run_search(const ExecutionBackend& backend, const CrashCase& crash, const SearchConfig& config,
                     const GenerationObserver& observer = {});

// Running minimum of the per-generation best totals.
std::vector<double> best_so_far(const std::vector<GenerationStats>& log);

// Line-delimited JSON run log: one record per generation, then the run record.
std::string generation_log_line(const GenerationStats& stats);
std::string run_record_line(const RunRecord& record, const Api& api);
std::string format_run_log(const RunRecord& record, const Api& api);
// Final line for a run that failed before producing a RunRecord.
std::string run_error_line(std::string_view case_id, std::uint64_t seed, std::string_view error);

// Summary read back from an archived run log.
struct RunSummary {
  std::string case_id;
  std::uint64_t seed = 0;
  bool reproduced = false;
  std::optional<std::string> error;
  double best_total = kMaxFitness;
  std::size_t evaluations_used = 0;
};

RunSummary read_run_log(std::string_view text);

}  // namespace crashrepro
