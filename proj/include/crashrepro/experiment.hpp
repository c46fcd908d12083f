#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "crashrepro/backend.hpp"
#include "crashrepro/crash_case.hpp"
#include "crashrepro/engine.hpp"

namespace crashrepro {

struct SuiteEntry {
  std::shared_ptr<const ExecutionBackend> backend;
  CrashCase crash;
};

struct CaseCoverage {
  std::string case_id;
  std::size_t run_count = 0;
  std::size_t success_count = 0;
  std::size_t failure_count = 0;
  std::size_t error_count = 0;

  bool covered() const { return success_count >= 1; }
  double percentage_exact() const;
  // Nearest integer percent; a case with any unsuccessful run never shows 100.
  int percentage_rounded() const;

  bool operator==(const CaseCoverage&) const = default;
};

struct CoverageReport {
  std::vector<CaseCoverage> cases;

  std::size_t covered_cases() const;
  bool operator==(const CoverageReport&) const = default;
};

struct RunOutcome {
  std::string case_id;
  std::uint64_t seed = 0;
  std::optional<RunRecord> record;  // empty when the run raised an error
  std::string error;
};

struct ExperimentOptions {
  std::size_t workers = 1;
  // When set, every run log is written to <dir>/runs/<case>/<seed>.runlog
  // before aggregation.
  std::optional<std::filesystem::path> output_dir;
};

struct ExperimentResult {
  CoverageReport report;
  std::vector<RunOutcome> runs;  // sorted by (case id, seed)
};

// Run i of every case uses seed base_seed + i.
ExperimentResult run_experiment(const std::vector<SuiteEntry>& suite, std::size_t repetitions, std::uint64_t base_seed,
                                const SearchConfig& config, const ExperimentOptions& options = {});

CoverageReport aggregate(const std::vector<RunOutcome>& runs);

enum class ReportFormat { table_text, csv };

std::string render_report(const CoverageReport& report, ReportFormat format);

// "Y", "Y (78%)" or "N".
std::string result_cell(const CaseCoverage& coverage);

}  // namespace crashrepro
