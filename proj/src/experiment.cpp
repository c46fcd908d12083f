#include "crashrepro/experiment.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <set>
#include <thread>
#include <tuple>

#include "crashrepro/io.hpp"
#include "crashrepro/script_backend.hpp"

namespace crashrepro {

double CaseCoverage::percentage_exact() const {
  if (run_count == 0) return 0.0;
  return 100.0 * static_cast<double>(success_count) / static_cast<double>(run_count);
}

int CaseCoverage::percentage_rounded() const {
  if (run_count == 0) return 0;
  // round half up, in integers
  int p = static_cast<int>((200 * success_count + run_count) / (2 * run_count));
  if (success_count < run_count) p = std::min(p, 99);
  if (success_count > 0) p = std::max(p, 1);
  return p;
}

std::size_t CoverageReport::covered_cases() const {
  return static_cast<std::size_t>(std::count_if(cases.begin(), cases.end(), [](const CaseCoverage& c) { return c.covered(); }));
}

namespace {

std::string safe_path_component(const std::string& id) {
  std::string out = id;
  for (char& c : out) {
    if (c == '/' || c == '\\' || c == ':' || c == ' ') c = '_';
  }
  return out.empty() ? "_" : out;
}

RunOutcome run_one(const SuiteEntry& entry, std::uint64_t seed, const SearchConfig& base, const ExperimentOptions& options) {
  RunOutcome outcome{entry.crash.id, seed, std::nullopt, {}};
  SearchConfig config = base;
  config.seed = seed;
  std::string log;
  try {
    outcome.record = run_search(*entry.backend, entry.crash, config);
    log = format_run_log(*outcome.record, entry.backend->api());
  } catch (const UnparsableTraceback& e) {
    outcome.record.reset();
    outcome.error = std::string(e.what()) + "\n" + e.raw();
    log = run_error_line(entry.crash.id, seed, outcome.error) + "\n";
  } catch (const std::exception& e) {
    outcome.record.reset();
    outcome.error = e.what();
    log = run_error_line(entry.crash.id, seed, outcome.error) + "\n";
  }
  if (options.output_dir) {
    write_file_atomic(*options.output_dir / "runs" / safe_path_component(entry.crash.id) / (std::to_string(seed) + ".runlog"), log);
  }
  return outcome;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

ExperimentResult run_experiment(const std::vector<SuiteEntry>& suite, std::size_t repetitions, std::uint64_t base_seed,
                                const SearchConfig& config, const ExperimentOptions& options) {
  if (repetitions < 1) throw ConfigError("repetitions must be at least 1");
  validate_config(config);
  std::set<std::string> ids;
  for (const auto& entry : suite) {
    if (!ids.insert(entry.crash.id).second) throw ConfigError("duplicate case id " + entry.crash.id);
  }

  const std::size_t total = suite.size() * repetitions;
  std::vector<RunOutcome> runs(total);
  std::atomic<std::size_t> next{0};
  std::mutex failure_mutex;
  std::exception_ptr failure;
  auto worker = [&] {
    try {
      for (std::size_t job = next++; job < total; job = next++) {
        const std::size_t run_index = job % repetitions;
        runs[job] = run_one(suite[job / repetitions], base_seed + run_index, config, options);
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next = total;
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(options.workers, 1, std::max<std::size_t>(total, 1));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  std::sort(runs.begin(), runs.end(), [](const RunOutcome& a, const RunOutcome& b) {
    return std::tie(a.case_id, a.seed) < std::tie(b.case_id, b.seed);
  });
  ExperimentResult result;
  result.report = aggregate(runs);
  result.runs = std::move(runs);
  return result;
}

CoverageReport aggregate(const std::vector<RunOutcome>& runs) {
  std::vector<const RunOutcome*> sorted;
  for (const auto& r : runs) sorted.push_back(&r);
  std::stable_sort(sorted.begin(), sorted.end(), [](const RunOutcome* a, const RunOutcome* b) {
    return std::tie(a->case_id, a->seed) < std::tie(b->case_id, b->seed);
  });
  CoverageReport report;
  for (const RunOutcome* r : sorted) {
    if (report.cases.empty() || report.cases.back().case_id != r->case_id) report.cases.push_back({r->case_id});
    CaseCoverage& c = report.cases.back();
    ++c.run_count;
    if (!r->record) {
      ++c.error_count;
    } else if (r->record->reproduced) {
      ++c.success_count;
    } else {
      ++c.failure_count;
    }
  }
  return report;
}

std::string result_cell(const CaseCoverage& coverage) {
  if (!coverage.covered()) return "N";
  if (coverage.success_count == coverage.run_count) return "Y";
  return fmt::format("Y ({}%)", coverage.percentage_rounded());
}

std::string render_report(const CoverageReport& report, ReportFormat format) {
  std::string out;
  if (format == ReportFormat::csv) {
    out = "case_id,runs,successes,failures,errors,covered,percentage_exact\n";
    for (const auto& c : report.cases) {
      out += fmt::format("{},{},{},{},{},{},{:.6f}\n", csv_field(c.case_id), c.run_count, c.success_count, c.failure_count,
                         c.error_count, c.covered() ? "Y" : "N", c.percentage_exact());
    }
    return out;
  }

  struct Row {
    std::string project, bug, result;
  };
  std::vector<Row> rows;
  for (const auto& c : report.cases) {
    const std::size_t dash = c.case_id.rfind('-');
    Row row;
    if (dash == std::string::npos || dash == 0 || dash + 1 == c.case_id.size()) {
      row = {c.case_id, "-", result_cell(c)};
    } else {
      row = {c.case_id.substr(0, dash), c.case_id.substr(dash + 1), result_cell(c)};
    }
    rows.push_back(std::move(row));
  }
  std::size_t w1 = std::string_view("Project").size();
  std::size_t w2 = std::string_view("Bug ID").size();
  for (const auto& r : rows) {
    w1 = std::max(w1, r.project.size());
    w2 = std::max(w2, r.bug.size());
  }
  out = fmt::format("{:<{}}  {:<{}}  {}\n", "Project", w1, "Bug ID", w2, "Result");
  for (const auto& r : rows) out += fmt::format("{:<{}}  {:<{}}  {}\n", r.project, w1, r.bug, w2, r.result);
  if (!rows.empty()) {
    out += fmt::format("\nCovered {} of {} crashes\n", report.covered_cases(), report.cases.size());
  }
  return out;
}

}  // namespace crashrepro
