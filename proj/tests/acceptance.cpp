// One PASS/FAIL line per acceptance criterion. Exit status is nonzero if any fails.
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>

#include <fmt/format.h>

#include "crashrepro/backend.hpp"
#include "crashrepro/engine.hpp"
#include "crashrepro/experiment.hpp"
#include "crashrepro/fitness.hpp"
#include "crashrepro/io.hpp"
#include "crashrepro/operators.hpp"
#include "crashrepro/oracle.hpp"
#include "support.hpp"

using namespace crashrepro;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
  bool pass;
  std::string detail;
};

int failures = 0;

double elapsed(Clock::time_point start) { return std::chrono::duration<double>(Clock::now() - start).count(); }

void criterion(const std::string& name, const std::function<Verdict()>& body) {
  const auto start = Clock::now();
  Verdict v;
  try {
    v = body();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  std::printf("%s %s: %s [%.1fs]\n", v.pass ? "PASS" : "FAIL", name.c_str(), v.detail.c_str(), secs);
  std::fflush(stdout);
  if (!v.pass) ++failures;
}

struct LoadedCase {
  SuiteEntry entry;
  const Scenario* scenario;
  OracleVerdict oracle;
};

double corpus_load_secs = 0.0;

std::vector<LoadedCase>& corpus() {
  static std::vector<LoadedCase> cases = [] {
    const auto start = Clock::now();
    std::vector<LoadedCase> out;
    for (SuiteEntry& e : load_suite(testing::corpus_dir())) {
      const auto& backend = dynamic_cast<const ScenarioBackend&>(*e.backend);
      const Scenario* sc = &backend.scenario();
      OracleVerdict v = oracle_enumerate(*sc, e.crash, sc->case_info.oracle_max_calls);
      out.push_back({std::move(e), sc, std::move(v)});
    }
    corpus_load_secs = elapsed(start);
    return out;
  }();
  return cases;
}

OperatorContext context_for(const LoadedCase& c) { return {c.entry.backend->api(), c.entry.crash.target_routine}; }

// Reproduction judged directly from the outcome, without the fitness function.
bool matches_reference(const CrashCase& crash, const ExecutionOutcome& out) {
  if (out.kind != OutcomeKind::crashed || !out.trace) return false;
  if (out.trace->exception_type != crash.trace.exception_type) return false;
  const auto k = static_cast<std::size_t>(crash.target_frame_level);
  if (out.trace->frames.size() < k) return false;
  for (std::size_t i = 0; i < k; ++i) {
    const StackFrame& a = crash.trace.frames[i];
    const StackFrame& b = out.trace->frames[i];
    if (a.unit_path != b.unit_path || a.routine != b.routine || a.line != b.line) return false;
  }
  return true;
}

Verdict fitness_axioms() {
  const auto start = Clock::now();
  auto& cases = corpus();
  Rng rng(2024);
  std::vector<std::vector<Genome>> pools;
  for (const LoadedCase& c : cases) pools.push_back(guided_initialize(context_for(c), 64, rng));

  std::size_t bad_range = 0, bad_gate = 0, bad_zero = 0, reproductions = 0;
  const std::size_t pairs = 100'000;
  for (std::size_t i = 0; i < pairs; ++i) {
    const std::size_t ci = i % cases.size();
    const LoadedCase& c = cases[ci];
    const OperatorContext ctx = context_for(c);
    Genome g;
    if (c.oracle.witness && rng.chance(0.25)) {
      g = *c.oracle.witness;
      if (rng.chance(0.5)) g = guided_mutate(g, ctx, rng);
    } else {
      Genome& slot = pools[ci][rng.index(pools[ci].size())];
      slot = guided_mutate(slot, ctx, rng);
      g = slot;
    }
    const ExecutionOutcome out = c.entry.backend->execute(g);
    const FitnessValue f = evaluate(c.entry.crash, out);
    const bool in_range = f.total >= 0.0 && f.total <= 6.0 && f.d_line >= 0.0 && f.d_line <= 1.0 &&
                          f.d_exception >= 0.0 && f.d_exception <= 1.0 && f.d_trace >= 0.0 && f.d_trace <= 1.0 &&
                          f.total == 3.0 * f.d_line + 2.0 * f.d_exception + f.d_trace;
    if (!in_range) ++bad_range;
    if ((f.d_line > 0.0 && (f.d_exception != 1.0 || f.d_trace != 1.0)) || (f.d_exception > 0.0 && f.d_trace != 1.0)) ++bad_gate;
    const bool confirmed = c.oracle.reachable && matches_reference(c.entry.crash, out);
    if ((f.total == 0.0) != confirmed) ++bad_zero;
    if (confirmed) ++reproductions;
  }
  const double secs = elapsed(start);
  return {bad_range == 0 && bad_gate == 0 && bad_zero == 0 && reproductions > 0 && secs < 60.0,
          fmt::format("{} pairs, {} range, {} gating, {} zero-mismatch violations, {} confirmed reproductions, {:.1f}s < 60s",
                      pairs, bad_range, bad_gate, bad_zero, reproductions, secs)};
}

Verdict operator_closure() {
  const auto start = Clock::now();
  auto& cases = corpus();
  Rng rng(77);
  std::vector<std::vector<Genome>> pools;
  for (const LoadedCase& c : cases) pools.push_back(guided_initialize(context_for(c), 32, rng));

  std::size_t produced = 0, violations = 0, missing_target = 0;
  const std::size_t applications = 100'000;
  for (std::size_t i = 0; i < applications; ++i) {
    const std::size_t ci = rng.index(cases.size());
    const OperatorContext ctx = context_for(cases[ci]);
    auto& pool = pools[ci];
    std::vector<Genome> offspring;
    switch (i % 3) {
      case 0:
        offspring = guided_initialize(ctx, 1, rng);
        break;
      case 1: {
        auto [a, b] = guided_crossover(pool[rng.index(pool.size())], pool[rng.index(pool.size())], ctx, rng);
        offspring = {std::move(a), std::move(b)};
        break;
      }
      default:
        offspring = {guided_mutate(pool[rng.index(pool.size())], ctx, rng)};
    }
    for (Genome& g : offspring) {
      ++produced;
      violations += validate(g, ctx.api).size();
      if (!g.calls_target()) ++missing_target;
      pool[rng.index(pool.size())] = std::move(g);
    }
  }
  const double secs = elapsed(start);
  return {violations == 0 && missing_target == 0 && secs < 120.0,
          fmt::format("{} applications, {} offspring, {} invariant violations, {:.2f}% target-call presence, {:.1f}s < 120s",
                      applications, produced, violations, 100.0 * static_cast<double>(produced - missing_target) / produced,
                      secs)};
}

Verdict mutation_expectation() {
  const LoadedCase* stack = nullptr;
  for (const LoadedCase& c : corpus())
    if (c.entry.crash.id == "STACK-6") stack = &c;
  if (!stack) return {false, "STACK-6 missing from the corpus"};
  const OperatorContext ctx = context_for(*stack);
  Rng rng(5);
  bool ok = true;
  std::string detail;
  for (std::size_t n : {2, 5, 10, 20}) {
    Genome g;
    g.target_routine = ctx.target_routine;
    g.statements.push_back(Statement::construct(0));
    while (g.size() < n) g.statements.push_back(Statement::invoke(ctx.target_routine, 0, {}));
    if (!validate(g, ctx.api).empty()) return {false, fmt::format("fixture genome of length {} is invalid", n)};
    const std::size_t samples = 100'000;
    std::size_t total = 0;
    for (std::size_t i = 0; i < samples; ++i) total += guided_mutate_counted(g, ctx, rng).mutated_statements;
    const double mean = static_cast<double>(total) / samples;
    const bool within = mean >= 0.95 && mean <= 1.05;
    ok = ok && within;
    detail += fmt::format("{}n={} mean={:.4f}", detail.empty() ? "" : ", ", n, mean);
  }
  return {ok, detail + " (required 1.0 +/- 5%)"};
}

Verdict escalation_schedule() {
  const SuiteEntry entry = load_scenario_case(testing::corpus_dir() / "11-contradictory-guard.scn");
  SearchConfig config;
  config.seed = 0;
  const RunRecord r = run_search(*entry.backend, entry.crash, config);
  const std::vector<std::size_t> expected{50, 75, 100, 125, 150, 175, 200, 225, 250, 275, 300};
  std::string visited;
  for (std::size_t s : r.population_sizes_visited) visited += (visited.empty() ? "" : ",") + std::to_string(s);
  return {!r.reproduced && r.population_sizes_visited == expected && r.evaluations_used == config.evaluation_budget,
          fmt::format("visited [{}], {} evaluations", visited, r.evaluations_used)};
}

ExperimentResult& agreement_runs() {
  static ExperimentResult result = [] {
    std::vector<SuiteEntry> suite;
    for (const LoadedCase& c : corpus()) suite.push_back(c.entry);
    return run_experiment(suite, 20, 0, SearchConfig{});
  }();
  return result;
}

std::string expected_cell(std::size_t successes, std::size_t runs) {
  if (successes == 0) return "N";
  if (successes == runs) return "Y";
  return fmt::format("Y ({}%)", static_cast<int>(std::lround(100.0 * static_cast<double>(successes) / runs)));
}

Verdict oracle_agreement() {
  const auto start = Clock::now();
  auto& cases = corpus();
  const ExperimentResult& result = agreement_runs();
  std::size_t reachable = 0;
  bool ok = true;
  std::string detail;
  const std::string table = render_report(result.report, ReportFormat::table_text);
  for (const LoadedCase& c : cases) {
    const CaseCoverage* cov = nullptr;
    for (const CaseCoverage& k : result.report.cases)
      if (k.case_id == c.entry.crash.id) cov = &k;
    if (!cov) return {false, "no coverage row for " + c.entry.crash.id};
    if (c.oracle.reachable) ++reachable;
    const bool agrees = c.oracle.reachable ? cov->success_count >= 18 : cov->success_count == 0;
    const std::string cell = result_cell(*cov);
    const bool convention = cov->run_count == 20 && cell == expected_cell(cov->success_count, cov->run_count) &&
                            table.find(cell + "\n") != std::string::npos;
    ok = ok && agrees && convention;
    detail += fmt::format("{}{} {}/20 oracle={} cell=\"{}\"", detail.empty() ? "" : "; ", c.entry.crash.id,
                          cov->success_count, c.oracle.reachable ? "reachable" : "unreachable", cell);
  }
  // oracle enumeration happens once at corpus load and counts toward this budget
  const double secs = elapsed(start) + corpus_load_secs;
  ok = ok && cases.size() == 12 && reachable >= 10 && secs < 900.0;
  return {ok, fmt::format("{} of {} reachable; {}; {:.1f}s < 900s", reachable, cases.size(), detail, secs)};
}

Verdict coverage_arithmetic() {
  const CaseCoverage log{"LOG-509", 50, 39, 11, 0};
  const CaseCoverage single{"ONE-1", 50, 1, 49, 0};
  const CaseCoverage none{"NONE-1", 50, 0, 50, 0};
  const CaseCoverage all{"ALL-1", 50, 50, 0, 0};
  const bool ok = result_cell(log) == "Y (78%)" && log.covered() && single.covered() && result_cell(single) == "Y (2%)" &&
                  !none.covered() && result_cell(none) == "N" && result_cell(all) == "Y";
  return {ok, fmt::format("39/50 -> \"{}\", 1/50 -> \"{}\", 0/50 -> \"{}\", 50/50 -> \"{}\"", result_cell(log),
                          result_cell(single), result_cell(none), result_cell(all))};
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("'") + CRASHREPRO_CLI_PATH + "' " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Verdict determinism() {
  const auto root = std::filesystem::temp_directory_path() / fmt::format("crashrepro-accept-{}", ::getpid());
  std::filesystem::remove_all(root);
  const std::string suite = "--suite '" + testing::corpus_dir().string() + "' --repetitions 20 --base-seed 0";
  const int one = run_cli("bench " + suite + " --workers 1 --out '" + (root / "w1").string() + "'");
  const int eight = run_cli("bench " + suite + " --workers 8 --out '" + (root / "w8").string() + "'");
  if (one != 0 || eight != 0) return {false, fmt::format("bench exit codes {} and {}", one, eight)};
  const std::string csv1 = read_file(root / "w1" / "report.csv");
  const std::string csv8 = read_file(root / "w8" / "report.csv");
  std::size_t runlogs = 0, runlog_diffs = 0;
  for (const auto& p : std::filesystem::recursive_directory_iterator(root / "w1" / "runs")) {
    if (!p.is_regular_file()) continue;
    ++runlogs;
    const auto other = root / "w8" / std::filesystem::relative(p.path(), root / "w1");
    if (!std::filesystem::exists(other) || read_file(other) != read_file(p.path())) ++runlog_diffs;
  }

  std::size_t witnesses = 0, confirmed = 0;
  const ExperimentResult& result = agreement_runs();
  std::map<std::string, const SuiteEntry*> by_id;
  for (const LoadedCase& c : corpus()) by_id[c.entry.crash.id] = &c.entry;
  for (const RunOutcome& run : result.runs) {
    if (!run.record || !run.record->reproduced) continue;
    ++witnesses;
    const SuiteEntry& e = *by_id.at(run.case_id);
    if (run.record->witness && evaluate(e.crash, e.backend->execute(*run.record->witness)).total == 0.0) ++confirmed;
  }
  std::filesystem::remove_all(root);
  const bool ok = csv1 == csv8 && !csv1.empty() && runlog_diffs == 0 && witnesses > 0 && confirmed == witnesses;
  return {ok, fmt::format("report.csv {} ({} bytes), {} of {} run logs differ, {}/{} witnesses re-execute to 0",
                          csv1 == csv8 ? "identical" : "differs", csv1.size(), runlog_diffs, runlogs, confirmed, witnesses)};
}

Verdict trace_round_trip() {
  Rng rng(500);
  std::size_t canonical_ok = 0, script_ok = 0;
  for (int i = 0; i < 500; ++i) {
    const StackTrace t = testing::random_trace(rng, TraceGrammar::canonical);
    if (parse_trace(format_trace(t, TraceGrammar::canonical), TraceGrammar::canonical) == t) ++canonical_ok;
    const StackTrace s = testing::random_trace(rng, TraceGrammar::script_runtime);
    if (parse_trace(format_trace(s, TraceGrammar::script_runtime), TraceGrammar::script_runtime) == s) ++script_ok;
  }
  return {canonical_ok == 500 && script_ok == 500,
          fmt::format("canonical {}/500, script-runtime {}/500", canonical_ok, script_ok)};
}

}  // namespace

int main() {
  criterion("fitness axioms", fitness_axioms);
  criterion("operator closure", operator_closure);
  criterion("mutation expectation", mutation_expectation);
  criterion("escalation schedule", escalation_schedule);
  criterion("oracle/GA agreement", oracle_agreement);
  criterion("coverage arithmetic", coverage_arithmetic);
  criterion("determinism", determinism);
  criterion("trace round-trip", trace_round_trip);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
