// crashrepro: reproduce crashes from stack traces by evolutionary search.

#include <fmt/format.h>

#include <cstdlib>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "crashrepro/engine.hpp"
#include "crashrepro/experiment.hpp"
#include "crashrepro/io.hpp"
#include "crashrepro/oracle.hpp"
#include "crashrepro/script_backend.hpp"
#include "crashrepro/suite.hpp"

namespace cr = crashrepro;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitTooLarge = 3;

struct BudgetFlags {
  std::optional<std::size_t> evaluation_budget;
  std::optional<double> wall_clock_seconds;
  std::size_t initial_population = 50;
  std::size_t population_step = 25;
  std::size_t population_max = 300;
  std::size_t max_length = cr::kDefaultMaxLength;
  double crossover_probability = 0.75;
};

void add_budget_flags(CLI::App* cmd, BudgetFlags& flags) {
  cmd->add_option("--evaluation-budget", flags.evaluation_budget,
                  "Fitness evaluations per run (default 50000, env CRASHREPRO_EVALUATION_BUDGET)");
  cmd->add_option("--wall-clock-seconds", flags.wall_clock_seconds,
                  "Wall-clock cap per run, 0 disables (default 1800, env CRASHREPRO_WALL_CLOCK_SECONDS)");
  cmd->add_option("--initial-population", flags.initial_population, "First population size")->capture_default_str();
  cmd->add_option("--population-step", flags.population_step, "Population increase per escalation")->capture_default_str();
  cmd->add_option("--population-max", flags.population_max, "Largest population size")->capture_default_str();
  cmd->add_option("--max-length", flags.max_length, "Maximum statements per test")->capture_default_str();
  cmd->add_option("--crossover-probability", flags.crossover_probability, "Crossover probability")->capture_default_str();
}

template <typename T>
std::optional<T> env_number(const char* name) {
  const char* raw = std::getenv(name);
  if (raw == nullptr || *raw == '\0') return std::nullopt;
  try {
    std::size_t used = 0;
    double v = std::stod(raw, &used);
    if (used != std::string_view(raw).size() || v < 0) throw std::invalid_argument(raw);
    return static_cast<T>(v);
  } catch (const std::exception&) {
    throw cr::ConfigError(fmt::format("{} must be a non-negative number, got '{}'", name, raw));
  }
}

// Flags win over environment variables, which win over the defaults.
cr::SearchConfig make_config(const BudgetFlags& flags) {
  cr::SearchConfig config;
  config.initial_population = flags.initial_population;
  config.population_step = flags.population_step;
  config.population_max = flags.population_max;
  config.operators.max_length = flags.max_length;
  config.operators.crossover_probability = flags.crossover_probability;
  if (auto v = flags.evaluation_budget ? flags.evaluation_budget : env_number<std::size_t>("CRASHREPRO_EVALUATION_BUDGET")) {
    config.evaluation_budget = *v;
  }
  if (auto s = flags.wall_clock_seconds ? flags.wall_clock_seconds : env_number<double>("CRASHREPRO_WALL_CLOCK_SECONDS")) {
    if (*s == 0) {
      config.wall_clock_budget.reset();
    } else {
      config.wall_clock_budget = std::chrono::milliseconds(static_cast<long long>(*s * 1000));
    }
  }
  cr::validate_config(config);
  return config;
}

struct ReproduceArgs {
  std::string scenario;
  std::string target;
  std::string trace;
  std::optional<int> target_frame;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  bool dump_witness = false;
  BudgetFlags budget;
};

int cmd_reproduce(const ReproduceArgs& args) {
  if (args.scenario.empty() == args.target.empty()) throw cr::ConfigError("give exactly one of --scenario or --target");
  if (!args.target.empty() && !args.seed) throw cr::ConfigError("--seed is required with --target");
  cr::SearchConfig config = make_config(args.budget);
  config.seed = args.seed.value_or(0);

  std::shared_ptr<const cr::ExecutionBackend> backend;
  cr::CrashCase crash;
  if (!args.scenario.empty()) {
    auto scenario = std::make_shared<const cr::Scenario>(cr::load_scenario(args.scenario));
    cr::StackTrace trace = cr::parse_trace(cr::read_file(args.trace), cr::TraceGrammar::canonical);
    crash = cr::bind_case(scenario->case_info.id, std::move(trace), args.target_frame.value_or(scenario->case_info.target_frame),
                          scenario->api);
    backend = std::make_shared<cr::ScenarioBackend>(std::move(scenario));
  } else {
    cr::ScriptTarget target = cr::load_script_target(args.target);
    target.failed_scripts_dir = std::filesystem::path(args.out_dir) / "failed-scripts";
    cr::StackTrace reference = cr::parse_trace(cr::read_file(args.trace), target.grammar);
    const int level = args.target_frame.value_or(target.target_frame);
    auto script = std::make_shared<cr::ScriptBackend>(std::move(target));
    crash = script->make_case(script->target().module, reference, level);
    backend = std::move(script);
  }

  const cr::RunRecord record = cr::run_search(*backend, crash, config);
  const std::filesystem::path out(args.out_dir);
  cr::write_file_atomic(out / "run.runlog", cr::format_run_log(record, backend->api()));
  std::cout << fmt::format("case {}  seed {}  evaluations {}  best {}\n", record.case_id, record.seed, record.evaluations_used,
                           cr::format_fitness(record.best_fitness.total));
  if (!record.reproduced) {
    std::cout << "not reproduced\n";
    return 1;
  }
  const std::string witness = cr::genome_to_text(*record.witness, backend->api());
  const cr::ExecutionOutcome outcome = backend->execute(*record.witness);
  cr::write_file_atomic(out / "witness.genome", witness);
  cr::write_file_atomic(out / "reproduced.trace", cr::format_trace(*outcome.trace));
  std::cout << "reproduced\n";
  if (args.dump_witness) std::cout << witness;
  return 0;
}

struct BenchArgs {
  std::string suite;
  std::size_t repetitions = 20;
  std::uint64_t base_seed = 0;
  std::size_t workers = 1;
  std::string out_dir = "bench-out";
  BudgetFlags budget;
};

int cmd_bench(const BenchArgs& args) {
  const cr::SearchConfig config = make_config(args.budget);
  if (args.repetitions < 1) throw cr::ConfigError("--repetitions must be at least 1");
  if (args.workers < 1) throw cr::ConfigError("--workers must be at least 1");
  const std::filesystem::path out(args.out_dir);
  const std::vector<cr::SuiteEntry> suite = cr::load_suite(args.suite, out);
  const cr::ExperimentResult result = cr::run_experiment(suite, args.repetitions, args.base_seed, config, {args.workers, out});
  const std::string table = cr::render_report(result.report, cr::ReportFormat::table_text);
  cr::write_file_atomic(out / "report.txt", table);
  cr::write_file_atomic(out / "report.csv", cr::render_report(result.report, cr::ReportFormat::csv));
  std::cout << table;
  return 0;
}

struct OracleArgs {
  std::string scenario;
  std::string trace;
  std::optional<int> max_calls;
  std::optional<int> target_frame;
};

int cmd_oracle(const OracleArgs& args) {
  const cr::Scenario scenario = cr::load_scenario(args.scenario);
  cr::StackTrace trace = cr::parse_trace(cr::read_file(args.trace), cr::TraceGrammar::canonical);
  const cr::CrashCase crash =
      cr::bind_case(scenario.case_info.id, std::move(trace), args.target_frame.value_or(scenario.case_info.target_frame), scenario.api);
  const int max_calls = args.max_calls.value_or(scenario.case_info.oracle_max_calls);
  if (max_calls < 1) throw cr::ConfigError("--max-calls must be at least 1");
  const cr::OracleVerdict verdict = cr::oracle_enumerate(scenario, crash, max_calls);
  if (!verdict.reachable) {
    std::cout << fmt::format("unreachable within {} calls ({} candidates)\n", max_calls, verdict.candidates_tried);
    return 1;
  }
  std::cout << fmt::format("reachable with {} calls ({} candidates)\n", verdict.witness_calls, verdict.candidates_tried);
  std::cout << cr::genome_to_text(*verdict.witness, scenario.api);
  return 0;
}

int cmd_parse_trace(const std::string& path, const std::string& grammar_text) {
  auto grammar = cr::grammar_from_name(grammar_text);
  if (!grammar) throw cr::ConfigError("unknown grammar '" + grammar_text + "'");
  try {
    std::cout << cr::format_trace(cr::parse_trace(cr::read_file(path), *grammar));
  } catch (const cr::MalformedTrace& e) {
    throw std::runtime_error(fmt::format("{}:{}: malformed trace: {}", path, e.line_number(), e.what()));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reproduce crashes from stack traces with a genetic algorithm", "crashrepro"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  ReproduceArgs reproduce;
  auto* rep = app.add_subcommand("reproduce", "Search for a test that reproduces one crash");
  rep->add_option("--scenario", reproduce.scenario, "Scenario file")->check(CLI::ExistingFile);
  rep->add_option("--target", reproduce.target, "Script target manifest")->check(CLI::ExistingFile);
  rep->add_option("--trace", reproduce.trace, "Reference stack trace")->required()->check(CLI::ExistingFile);
  rep->add_option("--target-frame", reproduce.target_frame, "Frame level to reproduce (default from the scenario)");
  rep->add_option("--seed", reproduce.seed, "Random seed (default 0; required with --target)");
  rep->add_option("--out", reproduce.out_dir, "Directory for run.runlog, witness.genome, reproduced.trace")->capture_default_str();
  rep->add_flag("--dump-witness", reproduce.dump_witness, "Print the witness genome");
  add_budget_flags(rep, reproduce.budget);

  BenchArgs bench;
  auto* ben = app.add_subcommand("bench", "Run every case of a suite repeatedly and report coverage");
  ben->add_option("--suite", bench.suite, "Suite directory")->required();
  ben->add_option("--repetitions", bench.repetitions, "Runs per case")->capture_default_str();
  ben->add_option("--base-seed", bench.base_seed, "Seed of run 0; run i uses base + i")->capture_default_str();
  ben->add_option("--workers", bench.workers, "Concurrent runs")->capture_default_str();
  ben->add_option("--out", bench.out_dir, "Output directory")->capture_default_str();
  add_budget_flags(ben, bench.budget);

  OracleArgs oracle;
  auto* ora = app.add_subcommand("oracle", "Decide reachability by exhaustive enumeration");
  ora->add_option("--scenario", oracle.scenario, "Scenario file")->required()->check(CLI::ExistingFile);
  ora->add_option("--trace", oracle.trace, "Reference stack trace")->required()->check(CLI::ExistingFile);
  ora->add_option("--max-calls", oracle.max_calls, "Longest call sequence (default from the scenario)");
  ora->add_option("--target-frame", oracle.target_frame, "Frame level to reproduce (default from the scenario)");

  std::string trace_path;
  std::string grammar = "canonical";
  auto* par = app.add_subcommand("parse-trace", "Parse a trace and print its canonical form");
  par->add_option("trace", trace_path, "Trace file")->required();
  par->add_option("--grammar", grammar, "canonical or script-runtime")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*rep) return cmd_reproduce(reproduce);
    if (*ben) return cmd_bench(bench);
    if (*ora) return cmd_oracle(oracle);
    return cmd_parse_trace(trace_path, grammar);
  } catch (const cr::EnumerationTooLarge& e) {
    std::cerr << "crashrepro: " << e.what() << "\n";
    return kExitTooLarge;
  } catch (const std::exception& e) {
    std::cerr << "crashrepro: " << e.what() << "\n";
    return kExitUsage;
  }
}
