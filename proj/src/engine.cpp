#include "crashrepro/engine.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <numeric>
#include <sstream>
#include <tuple>

#include "json.hpp"

namespace crashrepro {

void validate_config(const SearchConfig& config) {
  if (config.initial_population < 2) throw ConfigError("initial_population must be at least 2");
  if (config.population_step == 0) throw ConfigError("population_step must be positive");
  if (config.initial_population > config.population_max) throw ConfigError("initial_population exceeds population_max");
  if (config.evaluation_budget == 0) throw ConfigError("evaluation_budget must be positive");
  const auto& ops = config.operators;
  if (!(ops.crossover_probability >= 0.0 && ops.crossover_probability <= 1.0)) {
    throw ConfigError("crossover_probability must lie in [0, 1]");
  }
  if (ops.tournament_size == 0) throw ConfigError("tournament_size must be positive");
  if (ops.elite_count >= config.initial_population) throw ConfigError("elite_count must be below the population size");
  if (ops.max_length == 0) throw ConfigError("max_length must be positive");
  if (config.wall_clock_budget && config.wall_clock_budget->count() <= 0) throw ConfigError("wall-clock budget must be positive");
}

std::vector<std::size_t> population_schedule(const SearchConfig& config) {
  std::vector<std::size_t> sizes;
  for (std::size_t size = config.initial_population; size <= config.population_max; size += config.population_step) {
    sizes.push_back(size);
  }
  return sizes;
}

std::vector<std::size_t> budget_slices(const SearchConfig& config) {
  const std::size_t steps = population_schedule(config).size();
  std::vector<std::size_t> slices(steps, config.evaluation_budget / steps);
  slices.back() += config.evaluation_budget % steps;
  return slices;
}

namespace {

class Search {
 public:
  Search(const ExecutionBackend& backend, const CrashCase& crash, const SearchConfig& config, const GenerationObserver& observer)
      : backend_(backend),
        crash_(crash),
        config_(config),
        observer_(observer),
        ctx_{backend.api(), crash.target_routine, config.operators.max_length},
        rng_(config.seed),
        start_(std::chrono::steady_clock::now()) {
    record_.case_id = crash.id;
    record_.seed = config.seed;
  }

  RunRecord run() {
    const auto schedule = population_schedule(config_);
    const auto slices = budget_slices(config_);
    for (std::size_t phase = 0; phase < schedule.size() && !done_; ++phase) {
      slice_end_ = record_.evaluations_used + slices[phase];
      run_phase(schedule[phase]);
    }
    if (record_.reproduced) confirm_witness();
    return std::move(record_);
  }

 private:
  bool budget_left() const { return !done_ && record_.evaluations_used < slice_end_; }

  void check_clock() {
    if (!config_.wall_clock_budget) return;
    if (std::chrono::steady_clock::now() - start_ >= *config_.wall_clock_budget) {
      record_.wall_clock_exhausted = true;
      done_ = true;
    }
  }

  FitnessValue evaluate_one(const Genome& g) {
    ++record_.evaluations_used;
    FitnessValue f = evaluate(crash_, backend_.execute(g));
    if (f.total < record_.best_fitness.total || record_.evaluations_used == 1) record_.best_fitness = f;
    if (is_reproduced(f)) {
      record_.reproduced = true;
      record_.witness = g;
      done_ = true;
    }
    check_clock();
    return f;
  }

  void log_generation(std::size_t size, std::size_t generation, const std::vector<FitnessValue>& fitness) {
    if (fitness.empty()) return;
    GenerationStats stats;
    stats.population_size = size;
    stats.generation = generation;
    stats.evaluations = record_.evaluations_used;
    double sum = 0.0;
    stats.best = kMaxFitness;
    for (const auto& f : fitness) {
      stats.best = std::min(stats.best, f.total);
      sum += f.total;
    }
    stats.mean = sum / static_cast<double>(fitness.size());
    record_.generation_log.push_back(stats);
    if (observer_) observer_(stats);
  }

  std::vector<std::size_t> elite_indices(const std::vector<Genome>& pop, const std::vector<FitnessValue>& fit) const {
    std::vector<std::size_t> order(pop.size());
    std::iota(order.begin(), order.end(), 0);
    const std::size_t count = std::min(config_.operators.elite_count, pop.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count), order.end(),
                      [&](std::size_t a, std::size_t b) {
                        return std::make_tuple(fit[a].total, pop[a].size(), a) < std::make_tuple(fit[b].total, pop[b].size(), b);
                      });
    order.resize(count);
    return order;
  }

  void run_phase(std::size_t size) {
    record_.population_sizes_visited.push_back(size);
    std::vector<Genome> population;
    std::vector<FitnessValue> fitness;
    for (Genome& g : guided_initialize(ctx_, size, rng_)) {
      if (!budget_left()) break;
      fitness.push_back(evaluate_one(g));
      population.push_back(std::move(g));
    }
    log_generation(size, 0, fitness);

    for (std::size_t generation = 1; budget_left() && !population.empty(); ++generation) {
      std::vector<Genome> next;
      std::vector<FitnessValue> next_fitness;
      for (std::size_t e : elite_indices(population, fitness)) {
        next.push_back(population[e]);
        next_fitness.push_back(fitness[e]);
      }
      while (next.size() < size && budget_left()) {
        const Genome& a = population[select(population, fitness, config_.operators, rng_)];
        const Genome& b = population[select(population, fitness, config_.operators, rng_)];
        auto [c1, c2] = rng_.chance(config_.operators.crossover_probability) ? guided_crossover(a, b, ctx_, rng_)
                                                                              : std::make_pair(a, b);
        for (Genome* child : {&c1, &c2}) {
          Genome mutated = guided_mutate(*child, ctx_, rng_);
          if (next.size() >= size || !budget_left()) break;
          next_fitness.push_back(evaluate_one(mutated));
          next.push_back(std::move(mutated));
        }
      }
      population = std::move(next);
      fitness = std::move(next_fitness);
      log_generation(size, generation, fitness);
    }
  }

  void confirm_witness() const {
    const FitnessValue again = evaluate(crash_, backend_.execute(*record_.witness));
    if (!is_reproduced(again)) {
      throw std::logic_error("witness for " + crash_.id + " did not reproduce on re-execution");
    }
  }

  const ExecutionBackend& backend_;
  const CrashCase& crash_;
  const SearchConfig& config_;
  const GenerationObserver& observer_;
  OperatorContext ctx_;
  Rng rng_;
  std::chrono::steady_clock::time_point start_;
  RunRecord record_;
  std::size_t slice_end_ = 0;
  bool done_ = false;
};

std::string json_string(std::string_view s) { return nlohmann::json(std::string(s)).dump(); }

}  // namespace

RunRecord run_search(const ExecutionBackend& backend, const CrashCase& crash, const SearchConfig& config,
                     const GenerationObserver& observer) {
  validate_config(config);
  if (crash.target_routine >= backend.api().routines.size()) {
    throw ConfigError("target routine of " + crash.id + " is not part of the backend api");
  }
  return Search(backend, crash, config, observer).run();
}

std::vector<double> best_so_far(const std::vector<GenerationStats>& log) {
  std::vector<double> out;
  out.reserve(log.size());
  for (const auto& g : log) out.push_back(out.empty() ? g.best : std::min(out.back(), g.best));
  return out;
}

std::string generation_log_line(const GenerationStats& s) {
  return fmt::format(
      R"({{"record":"generation","schema":{},"population_size":{},"generation":{},"evaluations":{},"best":{},"mean":{}}})",
      kRunLogSchema, s.population_size, s.generation, s.evaluations, format_fitness(s.best), format_fitness(s.mean));
}

std::string run_record_line(const RunRecord& r, const Api& api) {
  std::string sizes;
  for (std::size_t i = 0; i < r.population_sizes_visited.size(); ++i) {
    sizes += (i ? "," : "") + std::to_string(r.population_sizes_visited[i]);
  }
  const FitnessValue& f = r.best_fitness;
  return fmt::format(
      R"({{"record":"run","schema":{},"case_id":{},"seed":{},"reproduced":{},"evaluations_used":{},)"
      R"("population_sizes_visited":[{}],"best":{{"d_line":{},"d_exception":{},"d_trace":{},"total":{}}},)"
      R"("wall_clock_exhausted":{},"witness":{},"error":null}})",
      kRunLogSchema, json_string(r.case_id), r.seed, r.reproduced, r.evaluations_used, sizes, format_fitness(f.d_line),
      format_fitness(f.d_exception), format_fitness(f.d_trace), format_fitness(f.total), r.wall_clock_exhausted,
      r.witness ? json_string(genome_to_text(*r.witness, api)) : std::string("null"));
}

std::string format_run_log(const RunRecord& record, const Api& api) {
  std::string out;
  for (const auto& g : record.generation_log) out += generation_log_line(g) + "\n";
  out += run_record_line(record, api) + "\n";
  return out;
}

std::string run_error_line(std::string_view case_id, std::uint64_t seed, std::string_view error) {
  return fmt::format(R"({{"record":"run","schema":{},"case_id":{},"seed":{},"reproduced":false,"error":{}}})", kRunLogSchema,
                     json_string(case_id), seed, json_string(error));
}

RunSummary read_run_log(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::string last;
  while (std::getline(in, line)) {
    if (!line.empty()) last = line;
  }
  auto j = nlohmann::json::parse(last);
  if (j.value("record", "") != "run") throw std::runtime_error("run log does not end with a run record");
  RunSummary s;
  s.case_id = j.at("case_id").get<std::string>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.reproduced = j.at("reproduced").get<bool>();
  if (j.contains("error") && !j["error"].is_null()) s.error = j["error"].get<std::string>();
  if (j.contains("best")) s.best_total = j["best"].at("total").get<double>();
  if (j.contains("evaluations_used")) s.evaluations_used = j["evaluations_used"].get<std::size_t>();
  return s;
}

}  // namespace crashrepro
