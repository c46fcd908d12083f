#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "crashrepro/api.hpp"
#include "crashrepro/fitness.hpp"
#include "crashrepro/genome.hpp"
#include "crashrepro/rng.hpp"

namespace crashrepro {

enum class MutationMode { per_statement };

struct OperatorConfig {
  double crossover_probability = 0.75;
  MutationMode mutation_mode = MutationMode::per_statement;  // probability 1/n, n = test length
  std::size_t tournament_size = 2;
  std::size_t elite_count = 1;
  std::size_t max_length = kDefaultMaxLength;
};

// Everything the guided operators need to know about the search target.
struct OperatorContext {
  const Api& api;
  std::size_t target_routine;
  std::size_t max_length = kDefaultMaxLength;
};

std::vector<Genome> guided_initialize(const OperatorContext& ctx, std::size_t population_size, Rng& rng);

// Single-point crossover. One relative cut position is drawn and applied to
// both parents, so identical parents produce identical offspring.
std::pair<Genome, Genome> guided_crossover(const Genome& a, const Genome& b, const OperatorContext& ctx, Rng& rng);

struct MutationResult {
  Genome genome;
  std::size_t mutated_statements = 0;
};

MutationResult guided_mutate_counted(const Genome& g, const OperatorContext& ctx, Rng& rng);

inline Genome guided_mutate(const Genome& g, const OperatorContext& ctx, Rng& rng) {
  return guided_mutate_counted(g, ctx, rng).genome;
}

// Tournament selection; returns the index of the winner. Lower total wins,
// then fewer statements, then the earlier index.
std::size_t select(std::span<const Genome> population, std::span<const FitnessValue> fitnesses,
                   const OperatorConfig& config, Rng& rng);

}  // namespace crashrepro
