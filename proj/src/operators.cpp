#include "crashrepro/operators.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

namespace crashrepro {

namespace {

constexpr double kReuseReceiver = 0.8;
constexpr double kReuseArgument = 0.5;

std::vector<std::size_t> compatible_slots(const Genome& g, std::size_t limit, bool object, std::size_t index) {
  std::vector<std::size_t> slots;
  for (std::size_t i = 0; i < limit && i < g.size(); ++i) {
    const Statement& s = g.statements[i];
    if (object ? s.kind == StatementKind::construct : s.kind == StatementKind::set_value) {
      if (s.type == index) slots.push_back(i);
    }
  }
  return slots;
}

Statement fresh_value(std::size_t domain, const Api& api, Rng& rng) {
  const Domain& d = api.domains[domain];
  return Statement::set_value(domain, d.values[rng.index(d.size())]);
}

// Inserts an invoke of `routine` at `pos`, reusing earlier slots or inserting
// new definitions in front of it. Returns the position after the group.
std::size_t insert_invoke(Genome& g, std::size_t pos, std::size_t routine, const Api& api, Rng& rng) {
  const Signature& sig = api.routines[routine];
  std::size_t receiver = kNoSlot;
  if (sig.owner) {
    auto slots = compatible_slots(g, pos, true, *sig.owner);
    if (!slots.empty() && rng.chance(kReuseReceiver)) {
      receiver = slots[rng.index(slots.size())];
    } else {
      insert_statement(g, pos, Statement::construct(*sig.owner));
      receiver = pos++;
    }
  }
  std::vector<std::size_t> args;
  for (const Param& p : sig.params) {
    auto slots = compatible_slots(g, pos, false, p.domain);
    if (!slots.empty() && rng.chance(kReuseArgument)) {
      args.push_back(slots[rng.index(slots.size())]);
    } else {
      insert_statement(g, pos, fresh_value(p.domain, api, rng));
      args.push_back(pos++);
    }
  }
  insert_statement(g, pos, Statement::invoke(routine, receiver, std::move(args)));
  return pos + 1;
}

// Inserts one random statement group (an invoke with its dependencies, a
// constructor, or a constant) at `pos`.
std::size_t insert_random(Genome& g, std::size_t pos, const Api& api, Rng& rng) {
  double roll = rng.unit();
  if (roll < 0.2 && !api.types.empty()) {
    insert_statement(g, pos, Statement::construct(rng.index(api.types.size())));
    return pos + 1;
  }
  if (roll < 0.4 && !api.domains.empty()) {
    insert_statement(g, pos, fresh_value(rng.index(api.domains.size()), api, rng));
    return pos + 1;
  }
  return insert_invoke(g, pos, rng.index(api.routines.size()), api, rng);
}

void change_statement(Genome& g, std::size_t j, const Api& api, Rng& rng) {
  Statement& s = g.statements[j];
  switch (s.kind) {
    case StatementKind::construct:
      return;
    case StatementKind::set_value:
      s.value = api.domains[s.type].values[rng.index(api.domains[s.type].size())];
      return;
    case StatementKind::invoke:
      break;
  }
  const Signature& sig = api.routines[s.routine];
  if (!sig.params.empty()) {
    std::size_t a = rng.index(sig.params.size());
    std::size_t domain = sig.params[a].domain;
    auto slots = compatible_slots(g, j, false, domain);
    if (!slots.empty() && rng.chance(0.5)) {
      g.statements[j].args.resize(sig.params.size(), kNoSlot);
      g.statements[j].args[a] = slots[rng.index(slots.size())];
    } else {
      insert_statement(g, j, fresh_value(domain, api, rng));
      g.statements[j + 1].args.resize(sig.params.size(), kNoSlot);
      g.statements[j + 1].args[a] = j;
    }
    return;
  }
  if (sig.owner) {
    auto slots = compatible_slots(g, j, true, *sig.owner);
    if (!slots.empty()) s.receiver = slots[rng.index(slots.size())];
  }
}

Genome splice(const Genome& head, std::size_t head_cut, const Genome& tail, std::size_t tail_cut) {
  Genome child;
  child.target_routine = head.target_routine;
  child.statements.assign(head.statements.begin(), head.statements.begin() + static_cast<std::ptrdiff_t>(head_cut));
  // References keep their offset from the cut; ones that fall before the
  // start of the child dangle and are left to repair.
  auto shift = [&](std::size_t ref) {
    if (ref == kNoSlot || ref + head_cut < tail_cut) return kNoSlot;
    return ref + head_cut - tail_cut;
  };
  for (std::size_t i = tail_cut; i < tail.size(); ++i) {
    Statement s = tail.statements[i];
    s.receiver = shift(s.receiver);
    for (std::size_t& a : s.args) a = shift(a);
    child.statements.push_back(std::move(s));
  }
  return child;
}

}  // namespace

std::vector<Genome> guided_initialize(const OperatorContext& ctx, std::size_t population_size, Rng& rng) {
  std::vector<Genome> population;
  population.reserve(population_size);
  for (std::size_t n = 0; n < population_size; ++n) {
    Genome g;
    g.target_routine = ctx.target_routine;
    const std::size_t length = static_cast<std::size_t>(rng.between(1, static_cast<std::int64_t>(ctx.max_length)));
    while (g.size() < length) insert_random(g, g.size(), ctx.api, rng);
    population.push_back(repair(std::move(g), ctx.api, rng, ctx.max_length));
  }
  return population;
}

std::pair<Genome, Genome> guided_crossover(const Genome& a, const Genome& b, const OperatorContext& ctx, Rng& rng) {
  const double alpha = rng.unit();
  auto cut = [alpha](std::size_t n) { return std::min(n, static_cast<std::size_t>(std::floor(alpha * static_cast<double>(n + 1)))); };
  const std::size_t ca = cut(a.size());
  const std::size_t cb = cut(b.size());
  Genome first = repair(splice(a, ca, b, cb), ctx.api, rng, ctx.max_length);
  Genome second = repair(splice(b, cb, a, ca), ctx.api, rng, ctx.max_length);
  return {std::move(first), std::move(second)};
}

MutationResult guided_mutate_counted(const Genome& g, const OperatorContext& ctx, Rng& rng) {
  MutationResult result{g, 0};
  const std::size_t n = g.size();
  if (n == 0) {
    result.genome = repair(std::move(result.genome), ctx.api, rng, ctx.max_length);
    return result;
  }
  const double p = 1.0 / static_cast<double>(n);
  std::vector<bool> chosen(n);
  for (std::size_t j = 0; j < n; ++j) {
    chosen[j] = rng.chance(p);
    result.mutated_statements += chosen[j];
  }
  // Back to front, so edits never shift the positions still to be visited.
  Genome& out = result.genome;
  for (std::size_t j = n; j-- > 0;) {
    if (!chosen[j]) continue;
    switch (rng.index(3)) {
      case 0:
        erase_statement(out, j);
        break;
      case 1:
        insert_random(out, j + 1, ctx.api, rng);
        break;
      default:
        change_statement(out, j, ctx.api, rng);
        break;
    }
  }
  out = repair(std::move(out), ctx.api, rng, ctx.max_length);
  return result;
}

std::size_t select(std::span<const Genome> population, std::span<const FitnessValue> fitnesses,
                   const OperatorConfig& config, Rng& rng) {
  std::size_t best = rng.index(population.size());
  for (std::size_t k = 1; k < config.tournament_size; ++k) {
    std::size_t candidate = rng.index(population.size());
    auto key = [&](std::size_t i) { return std::make_tuple(fitnesses[i].total, population[i].size(), i); };
    if (key(candidate) < key(best)) best = candidate;
  }
  return best;
}

}  // namespace crashrepro
