#include "crashrepro/oracle.hpp"

#include <map>

#include "crashrepro/fitness.hpp"

namespace crashrepro {

namespace {

struct Letter {
  std::size_t routine;
  std::vector<std::size_t> value_indices;  // per parameter, into its domain
};

// All (routine, argument tuple) pairs in lexicographic order.
std::vector<Letter> alphabet(const Api& api) {
  std::vector<Letter> letters;
  for (std::size_t r = 0; r < api.routines.size(); ++r) {
    const auto& params = api.routines[r].params;
    std::vector<std::size_t> digits(params.size(), 0);
    for (;;) {
      letters.push_back({r, digits});
      std::size_t k = params.size();
      while (k > 0 && ++digits[k - 1] == api.domains[params[k - 1].domain].size()) digits[--k] = 0;
      if (k == 0) break;
    }
  }
  return letters;
}

Genome build_genome(const std::vector<Letter>& letters, const std::vector<std::size_t>& word, const Api& api,
                    std::size_t target_routine) {
  Genome g;
  g.target_routine = target_routine;
  std::map<std::size_t, std::size_t> objects;
  std::map<std::pair<std::size_t, std::int64_t>, std::size_t> constants;
  for (std::size_t index : word) {
    const Letter& letter = letters[index];
    const Signature& sig = api.routines[letter.routine];
    std::size_t receiver = kNoSlot;
    if (sig.owner) {
      auto [it, inserted] = objects.try_emplace(*sig.owner, g.size());
      if (inserted) g.statements.push_back(Statement::construct(*sig.owner));
      receiver = it->second;
    }
    std::vector<std::size_t> args;
    for (std::size_t p = 0; p < sig.params.size(); ++p) {
      const std::size_t domain = sig.params[p].domain;
      const std::int64_t value = api.domains[domain].values[letter.value_indices[p]];
      auto [it, inserted] = constants.try_emplace({domain, value}, g.size());
      if (inserted) g.statements.push_back(Statement::set_value(domain, value));
      args.push_back(it->second);
    }
    g.statements.push_back(Statement::invoke(letter.routine, receiver, std::move(args)));
  }
  return g;
}

std::uint64_t alphabet_size(const Api& api) {
  std::uint64_t total = 0;
  for (const auto& sig : api.routines) {
    std::uint64_t combos = 1;
    for (const auto& p : sig.params) {
      combos *= api.domains[p.domain].size();
      if (combos > kMaxEnumeration) return kMaxEnumeration + 1;
    }
    total += combos;
    if (total > kMaxEnumeration) return kMaxEnumeration + 1;
  }
  return total;
}

}  // namespace

std::uint64_t enumeration_size(const Scenario& scenario, int max_calls) {
  const std::uint64_t letters = alphabet_size(scenario.api);
  std::uint64_t total = 0;
  std::uint64_t power = 1;
  for (int length = 1; length <= max_calls; ++length) {
    if (letters != 0 && power > (kMaxEnumeration + 1) / letters) return kMaxEnumeration + 1;
    power *= letters;
    total += power;
    if (total > kMaxEnumeration) return kMaxEnumeration + 1;
  }
  return total;
}

OracleVerdict oracle_enumerate(const Scenario& scenario, const CrashCase& crash, int max_calls, std::size_t step_budget) {
  const std::uint64_t size = enumeration_size(scenario, max_calls);
  if (size > kMaxEnumeration) throw EnumerationTooLarge(size);

  const std::vector<Letter> letters = alphabet(scenario.api);
  OracleVerdict verdict;
  for (int length = 1; length <= max_calls && !letters.empty(); ++length) {
    std::vector<std::size_t> word(static_cast<std::size_t>(length), 0);
    for (;;) {
      bool has_target = false;
      for (std::size_t index : word) has_target |= letters[index].routine == crash.target_routine;
      if (has_target) {
        ++verdict.candidates_tried;
        Genome g = build_genome(letters, word, scenario.api, crash.target_routine);
        if (is_reproduced(evaluate(crash, execute(scenario, g, step_budget)))) {
          verdict.reachable = true;
          verdict.witness_calls = word.size();
          verdict.witness = std::move(g);
          return verdict;
        }
      }
      std::size_t k = word.size();
      while (k > 0 && ++word[k - 1] == letters.size()) word[--k] = 0;
      if (k == 0) break;
    }
  }
  return verdict;
}

}  // namespace crashrepro
