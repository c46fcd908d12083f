#include <algorithm>

#include "crashrepro/genome.hpp"
#include "crashrepro/operators.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace crashrepro;

namespace {

bool has(const ValidityReport& r, Violation::Kind k) {
  return std::any_of(r.begin(), r.end(), [&](const Violation& v) { return v.kind == k; });
}

std::size_t target_calls(const Genome& g) {
  return static_cast<std::size_t>(std::count_if(g.statements.begin(), g.statements.end(), [&](const Statement& s) {
    return s.kind == StatementKind::invoke && s.routine == g.target_routine;
  }));
}

// Random structural damage: deletions, duplications, bad symbols, bad refs.
Genome mutilate(Genome g, const Api& api, Rng& rng) {
  const std::size_t edits = 1 + rng.index(4);
  for (std::size_t e = 0; e < edits; ++e) {
    if (g.statements.empty()) {
      g.statements.push_back(Statement::invoke(rng.index(api.routines.size() + 2), kNoSlot, {}));
      continue;
    }
    const std::size_t i = rng.index(g.size());
    Statement& s = g.statements[i];
    switch (rng.index(8)) {
      case 0:
        g.statements.erase(g.statements.begin() + static_cast<std::ptrdiff_t>(i));  // raw erase: refs dangle or shift
        break;
      case 1:
        g.statements.push_back(g.statements[i]);
        break;
      case 2:
        if (s.kind == StatementKind::invoke) s.routine = api.routines.size() + rng.index(3);
        break;
      case 3:
        if (s.kind == StatementKind::set_value) s.value = 1'000'000 + static_cast<std::int64_t>(rng.index(10));
        break;
      case 4:
        if (s.kind == StatementKind::invoke) s.args.push_back(rng.index(g.size() + 3));
        break;
      case 5:
        if (s.kind == StatementKind::invoke && !s.args.empty()) s.args.pop_back();
        break;
      case 6:
        if (s.kind == StatementKind::invoke) s.receiver = rng.index(g.size() + 3);
        break;
      default:
        std::reverse(g.statements.begin(), g.statements.end());
        break;
    }
  }
  if (rng.chance(0.3)) {
    while (g.size() < 26) g.statements.push_back(g.statements[rng.index(g.size())]);
  }
  return g;
}

}  // namespace

TEST_SUITE("genome") {

TEST_CASE("validate reports the documented violations") {
  auto e = testing::corpus_case("03-account-order");
  const Api& api = e.backend->api();
  Genome ok = genome_from_text("target flush\ns0 = new Account\ns0.flush()\n", api);
  CHECK(validate(ok, api).empty());

  Genome no_target = genome_from_text("target flush\ns0 = new Account\ns0.open()\n", api);
  CHECK(has(validate(no_target, api), Violation::Kind::target_call_missing));

  Genome forward = ok;
  forward.statements = {Statement::invoke(2, 1, {}), Statement::construct(0)};
  CHECK(has(validate(forward, api), Violation::Kind::forward_reference));

  Genome dangling = ok;
  dangling.statements[1].receiver = kNoSlot;
  CHECK(has(validate(dangling, api), Violation::Kind::dangling_reference));

  Genome unknown = ok;
  unknown.statements[1].routine = 99;
  CHECK(has(validate(unknown, api), Violation::Kind::unknown_symbol));

  Genome arity = ok;
  arity.statements[1].args = {0};
  CHECK(has(validate(arity, api), Violation::Kind::arity_mismatch));

  Genome longer = ok;
  for (int i = 0; i < 20; ++i) longer.statements.push_back(Statement::invoke(0, 0, {}));
  CHECK(has(validate(longer, api), Violation::Kind::length_bound));
  CHECK(validate(longer, api, 100).empty());
}

TEST_CASE("type and domain violations") {
  auto e = testing::corpus_case("04-range-check");
  const Api& api = e.backend->api();
  Genome g = genome_from_text("target substring\ns0 = index 3\ns1 = index 4\nsubstring(s0, s1)\n", api);
  CHECK(validate(g, api).empty());
  Genome bad = g;
  bad.statements[0].value = 10;
  CHECK(has(validate(bad, api), Violation::Kind::value_out_of_domain));

  auto c = testing::corpus_case("09-lazy-cache");
  const Api& capi = c.backend->api();
  Genome mixed = genome_from_text("target get\ns0 = new Cache\ns1 = key 4\ns0.get(s1)\n", capi);
  CHECK(validate(mixed, capi).empty());
  mixed.statements[2].args = {0};  // object where a key is expected
  CHECK(has(validate(mixed, capi), Violation::Kind::type_mismatch));
  mixed.statements[2].args = {1};
  mixed.statements[2].receiver = 1;  // key as receiver
  CHECK(has(validate(mixed, capi), Violation::Kind::type_mismatch));
}

TEST_CASE("repair is the identity on valid genomes") {
  auto e = testing::corpus_case("06-bounded-stack");
  const Api& api = e.backend->api();
  Rng rng(1);
  OperatorContext ctx{api, e.crash.target_routine};
  for (const Genome& g : guided_initialize(ctx, 200, rng)) {
    Rng a(9), b(9);
    CHECK(repair(g, api, a) == g);
    CHECK(a.next() == b.next());  // no draws consumed
  }
}

TEST_CASE("repair reinserts a lost target call") {
  auto e = testing::corpus_case("09-lazy-cache");
  const Api& api = e.backend->api();
  Genome g = genome_from_text("target get\ns0 = new Cache\ns0.load()\ns2 = key 9\ns0.get(s2)\n", api);
  erase_statement(g, 3);
  REQUIRE(target_calls(g) == 0);
  Rng rng(4);
  Genome fixed = repair(g, api, rng);
  CHECK(validate(fixed, api).empty());
  CHECK(target_calls(fixed) == 1);
}

TEST_CASE("repair of random mutilations") {
  Rng rng(77);
  int repaired = 0;
  int attempts = 0;
  for (const char* stem : {"03-account-order", "07-date-format", "08-request-chain", "09-lazy-cache"}) {
    auto e = testing::corpus_case(stem);
    const Api& api = e.backend->api();
    OperatorContext ctx{api, e.crash.target_routine};
    auto population = guided_initialize(ctx, 50, rng);
    for (int i = 0; i < 2500; ++i) {
      Genome broken = mutilate(population[rng.index(population.size())], api, rng);
      ++attempts;
      Genome fixed = repair(broken, api, rng);
      if (validate(fixed, api).empty() && fixed.calls_target()) ++repaired;
      Rng again(5);
      CHECK(repair(fixed, api, again) == fixed);  // idempotent
    }
  }
  CHECK(attempts == 10000);
  CHECK(repaired == attempts);
}

TEST_CASE("repair respects the length bound or refuses") {
  auto e = testing::corpus_case("06-bounded-stack");
  const Api& api = e.backend->api();
  Genome g;
  g.target_routine = e.crash.target_routine;
  g.statements.push_back(Statement::construct(0));
  for (int i = 0; i < 30; ++i) g.statements.push_back(Statement::invoke(e.crash.target_routine, 0, {}));
  Rng rng(2);
  Genome fixed = repair(g, api, rng, 10);
  CHECK(fixed.size() <= 10);
  CHECK(validate(fixed, api, 10).empty());

  auto d = testing::corpus_case("07-date-format");
  Genome one = genome_from_text("target parse\ns0 = separator \"/\"\ns1 = month 2\ns2 = day 30\nparse(s0, s1, s2)\n", d.backend->api());
  CHECK_THROWS_AS(repair(one, d.backend->api(), rng, 3), RepairImpossible);
}

TEST_CASE("erase and insert keep references consistent") {
  auto e = testing::corpus_case("04-range-check");
  const Api& api = e.backend->api();
  Genome g = genome_from_text("target substring\ns0 = index 3\ns1 = index 4\nsubstring(s0, s1)\n", api);
  insert_statement(g, 0, Statement::set_value(0, 7));
  CHECK(g.statements[3].args == std::vector<std::size_t>{1, 2});
  CHECK(validate(g, api).empty());
  erase_statement(g, 1);
  CHECK(g.statements[2].args == std::vector<std::size_t>{kNoSlot, 1});
}

TEST_CASE("text form round trips") {
  Rng rng(8);
  for (const char* stem : {"03-account-order", "07-date-format", "08-request-chain", "09-lazy-cache", "12-missing-config"}) {
    auto e = testing::corpus_case(stem);
    const Api& api = e.backend->api();
    OperatorContext ctx{api, e.crash.target_routine};
    for (const Genome& g : guided_initialize(ctx, 100, rng)) {
      const std::string text = genome_to_text(g, api);
      CHECK(genome_from_text(text, api) == g);
      CHECK(std::count(text.begin(), text.end(), '\n') == static_cast<std::ptrdiff_t>(g.size() + 1));
    }
  }
}

TEST_CASE("text form rejects malformed input") {
  auto e = testing::corpus_case("07-date-format");
  const Api& api = e.backend->api();
  CHECK_THROWS_AS(genome_from_text("", api), GenomeFormatError);
  CHECK_THROWS_AS(genome_from_text("target nothing\n", api), GenomeFormatError);
  CHECK_THROWS_AS(genome_from_text("target parse\ns0 = month thirteen\n", api), GenomeFormatError);
  CHECK_THROWS_AS(genome_from_text("target parse\ns1 = month 2\n", api), GenomeFormatError);
  CHECK_THROWS_AS(genome_from_text("target parse\ns0 = separator \"-\"\nparse(s0\n", api), GenomeFormatError);
  CHECK_THROWS_AS(genome_from_text("target parse\nfrobnicate(s0)\n", api), GenomeFormatError);
}

}
