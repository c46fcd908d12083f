#include <algorithm>
#include <cmath>

#include "crashrepro/genome.hpp"
#include "crashrepro/operators.hpp"
#include "crashrepro/scenario.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace crashrepro;

namespace {

const char* kMinimal = R"(
format_version: 1
name: minimal
domains:
  - {name: d, kind: int, min: 0, max: 2}
routines:
  - name: boom
    params: [{name: x, domain: d}]
    body:
      - {line: 5, throw: java.lang.RuntimeException}
)";

std::string with_body(const std::string& body_line) {
  return std::string(R"(
format_version: 1
name: t
domains:
  - {name: d, kind: int, min: 0, max: 2}
  - {name: e, kind: enum, values: [red, green]}
types:
  - name: Box
    fields: [{name: n}]
routines:
  - name: helper
    params: [{name: x, domain: d}]
    body:
      - {line: 1, return: true}
  - name: poke
    owner: Box
    params: [{name: x, domain: d}, {name: c, domain: e}]
    body:
)") + "      - " + body_line + "\n";
}

Scenario scenario_of(const SuiteEntry& e) { return dynamic_cast<const ScenarioBackend&>(*e.backend).scenario(); }

}  // namespace

TEST_SUITE("scenario") {

TEST_CASE("minimal scenario loads") {
  Scenario sc = parse_scenario(kMinimal);
  CHECK(sc.api.routines.size() == 1);
  CHECK(sc.api.routines[0].unit_path == "scenario.Functions");
  CHECK(sc.api.routines[0].file == "Functions.java");
  CHECK(sc.case_info.id == "minimal");
  CHECK(sc.case_info.target_frame == 1);
  CHECK(sc.probe_count == 1);
}

TEST_CASE("semantic validation") {
  CHECK_NOTHROW(parse_scenario(with_body("{line: 9, call: helper(x)}")));
  CHECK_NOTHROW(parse_scenario(with_body("{line: 9, set: this.n = x, if: c = \"green\" and x >= 1}")));
  CHECK_THROWS_AS(parse_scenario(with_body("{line: 9, call: missing(x)}")), ScenarioSemanticError);
  CHECK_THROWS_AS(parse_scenario(with_body("{line: 9, call: \"helper(x, x)\"}")), ScenarioSemanticError);
  CHECK_THROWS_AS(parse_scenario(with_body("{line: 9, set: this.m = 1}")), ScenarioSemanticError);
  CHECK_THROWS_AS(parse_scenario(with_body("{line: 9, return: true, if: y = 1}")), ScenarioSemanticError);
  CHECK_THROWS_AS(parse_scenario(with_body("{line: 9, return: true, if: c = \"blue\"}")), ScenarioSemanticError);
  CHECK_THROWS_AS(parse_scenario(with_body("{line: 9, return: true, if: x = \"red\"}")), ScenarioSemanticError);
  CHECK_NOTHROW(parse_scenario(with_body("{line: 1, return: true}")));  // Box.java, not Functions.java
  CHECK_THROWS_AS(parse_scenario("format_version: 1\nname: x\nroutines:\n"
                                 "  - {name: f, body: [{line: 3, return: true}]}\n"
                                 "  - {name: g, body: [{line: 3, return: true}]}\n"),
                  ScenarioSemanticError);
  CHECK_THROWS_AS(parse_scenario(with_body("{line: 9, return: true, if: x ~ 1}")), ScenarioParseError);
  CHECK_THROWS_AS(parse_scenario(with_body("{line: 9}")), ScenarioParseError);
  CHECK_THROWS_AS(parse_scenario(with_body("{line: 9, return: true, throw: E}")), ScenarioParseError);
  CHECK_THROWS_AS(parse_scenario("format_version: 2\nname: x\nroutines: []\n"), ScenarioParseError);
  CHECK_THROWS_AS(parse_scenario("format_version: 1\nname: [\n"), ScenarioParseError);
  CHECK_THROWS_AS(parse_scenario("format_version: 1\nname: x\ndomains: [{name: d, kind: int}]\nroutines: []\n"),
                  ScenarioSemanticError);
  CHECK_THROWS_AS(parse_scenario("format_version: 1\nname: x\ndomains: [{name: d, kind: int, min: 0, max: 2000000}]\nroutines: []\n"),
                  ScenarioSemanticError);
  CHECK_THROWS_AS(load_scenario("/nonexistent/file.scn"), ScenarioParseError);
}

TEST_CASE("method calls stay within their owner") {
  const std::string text = R"yaml(
format_version: 1
name: t
types: [{name: A}, {name: B}]
routines:
  - {name: fa, owner: A, body: [{line: 1, return: true}]}
  - {name: fb, owner: B, body: [{line: 2, call: "fa()"}]}
)yaml";
  CHECK_THROWS_AS(parse_scenario(text), ScenarioSemanticError);
}

TEST_CASE("comparison distances") {
  CHECK(comparison_distance(3, CmpOp::eq, 7) == 4);
  CHECK(comparison_distance(7, CmpOp::eq, 7) == 0);
  CHECK(comparison_distance(7, CmpOp::ne, 7) == 1);
  CHECK(comparison_distance(6, CmpOp::ne, 7) == 0);
  CHECK(comparison_distance(5, CmpOp::lt, 2) == 4);
  CHECK(comparison_distance(1, CmpOp::lt, 2) == 0);
  CHECK(comparison_distance(5, CmpOp::le, 2) == 3);
  CHECK(comparison_distance(2, CmpOp::le, 2) == 0);
  CHECK(comparison_negation_distance(7, CmpOp::eq, 7) == 1);
  CHECK(comparison_negation_distance(7, CmpOp::ne, 4) == 3);
  CHECK(comparison_negation_distance(1, CmpOp::lt, 4) == 3);
  CHECK(comparison_negation_distance(2, CmpOp::le, 4) == 3);
  Rng rng(3);
  for (int i = 0; i < 5000; ++i) {
    auto a = rng.between(-20, 20);
    auto b = rng.between(-20, 20);
    auto op = static_cast<CmpOp>(rng.index(4));
    const bool holds = op == CmpOp::eq ? a == b : op == CmpOp::ne ? a != b : op == CmpOp::lt ? a < b : a <= b;
    CHECK((comparison_distance(a, op, b) == 0) == holds);
    if (holds) {
      CHECK(comparison_negation_distance(a, op, b) > 0);
    } else {
      CHECK(comparison_distance(a, op, b) > 0);
    }
  }
}

TEST_CASE("unconditional throw crashes at that line") {
  Scenario sc = parse_scenario(kMinimal);
  Genome g = genome_from_text("target boom\ns0 = d 1\nboom(s0)\n", sc.api);
  ExecutionOutcome out = execute(sc, g);
  REQUIRE(out.kind == OutcomeKind::crashed);
  REQUIRE(out.trace);
  CHECK(out.trace->exception_type == "java.lang.RuntimeException");
  CHECK(out.trace->frames[0] == StackFrame{"scenario.Functions", "boom", "Functions.java", 5});
  CHECK(out.trace->frames[1] == StackFrame{"crashrepro.GeneratedTest", "test", "GeneratedTest.gen", 2});
}

TEST_CASE("empty-effect genome completes") {
  auto e = testing::corpus_case("03-account-order");
  Scenario sc = scenario_of(e);
  Genome g = genome_from_text("target flush\ns0 = new Account\ns0.open()\ns0.flush()\n", sc.api);
  ExecutionOutcome out = execute(sc, g);
  CHECK(out.kind == OutcomeKind::completed);
  CHECK_FALSE(out.trace);
  const LineProbe* p = out.find_probe(2, 18);
  REQUIRE(p);
  CHECK(p->reached);
  CHECK_FALSE(p->executed);
  CHECK(p->best_distance == 1.0);  // state 1, guard state = 2
}

TEST_CASE("order-dependent scenario reproduces its reference trace") {
  auto e = testing::corpus_case("03-account-order");
  Scenario sc = scenario_of(e);
  CHECK(sc.api.routines.size() >= 2);
  CHECK(sc.case_info.minimal_calls == 3);
  Genome g = genome_from_text("target flush\ns0 = new Account\ns0.open()\ns0.close()\ns0.flush()\n", sc.api);
  ExecutionOutcome out = execute(sc, g);
  REQUIRE(out.kind == OutcomeKind::crashed);
  CHECK(out.trace->exception_type == e.crash.trace.exception_type);
  CHECK(trace_distance(e.crash.trace, e.crash.target_frame_level, *out.trace) == 0.0);

  // any other order leaves the guard false
  Genome wrong = genome_from_text("target flush\ns0 = new Account\ns0.close()\ns0.open()\ns0.flush()\n", sc.api);
  CHECK(execute(sc, wrong).kind == OutcomeKind::completed);
}

TEST_CASE("nested calls produce the live stack") {
  auto e = testing::corpus_case("08-request-chain");
  Scenario sc = scenario_of(e);
  Genome g = genome_from_text("target handle\ns0 = mode \"admin\"\ns1 = level 1\nhandle(s0, s1)\n", sc.api);
  ExecutionOutcome out = execute(sc, g);
  REQUIRE(out.kind == OutcomeKind::crashed);
  REQUIRE(out.trace->frames.size() == 4);
  CHECK(out.trace->frames[0].routine == "authorize");
  CHECK(out.trace->frames[0].line == 100);
  CHECK(out.trace->frames[1].routine == "dispatch");
  CHECK(out.trace->frames[1].line == 90);
  CHECK(out.trace->frames[2].routine == "handle");
  CHECK(out.trace->frames[2].line == 80);
  CHECK(out.trace->frames[3].line == 3);
  CHECK(trace_distance(e.crash.trace, 3, *out.trace) == 0.0);
}

TEST_CASE("runaway recursion hits the step budget") {
  auto e = testing::corpus_case("10-runaway-recursion");
  Scenario sc = scenario_of(e);
  Genome g = genome_from_text("target divide\ns0 = operand 1\ns1 = operand 5\ndivide(s0, s1)\n", sc.api);
  ExecutionOutcome out = execute(sc, g, 500);
  CHECK(out.kind == OutcomeKind::budget_exceeded);
  CHECK(out.steps_executed <= 500);
  CHECK_FALSE(out.trace);
  CHECK(execute(sc, g).kind == OutcomeKind::budget_exceeded);
}

TEST_CASE("determinism and coverage monotonicity on random genomes") {
  Rng rng(21);
  for (const char* stem : {"03-account-order", "06-bounded-stack", "09-lazy-cache", "07-date-format"}) {
    auto e = testing::corpus_case(stem);
    Scenario sc = scenario_of(e);
    OperatorContext ctx{sc.api, e.crash.target_routine};
    auto population = guided_initialize(ctx, 40, rng);
    for (const Genome& g : population) {
      const ExecutionOutcome first = execute(sc, g);
      for (int rep = 0; rep < 25; ++rep) CHECK(execute(sc, g) == first);
      if (first.kind == OutcomeKind::crashed) {
        // innermost frame is the bound routine for that line
        const StackFrame& top = first.trace->frames.front();
        auto r = sc.api.find_routine(top.routine);
        REQUIRE(r);
        CHECK(first.find_probe(*r, top.line));
        continue;
      }
      const auto full = first.covered_lines();
      for (std::size_t cut = 0; cut <= g.size(); ++cut) {
        Genome prefix = g;
        prefix.statements.resize(cut);
        const auto part = execute(sc, prefix).covered_lines();
        CHECK(std::includes(full.begin(), full.end(), part.begin(), part.end()));
      }
    }
  }
}

TEST_CASE("thousand repeated executions are identical") {
  auto e = testing::corpus_case("06-bounded-stack");
  Scenario sc = scenario_of(e);
  Genome g = genome_from_text("target push\ns0 = new BoundedStack\ns0.push()\ns0.push()\ns0.pop()\ns0.push()\n", sc.api);
  const ExecutionOutcome first = execute(sc, g);
  int same = 0;
  for (int i = 0; i < 1000; ++i) same += execute(sc, g) == first;
  CHECK(same == 1000);
}

}
