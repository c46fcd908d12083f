#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "crashrepro/api.hpp"
#include "crashrepro/outcome.hpp"

namespace crashrepro {

struct Genome;

inline constexpr std::size_t kDefaultStepBudget = 10'000;
inline constexpr std::size_t kMaxBodyStatements = 32;

enum class CmpOp { eq, ne, lt, le };

struct Operand {
  enum class Kind { param, field, constant };
  Kind kind = Kind::constant;
  std::int64_t value = 0;  // parameter index, field index, or the constant

  bool operator==(const Operand&) const = default;
};

struct Comparison {
  Operand lhs;
  CmpOp op = CmpOp::eq;
  Operand rhs;

  bool operator==(const Comparison&) const = default;
};

// Conjunction of atomic comparisons; empty means "always".
using Guard = std::vector<Comparison>;

struct BodyStatement {
  enum class Kind { throw_exception, call, set_field, return_now };
  Kind kind = Kind::return_now;
  int line = 1;
  Guard guard;
  std::string exception_type;  // throw_exception
  std::size_t callee = 0;      // call
  std::vector<Operand> args;   // call
  std::size_t field = 0;       // set_field
  Operand value;               // set_field
};

// Crash-case metadata carried alongside a scenario in the corpus.
struct ScenarioCaseInfo {
  std::string id;
  int target_frame = 1;
  int oracle_max_calls = 3;
  std::optional<int> minimal_calls;
  std::string difficulty;
};

struct Scenario {
  std::string name;
  std::string package;
  Api api;
  std::vector<std::vector<BodyStatement>> bodies;  // parallel to api.routines
  ScenarioCaseInfo case_info;

  // Index of the first probe for each routine; probes are laid out routine by
  // routine in body order.
  std::vector<std::size_t> probe_offset;
  std::size_t probe_count = 0;
};

class ScenarioParseError : public std::runtime_error {
 public:
  ScenarioParseError(const std::string& location, const std::string& reason)
      : std::runtime_error(location + ": " + reason) {}
};

class ScenarioSemanticError : public std::runtime_error {
 public:
  ScenarioSemanticError(const std::string& location, const std::string& reason)
      : std::runtime_error(location + ": " + reason) {}
};

Scenario load_scenario(const std::filesystem::path& path);
Scenario parse_scenario(std::string_view text, const std::string& source_name = "<scenario>");

// Runs `genome` against `scenario`. Deterministic; never throws for genomes
// that pass validate().
ExecutionOutcome execute(const Scenario& scenario, const Genome& genome, std::size_t step_budget = kDefaultStepBudget);

// Distance for making one comparison true (0 when it already holds), and for
// making a currently-true comparison false.
double comparison_distance(std::int64_t lhs, CmpOp op, std::int64_t rhs);
double comparison_negation_distance(std::int64_t lhs, CmpOp op, std::int64_t rhs);

}  // namespace crashrepro
