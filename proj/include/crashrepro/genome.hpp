#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "crashrepro/api.hpp"
#include "crashrepro/rng.hpp"

namespace crashrepro {

inline constexpr std::size_t kDefaultMaxLength = 20;

// Slots are named by the index of the statement that defines them.
inline constexpr std::size_t kNoSlot = std::numeric_limits<std::size_t>::max();

enum class StatementKind { construct, set_value, invoke };

struct Statement {
  StatementKind kind = StatementKind::invoke;
  std::size_t type = 0;            // construct: type index; set_value: domain index
  std::int64_t value = 0;          // set_value
  std::size_t routine = 0;         // invoke
  std::size_t receiver = kNoSlot;  // invoke of a method
  std::vector<std::size_t> args;   // invoke

  bool defines_slot() const { return kind != StatementKind::invoke; }
  bool operator==(const Statement&) const = default;

  static Statement construct(std::size_t type) { return {StatementKind::construct, type, 0, 0, kNoSlot, {}}; }
  static Statement set_value(std::size_t domain, std::int64_t value) {
    return {StatementKind::set_value, domain, value, 0, kNoSlot, {}};
  }
  static Statement invoke(std::size_t routine, std::size_t receiver, std::vector<std::size_t> args) {
    return {StatementKind::invoke, 0, 0, routine, receiver, std::move(args)};
  }
};

struct Genome {
  std::vector<Statement> statements;
  std::size_t target_routine = 0;

  std::size_t size() const { return statements.size(); }
  bool calls_target() const;
  bool operator==(const Genome&) const = default;
};

struct Violation {
  enum class Kind {
    length_bound,
    target_call_missing,
    unknown_symbol,
    forward_reference,
    dangling_reference,
    type_mismatch,
    arity_mismatch,
    value_out_of_domain,
  };
  Kind kind;
  std::size_t statement = kNoSlot;
  std::string message;
};

using ValidityReport = std::vector<Violation>;

ValidityReport validate(const Genome& genome, const Api& api, std::size_t max_length = kDefaultMaxLength);

class RepairImpossible : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Returns a genome that passes validate(). Valid input is returned unchanged
// without drawing from `rng`.
Genome repair(Genome genome, const Api& api, Rng& rng, std::size_t max_length = kDefaultMaxLength);

// Editing helpers that keep slot references consistent: references to an
// erased statement become kNoSlot; later references shift.
void erase_statement(Genome& genome, std::size_t index);
void insert_statement(Genome& genome, std::size_t index, Statement statement);

// Line-oriented text form, one statement per line:
//   target <routine>
//   s0 = new <Type>
//   s1 = <domain> <value>
//   s0.<routine>(s1)
//   <routine>(s1)
std::string genome_to_text(const Genome& genome, const Api& api);
Genome genome_from_text(std::string_view text, const Api& api);

class GenomeFormatError : public std::runtime_error {
 public:
  GenomeFormatError(std::size_t line, const std::string& reason)
      : std::runtime_error("genome line " + std::to_string(line) + ": " + reason) {}
};

}  // namespace crashrepro
