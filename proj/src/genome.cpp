#include "crashrepro/genome.hpp"

#include <algorithm>
#include <charconv>
#include <optional>
#include <sstream>

namespace crashrepro {

namespace {

// What a slot holds: an object of a type, or a value of a domain.
struct SlotType {
  bool object = false;
  std::size_t index = 0;
  bool operator==(const SlotType&) const = default;
};

std::optional<SlotType> slot_type(const Statement& s) {
  switch (s.kind) {
    case StatementKind::construct:
      return SlotType{true, s.type};
    case StatementKind::set_value:
      return SlotType{false, s.type};
    case StatementKind::invoke:
      break;
  }
  return std::nullopt;
}

std::string describe(std::size_t index) { return "statement " + std::to_string(index); }

// Nearest slot before `limit` holding `want`; kNoSlot when none exists.
std::size_t nearest_compatible(const std::vector<Statement>& stmts, std::size_t limit, SlotType want) {
  for (std::size_t i = limit; i-- > 0;) {
    if (slot_type(stmts[i]) == want) return i;
  }
  return kNoSlot;
}

bool symbols_known(const Statement& s, const Api& api) {
  switch (s.kind) {
    case StatementKind::construct:
      return s.type < api.types.size();
    case StatementKind::set_value:
      return s.type < api.domains.size();
    case StatementKind::invoke:
      return s.routine < api.routines.size();
  }
  return false;
}

Statement random_value(std::size_t domain, const Api& api, Rng& rng) {
  const Domain& d = api.domains[domain];
  return Statement::set_value(domain, d.values[rng.index(d.size())]);
}

// Makes `ref` point at an earlier slot of type `want` in `out`, appending a
// fresh definition to `out` when no compatible slot exists yet.
std::size_t resolve_reference(std::vector<Statement>& out, std::size_t ref, SlotType want, const Api& api, Rng& rng) {
  if (ref != kNoSlot && ref < out.size() && slot_type(out[ref]) == want) return ref;
  std::size_t nearest = nearest_compatible(out, out.size(), want);
  if (nearest != kNoSlot) return nearest;
  out.push_back(want.object ? Statement::construct(want.index) : random_value(want.index, api, rng));
  return out.size() - 1;
}

// Appends an invoke of `routine` preceded by freshly generated dependencies.
void append_fresh_invoke(std::vector<Statement>& out, std::size_t routine, const Api& api, Rng& rng) {
  const Signature& sig = api.routines[routine];
  std::size_t receiver = kNoSlot;
  if (sig.owner) {
    out.push_back(Statement::construct(*sig.owner));
    receiver = out.size() - 1;
  }
  std::vector<std::size_t> args;
  for (const Param& p : sig.params) {
    out.push_back(random_value(p.domain, api, rng));
    args.push_back(out.size() - 1);
  }
  out.push_back(Statement::invoke(routine, receiver, std::move(args)));
}

bool references(const Statement& s, std::size_t slot) {
  return s.kind == StatementKind::invoke && (s.receiver == slot || std::find(s.args.begin(), s.args.end(), slot) != s.args.end());
}

// Removes statements until the genome fits in `max_length`, keeping the
// first target invoke and its dependencies.
void shrink(Genome& g, std::size_t max_length) {
  while (g.size() > max_length) {
    std::size_t anchor = kNoSlot;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const Statement& s = g.statements[i];
      if (s.kind == StatementKind::invoke && s.routine == g.target_routine) {
        anchor = i;
        break;
      }
    }
    auto is_target = [&](std::size_t i) {
      const Statement& s = g.statements[i];
      return s.kind == StatementKind::invoke && s.routine == g.target_routine;
    };
    auto unreferenced = [&](std::size_t i) {
      return std::none_of(g.statements.begin() + static_cast<std::ptrdiff_t>(i) + 1, g.statements.end(),
                          [&](const Statement& s) { return references(s, i); });
    };
    std::size_t victim = kNoSlot;
    for (std::size_t i = g.size(); i-- > 0 && victim == kNoSlot;) {
      if (g.statements[i].kind == StatementKind::invoke && !is_target(i)) victim = i;
    }
    for (std::size_t i = g.size(); i-- > 0 && victim == kNoSlot;) {
      if (g.statements[i].defines_slot() && unreferenced(i)) victim = i;
    }
    for (std::size_t i = g.size(); i-- > 0 && victim == kNoSlot;) {
      if (is_target(i) && i != anchor) victim = i;
    }
    if (victim == kNoSlot) {
      throw RepairImpossible("maximum length " + std::to_string(max_length) +
                             " cannot hold the target call and its dependencies");
    }
    erase_statement(g, victim);
  }
}

}  // namespace

bool Genome::calls_target() const {
  return std::any_of(statements.begin(), statements.end(), [&](const Statement& s) {
    return s.kind == StatementKind::invoke && s.routine == target_routine;
  });
}

ValidityReport validate(const Genome& genome, const Api& api, std::size_t max_length) {
  ValidityReport report;
  auto add = [&](Violation::Kind kind, std::size_t index, std::string message) {
    report.push_back({kind, index, std::move(message)});
  };
  if (genome.size() < 1 || genome.size() > max_length) {
    add(Violation::Kind::length_bound, kNoSlot,
        "length " + std::to_string(genome.size()) + " outside [1, " + std::to_string(max_length) + "]");
  }
  if (genome.target_routine >= api.routines.size()) {
    add(Violation::Kind::unknown_symbol, kNoSlot, "target routine out of range");
  }
  if (!genome.calls_target()) add(Violation::Kind::target_call_missing, kNoSlot, "target call missing");

  const auto& stmts = genome.statements;
  auto check_ref = [&](std::size_t i, std::size_t ref, SlotType want, const std::string& what) {
    if (ref == kNoSlot || ref >= stmts.size()) {
      add(Violation::Kind::dangling_reference, i, describe(i) + ": dangling " + what);
    } else if (ref >= i) {
      add(Violation::Kind::forward_reference, i, describe(i) + ": forward reference in " + what);
    } else if (slot_type(stmts[ref]) != want) {
      add(Violation::Kind::type_mismatch, i, describe(i) + ": incompatible " + what);
    }
  };
  for (std::size_t i = 0; i < stmts.size(); ++i) {
    const Statement& s = stmts[i];
    if (!symbols_known(s, api)) {
      add(Violation::Kind::unknown_symbol, i, describe(i) + ": unknown type, domain or routine");
      continue;
    }
    if (s.kind == StatementKind::set_value && !api.domains[s.type].contains(s.value)) {
      add(Violation::Kind::value_out_of_domain, i, describe(i) + ": value outside its domain");
    }
    if (s.kind != StatementKind::invoke) continue;
    const Signature& sig = api.routines[s.routine];
    if (sig.owner) {
      check_ref(i, s.receiver, SlotType{true, *sig.owner}, "receiver");
    } else if (s.receiver != kNoSlot) {
      add(Violation::Kind::type_mismatch, i, describe(i) + ": free routine given a receiver");
    }
    if (s.args.size() != sig.params.size()) {
      add(Violation::Kind::arity_mismatch, i, describe(i) + ": wrong number of arguments");
      continue;
    }
    for (std::size_t a = 0; a < s.args.size(); ++a) {
      check_ref(i, s.args[a], SlotType{false, sig.params[a].domain}, "argument " + std::to_string(a));
    }
  }
  return report;
}

Genome repair(Genome genome, const Api& api, Rng& rng, std::size_t max_length) {
  if (genome.target_routine >= api.routines.size()) throw RepairImpossible("target routine is not part of the api");
  if (validate(genome, api, max_length).empty()) return genome;

  std::vector<std::size_t> remap(genome.size(), kNoSlot);
  std::vector<Statement> out;
  out.reserve(genome.size() + 4);
  for (std::size_t i = 0; i < genome.size(); ++i) {
    Statement s = std::move(genome.statements[i]);
    if (!symbols_known(s, api)) continue;
    auto old_ref = [&](std::size_t ref) { return ref != kNoSlot && ref < i ? remap[ref] : kNoSlot; };
    switch (s.kind) {
      case StatementKind::construct:
        break;
      case StatementKind::set_value:
        if (!api.domains[s.type].contains(s.value)) s = random_value(s.type, api, rng);
        break;
      case StatementKind::invoke: {
        const Signature& sig = api.routines[s.routine];
        std::size_t receiver = kNoSlot;
        if (sig.owner) receiver = resolve_reference(out, old_ref(s.receiver), SlotType{true, *sig.owner}, api, rng);
        std::vector<std::size_t> args(sig.params.size(), kNoSlot);
        for (std::size_t a = 0; a < sig.params.size(); ++a) {
          std::size_t ref = a < s.args.size() ? old_ref(s.args[a]) : kNoSlot;
          args[a] = resolve_reference(out, ref, SlotType{false, sig.params[a].domain}, api, rng);
        }
        s.receiver = receiver;
        s.args = std::move(args);
        break;
      }
    }
    remap[i] = out.size();
    out.push_back(std::move(s));
  }
  genome.statements = std::move(out);
  if (!genome.calls_target()) append_fresh_invoke(genome.statements, genome.target_routine, api, rng);
  shrink(genome, max_length);
  return genome;
}

void erase_statement(Genome& genome, std::size_t index) {
  auto& stmts = genome.statements;
  stmts.erase(stmts.begin() + static_cast<std::ptrdiff_t>(index));
  auto fix = [&](std::size_t& ref) {
    if (ref == kNoSlot) return;
    if (ref == index) {
      ref = kNoSlot;
    } else if (ref > index) {
      --ref;
    }
  };
  for (Statement& s : stmts) {
    fix(s.receiver);
    for (std::size_t& a : s.args) fix(a);
  }
}

void insert_statement(Genome& genome, std::size_t index, Statement statement) {
  auto& stmts = genome.statements;
  for (Statement& s : stmts) {
    if (s.receiver != kNoSlot && s.receiver >= index) ++s.receiver;
    for (std::size_t& a : s.args) {
      if (a != kNoSlot && a >= index) ++a;
    }
  }
  stmts.insert(stmts.begin() + static_cast<std::ptrdiff_t>(index), std::move(statement));
}

std::string genome_to_text(const Genome& genome, const Api& api) {
  std::ostringstream out;
  out << "target " << api.routines.at(genome.target_routine).name << "\n";
  auto slot = [](std::size_t ref) { return ref == kNoSlot ? std::string("?") : "s" + std::to_string(ref); };
  for (std::size_t i = 0; i < genome.size(); ++i) {
    const Statement& s = genome.statements[i];
    switch (s.kind) {
      case StatementKind::construct:
        out << slot(i) << " = new " << api.types.at(s.type).name << "\n";
        break;
      case StatementKind::set_value: {
        const Domain& d = api.domains.at(s.type);
        out << slot(i) << " = " << d.name << " " << d.render(s.value) << "\n";
        break;
      }
      case StatementKind::invoke: {
        if (s.receiver != kNoSlot) out << slot(s.receiver) << ".";
        out << api.routines.at(s.routine).name << "(";
        for (std::size_t a = 0; a < s.args.size(); ++a) out << (a ? ", " : "") << slot(s.args[a]);
        out << ")\n";
        break;
      }
    }
  }
  return out.str();
}

Genome genome_from_text(std::string_view text, const Api& api) {
  Genome genome;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  bool have_target = false;
  auto parse_slot = [&](std::string_view token) -> std::size_t {
    if (token.size() < 2 || token[0] != 's') throw GenomeFormatError(line_no, "expected slot name, got '" + std::string(token) + "'");
    std::size_t value = 0;
    auto [ptr, ec] = std::from_chars(token.data() + 1, token.data() + token.size(), value);
    if (ec != std::errc() || ptr != token.data() + token.size()) throw GenomeFormatError(line_no, "bad slot '" + std::string(token) + "'");
    return value;
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::string_view view(line);
    if (!have_target) {
      if (view.substr(0, 7) != "target ") throw GenomeFormatError(line_no, "expected 'target <routine>'");
      auto routine = api.find_routine(view.substr(7));
      if (!routine) throw GenomeFormatError(line_no, "unknown routine '" + std::string(view.substr(7)) + "'");
      genome.target_routine = *routine;
      have_target = true;
      continue;
    }
    const std::size_t index = genome.size();
    std::size_t eq = view.find(" = ");
    if (eq != std::string_view::npos && view.substr(0, eq).find('(') == std::string_view::npos) {
      if (parse_slot(view.substr(0, eq)) != index) throw GenomeFormatError(line_no, "slot name must match statement index");
      std::string_view rhs = view.substr(eq + 3);
      if (rhs.substr(0, 4) == "new ") {
        auto type = api.find_type(rhs.substr(4));
        if (!type) throw GenomeFormatError(line_no, "unknown type '" + std::string(rhs.substr(4)) + "'");
        genome.statements.push_back(Statement::construct(*type));
        continue;
      }
      std::size_t space = rhs.find(' ');
      if (space == std::string_view::npos) throw GenomeFormatError(line_no, "expected '<domain> <value>'");
      auto domain = api.find_domain(rhs.substr(0, space));
      if (!domain) throw GenomeFormatError(line_no, "unknown domain '" + std::string(rhs.substr(0, space)) + "'");
      auto value = api.domains[*domain].parse(rhs.substr(space + 1));
      if (!value) throw GenomeFormatError(line_no, "value outside domain '" + api.domains[*domain].name + "'");
      genome.statements.push_back(Statement::set_value(*domain, *value));
      continue;
    }
    std::size_t open = view.find('(');
    if (open == std::string_view::npos || view.back() != ')') throw GenomeFormatError(line_no, "expected an invocation");
    std::string_view callee = view.substr(0, open);
    std::size_t receiver = kNoSlot;
    if (std::size_t dot = callee.find('.'); dot != std::string_view::npos) {
      receiver = parse_slot(callee.substr(0, dot));
      callee = callee.substr(dot + 1);
    }
    auto routine = api.find_routine(callee);
    if (!routine) throw GenomeFormatError(line_no, "unknown routine '" + std::string(callee) + "'");
    std::vector<std::size_t> args;
    std::string_view inner = view.substr(open + 1, view.size() - open - 2);
    while (!inner.empty()) {
      std::size_t comma = inner.find(", ");
      args.push_back(parse_slot(inner.substr(0, comma)));
      inner = comma == std::string_view::npos ? std::string_view{} : inner.substr(comma + 2);
    }
    genome.statements.push_back(Statement::invoke(*routine, receiver, std::move(args)));
  }
  if (!have_target) throw GenomeFormatError(line_no, "missing 'target' line");
  return genome;
}

}  // namespace crashrepro
