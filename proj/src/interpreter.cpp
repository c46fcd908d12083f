#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>

#include "crashrepro/genome.hpp"
#include "crashrepro/scenario.hpp"

namespace crashrepro {

double comparison_distance(std::int64_t lhs, CmpOp op, std::int64_t rhs) {
  const double a = static_cast<double>(lhs);
  const double b = static_cast<double>(rhs);
  switch (op) {
    case CmpOp::eq:
      return std::abs(a - b);
    case CmpOp::ne:
      return lhs != rhs ? 0.0 : 1.0;
    case CmpOp::lt:
      return lhs < rhs ? 0.0 : a - b + 1.0;
    case CmpOp::le:
      return lhs <= rhs ? 0.0 : a - b;
  }
  return 1.0;
}

double comparison_negation_distance(std::int64_t lhs, CmpOp op, std::int64_t rhs) {
  const double a = static_cast<double>(lhs);
  const double b = static_cast<double>(rhs);
  switch (op) {
    case CmpOp::eq:
      return lhs == rhs ? 1.0 : 0.0;
    case CmpOp::ne:
      return std::abs(a - b);
    case CmpOp::lt:
      return lhs < rhs ? b - a : 0.0;
    case CmpOp::le:
      return lhs <= rhs ? b - a + 1.0 : 0.0;
  }
  return 1.0;
}

namespace {

constexpr const char* kTestUnit = "crashrepro.GeneratedTest";
constexpr const char* kTestRoutine = "test";
constexpr const char* kTestFile = "GeneratedTest.gen";

struct Frame {
  std::size_t routine;
  std::size_t pc;
  std::size_t receiver;  // object id, or kNoSlot for free routines
  std::size_t arg_base;  // offset into the argument stack
};

class Interpreter {
 public:
  Interpreter(const Scenario& scenario, std::size_t step_budget) : sc_(scenario), budget_(step_budget) {
    out_.probes.resize(sc_.probe_count);
    for (std::size_t r = 0; r < sc_.bodies.size(); ++r) {
      for (std::size_t i = 0; i < sc_.bodies[r].size(); ++i) {
        LineProbe& p = out_.probes[sc_.probe_offset[r] + i];
        p.routine = r;
        p.line = sc_.bodies[r][i].line;
        p.best_distance = std::numeric_limits<double>::infinity();
      }
    }
    out_.entered.assign(sc_.bodies.size(), false);
  }

  ExecutionOutcome run(const Genome& genome) {
    slots_.assign(genome.size(), 0);
    for (std::size_t i = 0; i < genome.size(); ++i) {
      if (!step()) return finish(OutcomeKind::budget_exceeded);
      const Statement& s = genome.statements[i];
      switch (s.kind) {
        case StatementKind::construct:
          slots_[i] = static_cast<std::int64_t>(new_object(s.type));
          break;
        case StatementKind::set_value:
          slots_[i] = s.value;
          break;
        case StatementKind::invoke: {
          std::size_t receiver = s.receiver == kNoSlot ? kNoSlot : static_cast<std::size_t>(slots_[s.receiver]);
          std::size_t base = arg_stack_.size();
          for (std::size_t a : s.args) arg_stack_.push_back(slots_[a]);
          if (auto kind = call(s.routine, receiver, base, i)) return finish(*kind);
          break;
        }
      }
    }
    return finish(OutcomeKind::completed);
  }

 private:
  bool step() {
    if (out_.steps_executed >= budget_) return false;
    ++out_.steps_executed;
    return true;
  }

  std::size_t new_object(std::size_t type) {
    std::size_t id = object_base_.size();
    object_base_.push_back(fields_.size());
    for (const Field& f : sc_.api.types[type].fields) fields_.push_back(f.initial);
    return id;
  }

  std::int64_t value_of(const Operand& op, const Frame& frame) const {
    switch (op.kind) {
      case Operand::Kind::param:
        return arg_stack_[frame.arg_base + static_cast<std::size_t>(op.value)];
      case Operand::Kind::field:
        return fields_[object_base_[frame.receiver] + static_cast<std::size_t>(op.value)];
      case Operand::Kind::constant:
        return op.value;
    }
    return 0;
  }

  // Sum of per-conjunct distances; 0 iff the guard holds.
  double guard_distance(const Guard& guard, const Frame& frame) const {
    double d = 0.0;
    for (const Comparison& c : guard) d += comparison_distance(value_of(c.lhs, frame), c.op, value_of(c.rhs, frame));
    return d;
  }

  // Smallest distance that would make a holding guard fail.
  double guard_negation_distance(const Guard& guard, const Frame& frame) const {
    if (guard.empty()) return 1.0;
    double best = std::numeric_limits<double>::infinity();
    for (const Comparison& c : guard) {
      best = std::min(best, comparison_negation_distance(value_of(c.lhs, frame), c.op, value_of(c.rhs, frame)));
    }
    return best;
  }

  // Runs one top-level invocation; returns an outcome kind when execution ends.
  std::optional<OutcomeKind> call(std::size_t routine, std::size_t receiver, std::size_t arg_base, std::size_t test_line) {
    stack_.clear();
    stack_.push_back({routine, 0, receiver, arg_base});
    out_.entered[routine] = true;
    while (!stack_.empty()) {
      Frame& top = stack_.back();
      const auto& body = sc_.bodies[top.routine];
      if (top.pc >= body.size()) {
        pop_frame();
        continue;
      }
      if (!step()) return OutcomeKind::budget_exceeded;
      const BodyStatement& stmt = body[top.pc];
      LineProbe& probe = out_.probes[sc_.probe_offset[top.routine] + top.pc];
      probe.reached = true;
      double distance = guard_distance(stmt.guard, top);
      if (distance > 0.0) {
        probe.best_distance = std::min(probe.best_distance, distance);
        ++top.pc;
        continue;
      }
      probe.executed = true;
      switch (stmt.kind) {
        case BodyStatement::Kind::throw_exception:
          out_.escape_distance = guard_negation_distance(stmt.guard, top);
          out_.trace = synthesize_trace(stmt.exception_type, test_line);
          return OutcomeKind::crashed;
        case BodyStatement::Kind::call: {
          std::size_t base = arg_stack_.size();
          for (const Operand& a : stmt.args) arg_stack_.push_back(value_of(a, top));
          std::size_t callee_receiver = sc_.api.routines[stmt.callee].owner ? top.receiver : kNoSlot;
          out_.entered[stmt.callee] = true;
          stack_.push_back({stmt.callee, 0, callee_receiver, base});  // invalidates `top`
          break;
        }
        case BodyStatement::Kind::set_field:
          fields_[object_base_[top.receiver] + stmt.field] = value_of(stmt.value, top);
          ++top.pc;
          break;
        case BodyStatement::Kind::return_now:
          pop_frame();
          break;
      }
    }
    arg_stack_.resize(arg_base);
    return std::nullopt;
  }

  void pop_frame() {
    arg_stack_.resize(stack_.back().arg_base);
    stack_.pop_back();
    if (!stack_.empty()) ++stack_.back().pc;
  }

  StackTrace synthesize_trace(const std::string& exception_type, std::size_t test_line) const {
    StackTrace trace;
    trace.exception_type = exception_type;
    for (auto it = stack_.rbegin(); it != stack_.rend(); ++it) {
      const Signature& sig = sc_.api.routines[it->routine];
      trace.frames.push_back({sig.unit_path, sig.name, sig.file, sc_.bodies[it->routine][it->pc].line});
    }
    trace.frames.push_back({kTestUnit, kTestRoutine, kTestFile, static_cast<int>(test_line) + 1});
    return trace;
  }

  ExecutionOutcome finish(OutcomeKind kind) {
    out_.kind = kind;
    if (kind != OutcomeKind::crashed) out_.trace.reset();
    return std::move(out_);
  }

  const Scenario& sc_;
  std::size_t budget_;
  ExecutionOutcome out_;
  std::vector<std::int64_t> slots_;
  std::vector<std::size_t> object_base_;
  std::vector<std::int64_t> fields_;
  std::vector<std::int64_t> arg_stack_;
  std::vector<Frame> stack_;
};

}  // namespace

ExecutionOutcome execute(const Scenario& scenario, const Genome& genome, std::size_t step_budget) {
  return Interpreter(scenario, step_budget).run(genome);
}

}  // namespace crashrepro
