#include "crashrepro/api.hpp"

#include <algorithm>
#include <charconv>

#include "crashrepro/crash_case.hpp"
#include "crashrepro/outcome.hpp"
#include "json.hpp"

namespace crashrepro {

namespace {

template <typename T>
std::optional<std::size_t> find_named(const std::vector<T>& items, std::string_view name) {
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i].name == name) return i;
  }
  return std::nullopt;
}

}  // namespace

bool Domain::contains(std::int64_t v) const { return std::find(values.begin(), values.end(), v) != values.end(); }

std::string Domain::render(std::int64_t v) const {
  switch (kind) {
    case DomainKind::boolean:
      return v != 0 ? "true" : "false";
    case DomainKind::enumeration:
      if (v >= 0 && static_cast<std::size_t>(v) < labels.size()) return nlohmann::json(labels[v]).dump();
      return "?";
    case DomainKind::integer:
      break;
  }
  return std::to_string(v);
}

std::optional<std::int64_t> Domain::parse(std::string_view text) const {
  std::optional<std::int64_t> value;
  switch (kind) {
    case DomainKind::boolean:
      if (text == "true") value = 1;
      if (text == "false") value = 0;
      break;
    case DomainKind::enumeration: {
      auto parsed = nlohmann::json::parse(text, nullptr, false);
      if (!parsed.is_string()) return std::nullopt;
      auto it = std::find(labels.begin(), labels.end(), parsed.get<std::string>());
      if (it != labels.end()) value = it - labels.begin();
      break;
    }
    case DomainKind::integer: {
      std::int64_t v = 0;
      auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (ec == std::errc() && ptr == text.data() + text.size()) value = v;
      break;
    }
  }
  if (value && !contains(*value)) return std::nullopt;
  return value;
}

std::optional<std::size_t> Api::find_domain(std::string_view name) const { return find_named(domains, name); }
std::optional<std::size_t> Api::find_type(std::string_view name) const { return find_named(types, name); }
std::optional<std::size_t> Api::find_routine(std::string_view name) const { return find_named(routines, name); }

std::string_view outcome_kind_name(OutcomeKind kind) {
  switch (kind) {
    case OutcomeKind::crashed:
      return "crashed";
    case OutcomeKind::completed:
      return "completed";
    case OutcomeKind::budget_exceeded:
      return "budget_exceeded";
  }
  return "unknown";
}

std::vector<CoveredLine> ExecutionOutcome::covered_lines() const {
  std::vector<CoveredLine> lines;
  for (const auto& p : probes) {
    if (p.reached || p.executed) lines.push_back({p.routine, p.line});
  }
  return lines;
}

const LineProbe* ExecutionOutcome::find_probe(std::size_t routine, int line) const {
  auto it = std::lower_bound(probes.begin(), probes.end(), std::make_pair(routine, line),
                             [](const LineProbe& p, const std::pair<std::size_t, int>& key) {
                               return std::make_pair(p.routine, p.line) < key;
                             });
  if (it == probes.end() || it->routine != routine || it->line != line) return nullptr;
  return &*it;
}

CrashCase bind_case(std::string id, StackTrace trace, int target_frame_level, const Api& api) {
  if (auto problem = check_trace(trace)) throw CaseBindingError("invalid trace: " + *problem);
  if (target_frame_level < 1 || static_cast<std::size_t>(target_frame_level) > trace.frames.size()) {
    throw CaseBindingError("target frame " + std::to_string(target_frame_level) + " outside trace of " +
                           std::to_string(trace.frames.size()) + " frames");
  }
  const StackFrame& frame = trace.frames[static_cast<std::size_t>(target_frame_level) - 1];
  auto routine = api.find_routine(frame.routine);
  if (!routine) throw CaseBindingError("target routine '" + frame.routine + "' is not part of the api");
  CrashCase crash;
  crash.id = std::move(id);
  crash.target_frame_level = target_frame_level;
  crash.target_routine = *routine;
  crash.target_line = frame.line;
  crash.trace = std::move(trace);
  return crash;
}

}  // namespace crashrepro
