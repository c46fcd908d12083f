#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace crashrepro {

struct StackFrame {
  std::string unit_path;
  std::string routine;
  std::string file;
  int line = 1;

  bool operator==(const StackFrame&) const = default;
};

// Frames are ordered innermost (throw site) first.
struct StackTrace {
  std::string exception_type;
  std::optional<std::string> message;
  std::vector<StackFrame> frames;

  bool operator==(const StackTrace&) const = default;
};

enum class TraceGrammar {
  canonical,       // JVM-style "Type: msg" + "\tat unit.routine(File:line)"
  script_runtime,  // "Traceback (most recent call last):" ... "Type: msg"
};

std::optional<TraceGrammar> grammar_from_name(std::string_view name);
std::string_view grammar_name(TraceGrammar grammar);

class MalformedTrace : public std::runtime_error {
 public:
  MalformedTrace(std::size_t line_number, const std::string& reason);
  std::size_t line_number() const { return line_number_; }

 private:
  std::size_t line_number_;
};

class EmptyTrace : public std::runtime_error {
 public:
  EmptyTrace() : std::runtime_error("trace contains no frames") {}
};

StackTrace parse_trace(std::string_view text, TraceGrammar grammar = TraceGrammar::canonical);
std::string format_trace(const StackTrace& trace, TraceGrammar grammar = TraceGrammar::canonical);

// Checks the StackFrame/StackTrace field invariants; returns a reason on failure.
std::optional<std::string> check_trace(const StackTrace& trace);

// Bounded normalization x / (x + 1), mapping [0, inf) onto [0, 1).
constexpr double normalize(double x) { return x / (x + 1.0); }

double frame_distance(const StackFrame& expected, const StackFrame& actual);

// Compares frames 1..target_frame_level (1-based, innermost first). A missing
// actual frame contributes 1. Exception types are not compared here.
double trace_distance(const StackTrace& expected, int target_frame_level, const StackTrace& actual);

}  // namespace crashrepro
