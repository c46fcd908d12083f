#include "crashrepro/trace.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <string>

namespace crashrepro {

namespace {

constexpr std::string_view kScriptHeader = "Traceback (most recent call last):";
constexpr std::string_view kFramePrefix = "\tat ";
constexpr std::string_view kScriptFramePrefix = "  File \"";

bool has_space(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; });
}

bool is_token(std::string_view s) { return !s.empty() && !has_space(s); }

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (end == text.size()) break;
    start = end + 1;
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

std::optional<int> parse_line_number(std::string_view digits) {
  if (digits.empty() || !std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    return std::nullopt;
  }
  int value = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
  if (ec != std::errc() || ptr != digits.data() + digits.size() || value < 1) return std::nullopt;
  return value;
}

// "<type>" or "<type>: <message>"
std::optional<std::pair<std::string, std::optional<std::string>>> parse_header(std::string_view line) {
  std::size_t sep = line.find(": ");
  std::string_view type = sep == std::string_view::npos ? line : line.substr(0, sep);
  if (!is_token(type)) return std::nullopt;
  std::optional<std::string> message;
  if (sep != std::string_view::npos) message = std::string(line.substr(sep + 2));
  return std::make_pair(std::string(type), std::move(message));
}

std::optional<StackFrame> parse_canonical_frame(std::string_view line) {
  if (line.substr(0, kFramePrefix.size()) != kFramePrefix) return std::nullopt;
  std::string_view rest = line.substr(kFramePrefix.size());
  if (rest.empty() || rest.back() != ')') return std::nullopt;
  rest.remove_suffix(1);
  std::size_t open = rest.rfind('(');
  if (open == std::string_view::npos) return std::nullopt;
  std::string_view qualified = rest.substr(0, open);
  std::string_view location = rest.substr(open + 1);
  std::size_t dot = qualified.rfind('.');
  std::size_t colon = location.rfind(':');
  if (dot == std::string_view::npos || colon == std::string_view::npos) return std::nullopt;
  StackFrame frame;
  frame.unit_path = std::string(qualified.substr(0, dot));
  frame.routine = std::string(qualified.substr(dot + 1));
  frame.file = std::string(location.substr(0, colon));
  auto number = parse_line_number(location.substr(colon + 1));
  if (!number || !is_token(frame.unit_path) || !is_token(frame.routine) || !is_token(frame.file)) {
    return std::nullopt;
  }
  frame.line = *number;
  return frame;
}

std::string_view basename(std::string_view path) {
  std::size_t slash = path.find_last_of("/\\");
  return slash == std::string_view::npos ? path : path.substr(slash + 1);
}

std::string_view stem(std::string_view file) {
  std::size_t dot = file.rfind('.');
  return dot == std::string_view::npos || dot == 0 ? file : file.substr(0, dot);
}

// `  File "<path>", line <n>, in <routine>`
std::optional<StackFrame> parse_script_frame(std::string_view line) {
  if (line.substr(0, kScriptFramePrefix.size()) != kScriptFramePrefix) return std::nullopt;
  std::string_view rest = line.substr(kScriptFramePrefix.size());
  std::size_t close = rest.find("\", line ");
  if (close == std::string_view::npos) return std::nullopt;
  std::string_view path = rest.substr(0, close);
  rest = rest.substr(close + 8);
  std::size_t in = rest.find(", in ");
  if (in == std::string_view::npos) return std::nullopt;
  auto number = parse_line_number(rest.substr(0, in));
  std::string_view routine = rest.substr(in + 5);
  std::string_view file = basename(path);
  if (!number || !is_token(routine) || !is_token(file)) return std::nullopt;
  return StackFrame{std::string(stem(file)), std::string(routine), std::string(file), *number};
}

StackTrace parse_canonical(const std::vector<std::string_view>& lines) {
  auto header = parse_header(lines[0]);
  if (!header) throw MalformedTrace(1, "expected '<exception_type>[: <message>]'");
  StackTrace trace{std::move(header->first), std::move(header->second), {}};
  for (std::size_t i = 1; i < lines.size(); ++i) {
    auto frame = parse_canonical_frame(lines[i]);
    if (!frame) throw MalformedTrace(i + 1, "expected '\\tat <unit>.<routine>(<file>:<line>)'");
    trace.frames.push_back(std::move(*frame));
  }
  return trace;
}

StackTrace parse_script(const std::vector<std::string_view>& lines) {
  if (lines[0] != kScriptHeader) throw MalformedTrace(1, "expected 'Traceback (most recent call last):'");
  std::vector<StackFrame> outermost_first;
  std::size_t i = 1;
  while (i < lines.size() && lines[i].substr(0, 2) == "  ") {
    if (lines[i].substr(0, kScriptFramePrefix.size()) == kScriptFramePrefix) {
      auto frame = parse_script_frame(lines[i]);
      if (!frame) throw MalformedTrace(i + 1, "expected '  File \"<file>\", line <n>, in <routine>'");
      outermost_first.push_back(std::move(*frame));
    } else if (outermost_first.empty() || lines[i].substr(0, 4) != "    ") {
      throw MalformedTrace(i + 1, "unexpected indented line");
    }
    // Indented source and caret lines under a frame are skipped.
    ++i;
  }
  if (i >= lines.size()) throw MalformedTrace(lines.size(), "missing exception line");
  auto header = parse_header(lines[i]);
  if (!header) throw MalformedTrace(i + 1, "expected '<exception_type>[: <message>]'");
  if (i + 1 < lines.size()) throw MalformedTrace(i + 2, "unexpected text after exception line");
  StackTrace trace{std::move(header->first), std::move(header->second), {}};
  trace.frames.assign(outermost_first.rbegin(), outermost_first.rend());
  return trace;
}

}  // namespace

MalformedTrace::MalformedTrace(std::size_t line_number, const std::string& reason)
    : std::runtime_error("malformed trace at line " + std::to_string(line_number) + ": " + reason),
      line_number_(line_number) {}

std::optional<TraceGrammar> grammar_from_name(std::string_view name) {
  if (name == "canonical") return TraceGrammar::canonical;
  if (name == "script-runtime") return TraceGrammar::script_runtime;
  return std::nullopt;
}

std::string_view grammar_name(TraceGrammar grammar) {
  return grammar == TraceGrammar::canonical ? "canonical" : "script-runtime";
}

StackTrace parse_trace(std::string_view text, TraceGrammar grammar) {
  auto lines = split_lines(text);
  if (lines.empty()) throw MalformedTrace(1, "empty input");
  StackTrace trace = grammar == TraceGrammar::canonical ? parse_canonical(lines) : parse_script(lines);
  if (trace.frames.empty()) throw EmptyTrace();
  return trace;
}

std::string format_trace(const StackTrace& trace, TraceGrammar grammar) {
  std::string header = trace.exception_type;
  if (trace.message) header += ": " + *trace.message;

  std::string out;
  if (grammar == TraceGrammar::canonical) {
    out = header + "\n";
    for (const auto& f : trace.frames) {
      out += "\tat " + f.unit_path + "." + f.routine + "(" + f.file + ":" + std::to_string(f.line) + ")\n";
    }
    return out;
  }
  out = std::string(kScriptHeader) + "\n";
  for (auto it = trace.frames.rbegin(); it != trace.frames.rend(); ++it) {
    out += "  File \"" + it->file + "\", line " + std::to_string(it->line) + ", in " + it->routine + "\n";
  }
  out += header + "\n";
  return out;
}

std::optional<std::string> check_trace(const StackTrace& trace) {
  if (!is_token(trace.exception_type)) return "exception type must be a non-empty token";
  if (trace.message && trace.message->find('\n') != std::string::npos) return "message spans lines";
  if (trace.frames.empty()) return "trace has no frames";
  for (const auto& f : trace.frames) {
    if (!is_token(f.unit_path) || !is_token(f.routine) || !is_token(f.file)) {
      return "frame fields must be non-empty tokens";
    }
    if (f.line < 1) return "frame line must be >= 1";
  }
  return std::nullopt;
}

double frame_distance(const StackFrame& expected, const StackFrame& actual) {
  if (expected.unit_path != actual.unit_path || expected.routine != actual.routine) return 1.0;
  return normalize(std::abs(static_cast<double>(expected.line) - static_cast<double>(actual.line)));
}

double trace_distance(const StackTrace& expected, int target_frame_level, const StackTrace& actual) {
  const std::size_t levels = std::min<std::size_t>(std::max(target_frame_level, 0), expected.frames.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < levels; ++i) {
    sum += i < actual.frames.size() ? frame_distance(expected.frames[i], actual.frames[i]) : 1.0;
  }
  return normalize(sum);
}

}  // namespace crashrepro
